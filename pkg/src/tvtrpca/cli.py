"""Command-line driver: ``tvtrpca {phantom,decompose,segment,evaluate,cnr}``.

Exit status is 0 on success, 1 on usage or input errors and 2 when the
numerics fail (non-finite iterates, nothing to segment).
"""
import argparse
import csv
from dataclasses import fields
import logging
from pathlib import Path
import sys

import numpy as np

from . import fileio
from .metrics import DEFAULT_BAND, cnr, prf, prf_from_counts
from .phantom import PhantomSpec, generate_phantom
from .segmentation import (EDGE_FRACTION, RLF_THRESHOLD, STAGE1_FRACTION, RlfParams,
                           SegmentationError, default_disk_radius, tsrg)
from .solver import NumericalError, SolverConfig, default_config, run

log = logging.getLogger("tvtrpca")

EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _coerce(cls, entries):
    """Convert string config entries to the field types of dataclass ``cls``."""
    kinds = {f.name: f.default for f in fields(cls)}
    out = {}
    for key, value in entries.items():
        if key not in kinds:
            continue
        default = kinds[key]
        if isinstance(default, tuple):
            out[key] = tuple(float(v) for v in value.split(","))
        elif isinstance(default, bool) or isinstance(default, str):
            out[key] = value
        elif isinstance(default, int):
            out[key] = int(value)
        else:
            out[key] = float(value)
    return out


def _check_keys(entries, *classes):
    known = {f.name for cls in classes for f in fields(cls)}
    unknown = sorted(set(entries) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")


def solver_config(dims, file_entries=None, **flags):
    """Default config for ``dims`` updated by config-file entries, then flags.

    When ``lambda1`` is changed and ``lambda2..4`` are not given they keep
    their default ratios to ``lambda1`` (100, 2.5 and 0.6).
    """
    values = _coerce(SolverConfig, file_entries or {})
    values.update({k: v for k, v in flags.items() if v is not None})
    if "lambda1" in values:
        lam1 = values["lambda1"]
        for key, ratio in (("lambda2", 100.0), ("lambda3", 2.5), ("lambda4", 0.6)):
            values.setdefault(key, ratio * lam1)
    return default_config(dims, **values)


def _load_input_tensor(path):
    path = Path(path)
    if path.is_file():
        return fileio.read_raw(path)
    if not path.exists():
        raise FileNotFoundError(f"input {path} does not exist")
    return fileio.load_sequence(path)


def cmd_phantom(args):
    spec = PhantomSpec(m=args.m, n=args.n, t=args.t, seed=args.seed,
                       noise_sigma=args.noise, tube_width=args.tube_width,
                       amplitude=args.amplitude)
    ph = generate_phantom(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_raw(out / "observation.t3f", ph.observation)
    fileio.save_sequence(ph.observation, out / "observation")
    truth = out / "truth"
    truth.mkdir(exist_ok=True)
    for name, layer in ph.truth.layers().items():
        fileio.write_raw(truth / f"{name}.t3f", layer)
    fileio.save_masks(ph.masks, out / "masks")
    fileio.write_metadata(out / "phantom.txt", {f.name: getattr(spec, f.name) for f in fields(spec)})
    log.info("phantom %dx%dx%d written to %s", spec.m, spec.n, spec.t, out)
    return 0


def cmd_decompose(args):
    o = _load_input_tensor(args.input)
    entries = fileio.read_config(args.config) if args.config else {}
    _check_keys(entries, SolverConfig, RlfParams)
    cfg = solver_config(o.shape, entries, lambda1=args.lambda1, lambda2=args.lambda2,
                        lambda3=args.lambda3, lambda4=args.lambda4, mu0=args.mu0,
                        nu0=args.nu0, rho=args.rho, imax=args.imax, epsilon=args.epsilon)
    dec = run(o, cfg)
    fileio.save_layers(dec, args.output, cfg)
    log.info("decomposition: %d iterations, converged=%s", dec.iterations, dec.converged)
    return 0


def polarity_normalize(frame):
    """Map a foreground frame to vessels-bright [0, 1] via ``|value|``."""
    a = np.abs(frame)
    lo, hi = float(a.min()), float(a.max())
    return (a - lo) / (hi - lo) if hi > lo else np.zeros_like(a)


def cmd_segment(args):
    path = Path(args.input)
    if path.is_dir():
        path = path / "foreground.t3f"
    if not path.is_file():
        raise FileNotFoundError(f"foreground layer {path} not found")
    layer = fileio.read_raw(path)
    entries = fileio.read_config(args.config) if args.config else {}
    _check_keys(entries, SolverConfig, RlfParams)
    rlf_values = _coerce(RlfParams, entries)
    rlf_values.update({k: v for k, v in (("sup", args.rlf_sup), ("or_count", args.rlf_or),
                                         ("sc", args.rlf_sc)) if v is not None})
    params = RlfParams(**rlf_values)
    radius = args.disk_radius if args.disk_radius is not None else default_disk_radius(layer.shape)
    t = layer.shape[2]
    if args.frame is not None and not 0 <= args.frame < t:
        raise UsageError(f"--frame {args.frame} outside 0..{t - 1}")
    frames = [args.frame] if args.frame is not None else list(range(t))
    masks = np.zeros(layer.shape[:2] + (len(frames),), dtype=bool)
    for j, k in enumerate(frames):
        masks[:, :, j] = tsrg(polarity_normalize(layer[:, :, k]), params, radius)
    fileio.save_masks(masks, args.output, frames)
    fileio.write_metadata(Path(args.output) / "metadata.txt", {
        "sup": params.sup, "or_count": params.or_count, "sc": params.sc,
        "scales": params.scales, "disk_radius": radius,
        "stage1_fraction": STAGE1_FRACTION, "edge_fraction": EDGE_FRACTION,
        "rlf_threshold": RLF_THRESHOLD, "frames": frames,
    })
    return 0


def _paired_masks(pred_dir, truth_dir):
    pred = fileio.load_masks(pred_dir)
    truth = fileio.load_masks(truth_dir)
    common = sorted(set(pred) & set(truth))
    if not common:
        raise UsageError("no mask file names shared by --pred and --truth")
    return [(name, pred[name], truth[name]) for name in common]


def _fmt(x):
    return f"{x:.10g}" if isinstance(x, float) else str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def cmd_evaluate(args):
    rows, tp, fp, fn = [], 0, 0, 0
    for name, p, t in _paired_masks(args.pred, args.truth):
        r = prf(p, t)
        tp, fp, fn = tp + r.tp, fp + r.fp, fn + r.fn
        rows.append([name, r.tp, r.fp, r.fn, r.recall, r.precision, r.f_measure])
    agg = prf_from_counts(tp, fp, fn)
    rows.append(["aggregate", agg.tp, agg.fp, agg.fn, agg.recall, agg.precision, agg.f_measure])
    _write_csv(args.out, ["frame", "tp", "fp", "fn", "recall", "precision", "f_measure"], rows)
    return 0


def cmd_cnr(args):
    layer = fileio.read_raw(args.foreground)
    masks = fileio.load_masks(args.mask)
    rows = []
    for pos, name in enumerate(sorted(masks)):
        k = fileio.frame_index(name, pos)
        if not 0 <= k < layer.shape[2]:
            raise UsageError(f"mask {name} refers to frame {k}, layer has {layer.shape[2]}")
        rep = cnr(layer[:, :, k], masks[name], args.band)
        rows.append([name, rep.global_cnr, rep.local_cnr, rep.mu_v, rep.mu_b_global,
                     rep.mu_b_local, rep.sigma_b_global, rep.sigma_b_local])
    mean = np.mean([r[1:] for r in rows], axis=0)
    rows.append(["aggregate"] + [float(v) for v in mean])
    _write_csv(args.out, ["frame", "global_cnr", "local_cnr", "mu_v", "mu_b_global",
                          "mu_b_local", "sigma_b_global", "sigma_b_local"], rows)
    return 0


def build_parser():
    p = _Parser(prog="tvtrpca", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ph = sub.add_parser("phantom", help="write a synthetic sequence with ground truth")
    ph.add_argument("--m", type=int, default=128)
    ph.add_argument("--n", type=int, default=128)
    ph.add_argument("--t", type=int, default=20)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--noise", type=float, default=PhantomSpec.noise_sigma)
    ph.add_argument("--tube-width", type=float, default=PhantomSpec.tube_width)
    ph.add_argument("--amplitude", type=float, default=PhantomSpec.amplitude,
                    help="vessel sway in pixels")
    ph.add_argument("--out", required=True)
    ph.set_defaults(func=cmd_phantom)

    de = sub.add_parser("decompose", help="split a sequence into layers")
    de.add_argument("--input", required=True, help="frame directory or .t3f file")
    de.add_argument("--output", required=True)
    de.add_argument("--config")
    for name in ("lambda1", "lambda2", "lambda3", "lambda4", "mu0", "nu0", "rho", "epsilon"):
        de.add_argument(f"--{name}", type=float)
    de.add_argument("--imax", type=int)
    de.set_defaults(func=cmd_decompose)

    se = sub.add_parser("segment", help="two-stage region growth on a foreground layer")
    se.add_argument("--input", required=True, help="foreground .t3f or decompose output dir")
    se.add_argument("--output", required=True)
    se.add_argument("--config")
    se.add_argument("--disk-radius", type=int)
    se.add_argument("--rlf-sup", type=int)
    se.add_argument("--rlf-or", type=int)
    se.add_argument("--rlf-sc", type=float)
    se.add_argument("--frame", type=int)
    se.set_defaults(func=cmd_segment)

    ev = sub.add_parser("evaluate", help="recall / precision / F-measure per frame")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_evaluate)

    cn = sub.add_parser("cnr", help="global and local CNR per masked frame")
    cn.add_argument("--foreground", required=True)
    cn.add_argument("--mask", required=True)
    cn.add_argument("--out", required=True)
    cn.add_argument("--band", type=int, default=DEFAULT_BAND)
    cn.set_defaults(func=cmd_cnr)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (NumericalError, SegmentationError) as exc:
        print(f"tvtrpca {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, OSError) as exc:
        print(f"tvtrpca {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
