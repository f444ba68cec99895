import struct

import numpy as np
import pytest
from PIL import Image

from tvtrpca import fileio
from tvtrpca.solver import Decomposition, default_config


def test_raw_round_trip(tmp_path, rng):
    x = rng.normal(size=(3, 4, 5))
    p = tmp_path / "x.t3f"
    fileio.write_raw(p, x)
    np.testing.assert_array_equal(fileio.read_raw(p), x)


def test_raw_layout(tmp_path):
    x = np.arange(12.0).reshape(2, 3, 2)
    p = tmp_path / "x.t3f"
    fileio.write_raw(p, x)
    data = p.read_bytes()
    assert struct.unpack_from("<4sIII", data) == (b"T3F1", 2, 3, 2)
    payload = np.frombuffer(data, "<f8", offset=16)
    # frame-major, row-major within a frame
    np.testing.assert_array_equal(payload[:6], x[:, :, 0].ravel())


@pytest.mark.parametrize("mutate", [lambda d: b"XXXX" + d[4:], lambda d: d[:-8], lambda d: d[:10]])
def test_raw_rejects_corruption(tmp_path, rng, mutate):
    p = tmp_path / "x.t3f"
    fileio.write_raw(p, rng.normal(size=(2, 2, 2)))
    p.write_bytes(mutate(p.read_bytes()))
    with pytest.raises(ValueError):
        fileio.read_raw(p)


def test_sequence_round_trip(tmp_path, rng):
    x = np.rint(rng.uniform(size=(6, 5, 3)) * 255) / 255
    fileio.save_sequence(x, tmp_path / "seq")
    np.testing.assert_allclose(fileio.load_sequence(tmp_path / "seq"), x, atol=1e-12)


def test_sequence_rgb_is_converted(tmp_path):
    d = tmp_path / "rgb"
    d.mkdir()
    for k in range(2):
        Image.fromarray(np.full((4, 4, 3), 100 + k, np.uint8)).save(d / f"f{k}.png")
    x = fileio.load_sequence(d)
    assert x.shape == (4, 4, 2)


def test_sequence_errors(tmp_path):
    d = tmp_path / "one"
    d.mkdir()
    Image.fromarray(np.zeros((4, 4), np.uint8)).save(d / "a.pgm")
    with pytest.raises(ValueError):
        fileio.load_sequence(d)
    Image.fromarray(np.zeros((5, 4), np.uint8)).save(d / "b.pgm")
    with pytest.raises(ValueError):
        fileio.load_sequence(d)
    with pytest.raises(FileNotFoundError):
        fileio.load_sequence(tmp_path / "missing")


def test_display_scaling():
    assert (fileio.to_display(np.full((2, 2, 2), 3.0)) == 128).all()
    out = fileio.to_display(np.array([[[-1.0, 1.0]]]))
    np.testing.assert_array_equal(out, [[[0, 255]]])


def test_masks_round_trip(tmp_path, rng):
    m = rng.uniform(size=(5, 6, 3)) > 0.5
    fileio.save_masks(m, tmp_path, indices=[2, 4, 9])
    loaded = fileio.load_masks(tmp_path)
    assert sorted(loaded) == ["mask_002", "mask_004", "mask_009"]
    np.testing.assert_array_equal(loaded["mask_004"], m[:, :, 1])


def test_frame_index():
    assert fileio.frame_index("mask_017", 3) == 17
    assert fileio.frame_index("vessel", 3) == 3


def test_save_layers(tmp_path, rng):
    dims = (4, 4, 2)
    dec = Decomposition(*(rng.normal(size=dims) for _ in range(4)), iterations=3,
                        converged=False, residual_history=[0.5, 0.25, 0.125])
    fileio.save_layers(dec, tmp_path, default_config(dims))
    np.testing.assert_array_equal(fileio.read_raw(tmp_path / "foreground.t3f"), dec.foreground)
    assert (tmp_path / "noise" / "frame_001.pgm").exists()
    meta = fileio.read_config(tmp_path / "metadata.txt")
    assert float(meta["lambda1"]) == default_config(dims).lambda1
    assert meta["iterations"] == "3" and meta["residual_history"] == "0.5, 0.25, 0.125"


def test_read_config(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\nrho = 1.2  # trailing\n\nimax=40\n")
    assert fileio.read_config(p) == {"rho": "1.2", "imax": "40"}
    p.write_text("rho 1.2\n")
    with pytest.raises(ValueError):
        fileio.read_config(p)
