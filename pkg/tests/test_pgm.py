"""16-bit image I/O round trips and format validation."""

import numpy as np
import pytest

from galvomosaic import pgm


def test_u16_unit_roundtrip_is_exact():
    rng = np.random.default_rng(7)
    counts = rng.integers(0, 65536, size=(64, 64), dtype=np.uint16)
    assert np.array_equal(pgm.to_u16(pgm.to_unit(counts)), counts)


def test_to_u16_clamps_and_rounds_half_up():
    values = np.array([[-0.5, 0.0, 1.5 / 65535, 1.0, 2.0]])
    assert pgm.to_u16(values).tolist() == [[0, 0, 2, 65535, 65535]]


def test_pgm_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    img = rng.integers(0, 65536, size=(37, 53), dtype=np.uint16)
    path = tmp_path / "img.pgm"
    pgm.write_pgm(path, img)
    assert np.array_equal(pgm.read_pgm(path), img)


def test_pgm_header_comments_are_skipped(tmp_path):
    img = np.arange(6, dtype=np.uint16).reshape(2, 3)
    path = tmp_path / "img.pgm"
    raw = b"P5\n# produced by hand\n3 2\n# another comment\n65535\n" + img.astype(">u2").tobytes()
    path.write_bytes(raw)
    assert np.array_equal(pgm.read_pgm(path), img)


def test_pgm_rejects_wrong_magic(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n3 2\n65535\n")
    with pytest.raises(pgm.ImageFormatError):
        pgm.read_pgm(path)


def test_pgm_rejects_truncated_raster(tmp_path):
    path = tmp_path / "short.pgm"
    path.write_bytes(b"P5\n4 4\n65535\n\x00\x01")
    with pytest.raises(pgm.ImageFormatError):
        pgm.read_pgm(path)


def test_pgm_rejects_8bit_maxval(tmp_path):
    path = tmp_path / "8bit.pgm"
    path.write_bytes(b"P5\n1 1\n255\n\x00")
    with pytest.raises(pgm.ImageFormatError):
        pgm.read_pgm(path)


def test_write_pgm_requires_uint16():
    with pytest.raises(pgm.ImageFormatError):
        pgm.write_pgm("/tmp/never-written.pgm", np.zeros((2, 2), dtype=np.float64))


def test_png_roundtrip(tmp_path):
    pytest.importorskip("PIL")
    rng = np.random.default_rng(13)
    img = rng.integers(0, 65536, size=(21, 34), dtype=np.uint16)
    path = tmp_path / "img.png"
    pgm.write_png(path, img)
    assert np.array_equal(pgm.read_png(path), img)


def test_read_write_image_dispatch_on_extension(tmp_path):
    pytest.importorskip("PIL")
    img = np.full((4, 4), 1234, dtype=np.uint16)
    for name in ("a.pgm", "a.png"):
        path = tmp_path / name
        pgm.write_image(path, img)
        assert np.array_equal(pgm.read_image(path), img)
