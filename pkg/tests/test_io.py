import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isardip import io as fio
from isardip.harness import render_figure
from isardip.radar import default_params, random_scene, rd_image, simulate_echo, to_db_image
from isardip.sampling import apply_mask, gen_mask

GOLDEN = Path(__file__).parent / "golden"


def test_cisr_roundtrip(tmp_path, rng):
    M = rng.standard_normal((7, 13)) + 1j * rng.standard_normal((7, 13))
    M[0, 0] = complex(-0.0, np.finfo(float).tiny)
    fio.save_matrix(M, tmp_path / "m.cisr")
    back = fio.load_matrix(tmp_path / "m.cisr")
    assert back.tobytes() == M.tobytes()


def test_cisr_layout():
    buf = fio.encode_matrix(np.array([[1 + 2j, 3 - 4j]]))
    assert buf[:4] == b"CISR"
    assert struct.unpack("<III", buf[4:16]) == (1, 1, 2)
    assert struct.unpack("<4d", buf[16:]) == (1.0, 2.0, 3.0, -4.0)


def test_cisr_errors():
    with pytest.raises(fio.FormatError, match="bad magic"):
        fio.decode_matrix(b"")
    with pytest.raises(fio.FormatError, match="truncated header"):
        fio.decode_matrix(b"CISR\x01\x00")
    short = struct.pack("<4sIII", b"CISR", 1, 4, 4) + b"\x00" * (16 * 3)
    with pytest.raises(fio.FormatError, match="truncated"):
        fio.decode_matrix(short)
    with pytest.raises(fio.FormatError, match="trailing"):
        fio.decode_matrix(struct.pack("<4sIII", b"CISR", 1, 1, 1) + b"\x00" * 17)
    with pytest.raises(fio.FormatError, match="overflow"):
        fio.decode_matrix(struct.pack("<4sIII", b"CISR", 1, 2**16, 2**16))


def test_mask_roundtrip(tmp_path):
    for kind in ("pixel", "column", "compressed"):
        m = gen_mask(kind, 0.4, 9, 11, 2**40 + 3)
        fio.save_mask(m, tmp_path / "m.imsk")
        back = fio.load_mask(tmp_path / "m.imsk")
        assert back == m
        assert fio.encode_mask(back) == fio.encode_mask(m)


def test_mask_errors():
    with pytest.raises(fio.FormatError, match="bad magic"):
        fio.decode_mask(b"CISR")
    buf = fio.encode_mask(gen_mask("pixel", 0.5, 3, 3, 0))
    with pytest.raises(fio.FormatError, match="truncated"):
        fio.decode_mask(buf[:-1])
    with pytest.raises(fio.FormatError):
        fio.decode_mask(buf[:-1] + b"\x02")


def test_gray_map():
    g = fio.db_to_gray(np.array([0.0, -20.0, -10.0, -25.0]), 20)
    assert list(g) == [255, 0, 128, 0]


def test_pgm_roundtrip(rng):
    g = rng.integers(0, 256, (5, 7)).astype(np.uint8)
    np.testing.assert_array_equal(fio.decode_pgm(fio.encode_pgm(g)), g)
    with pytest.raises(fio.FormatError):
        fio.decode_pgm(b"P6\n1 1\n255\n\x00")


def test_render_matches_hand_goldens(tmp_path):
    render_figure([np.zeros((2, 3)), np.array([[0, -10, -20], [-5, -15, -30.0]])],
                  ["uniform_0db", "ramp_20db"], tmp_path, top_db=20)
    for name in ("uniform_0db", "ramp_20db"):
        assert (tmp_path / f"{name}.pgm").read_bytes() == (GOLDEN / f"{name}.pgm").read_bytes()


def test_render_matches_scene_golden(tmp_path):
    M = simulate_echo(random_scene(default_params(32, 32), 6, seed=11, extent=6))
    mask = gen_mask("pixel", 0.5, 32, 32, 11)
    img = to_db_image(np.fft.fftshift(rd_image(apply_mask(M, mask))), 20)
    render_figure([img], ["zerofill_k6_s11_32x32"], tmp_path, top_db=20)
    name = "zerofill_k6_s11_32x32.pgm"
    assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes()


def test_render_needs_names(tmp_path):
    with pytest.raises(ValueError):
        render_figure([np.zeros((2, 2))], [], tmp_path)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_cisr_roundtrip_property(r, c, seed):
    g = np.random.default_rng(seed)
    M = (g.standard_normal((r, c)) + 1j * g.standard_normal((r, c))) * 10.0 ** g.integers(-300, 300)
    assert fio.decode_matrix(fio.encode_matrix(M)).tobytes() == M.tobytes()
