from __future__ import annotations

from pathlib import Path

import pytest

from OCL.imgcore import ImageRGB, load_ppm, ppm_write, save_ppm

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures" / "ppm"


def test_red_pixel_matches_golden_bytes(tmp_path: Path) -> None:
    out = tmp_path / "red.ppm"
    save_ppm(out, ImageRGB.filled(1, 1, (255, 0, 0)))
    assert out.read_bytes() == (FIXTURES / "red_1x1.ppm").read_bytes()


@pytest.mark.parametrize(
    "source_file,golden_file,flip",
    [
        ("quad_2x2_commented.ppm", "quad_2x2.ppm", False),
        ("quad_2x2.ppm", "quad_2x2.ppm", False),
        ("quad_2x2_commented.ppm", "quad_2x2_flipped.ppm", True),
    ],
)
def test_ppm_rewrites_match_golden_outputs(source_file: str, golden_file: str, flip: bool) -> None:
    img = load_ppm(FIXTURES / source_file)
    if flip:
        img = img.flip_horizontal()

    assert ppm_write(img) == (FIXTURES / golden_file).read_bytes()


def test_quad_pixels_are_row_major() -> None:
    img = load_ppm(FIXTURES / "quad_2x2.ppm")
    assert img.pixels.tolist() == [
        [[0, 0, 0], [255, 0, 0]],
        [[0, 255, 0], [0, 0, 255]],
    ]
