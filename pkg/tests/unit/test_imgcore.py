from __future__ import annotations

import numpy as np
import pytest

from OCL.errors import GeometryError, MissingInputError, PpmFormatError
from OCL.imgcore import (
    BBox,
    ImageRGB,
    Rng,
    intersect,
    iou,
    load_ppm,
    ppm_read,
    ppm_write,
    resize_bilinear,
    save_ppm,
    union_area,
)


# --- geometry ---
def test_intersect_identity_disjoint_and_partial() -> None:
    a = BBox(10, 10, 20, 20)
    assert intersect(a, a) == a
    assert intersect(BBox(0, 0, 5, 5), BBox(10, 10, 5, 5)) is None
    assert intersect(BBox(0, 0, 20, 20), BBox(10, 10, 20, 20)) == BBox(10, 10, 10, 10)


def test_touching_boxes_do_not_intersect() -> None:
    assert intersect(BBox(0, 0, 10, 10), BBox(10, 0, 10, 10)) is None


def test_iou_values() -> None:
    a = BBox(3, 4, 5, 6)
    assert iou(a, a) == 1.0
    assert iou(BBox(0, 0, 5, 5), BBox(10, 10, 5, 5)) == 0.0
    assert iou(BBox(0, 0, 2, 2), BBox(1, 1, 2, 2)) == pytest.approx(1 / 7)


def test_iou_is_symmetric_and_bounded() -> None:
    rng = Rng(11)
    for _ in range(50):
        a = BBox(rng.integers(0, 20), rng.integers(0, 20), rng.integers(1, 20), rng.integers(1, 20))
        b = BBox(rng.integers(0, 20), rng.integers(0, 20), rng.integers(1, 20), rng.integers(1, 20))
        assert iou(a, b) == iou(b, a)
        assert 0.0 <= iou(a, b) <= 1.0


def test_box_rejects_empty_and_negative() -> None:
    with pytest.raises(GeometryError) as exc:
        BBox(0, 0, 0, 5)
    assert exc.value.code == "BOX_EMPTY"
    with pytest.raises(GeometryError) as exc:
        BBox(-1, 0, 5, 5)
    assert exc.value.code == "BOX_NEGATIVE_ORIGIN"
    with pytest.raises(GeometryError):
        BBox.from_list([1, 2, 3])


def test_from_edges_truncates_toward_interior() -> None:
    assert BBox.from_edges(0.4, 1.6, 10.9, 12.2) == BBox(1, 2, 9, 10)
    assert BBox.from_edges(5.2, 0, 5.8, 10) is None


def test_union_area_counts_overlap_once() -> None:
    boxes = [BBox(0, 0, 10, 10), BBox(5, 5, 10, 10), BBox(40, 40, 2, 2)]
    mask = np.zeros((60, 60), dtype=bool)
    for b in boxes:
        mask[b.y : b.y2, b.x : b.x2] = True
    assert union_area(boxes) == int(mask.sum())
    assert union_area([]) == 0


# --- resize ---
def _oracle_resize(pixels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    in_h, in_w, channels = pixels.shape
    out = np.zeros((out_h, out_w, channels), dtype=np.uint8)
    for oy in range(out_h):
        sy = min(max((oy + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1)
        y0 = int(np.floor(sy))
        y1 = min(y0 + 1, in_h - 1)
        fy = sy - y0
        for ox in range(out_w):
            sx = min(max((ox + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1)
            x0 = int(np.floor(sx))
            x1 = min(x0 + 1, in_w - 1)
            fx = sx - x0
            for c in range(channels):
                top = float(pixels[y0, x0, c]) * (1 - fx) + float(pixels[y0, x1, c]) * fx
                bottom = float(pixels[y1, x0, c]) * (1 - fx) + float(pixels[y1, x1, c]) * fx
                v = top * (1 - fy) + bottom * fy
                out[oy, ox, c] = min(max(int(np.floor(v + 0.5)), 0), 255)
    return out


def test_resize_same_size_is_identity() -> None:
    img = ImageRGB(np.asarray(Rng(1).integers(0, 256, (7, 9, 3)), dtype=np.uint8))
    assert resize_bilinear(img, 9, 7) == img


def test_resize_constant_stays_constant() -> None:
    img = ImageRGB.filled(13, 5, (12, 200, 77))
    out = resize_bilinear(img, 31, 3)
    assert out == ImageRGB.filled(31, 3, (12, 200, 77))


def test_resize_2x2_to_1x1_matches_oracle() -> None:
    pixels = np.array([[[0] * 3, [100] * 3], [[200] * 3, [40] * 3]], dtype=np.uint8)
    out = resize_bilinear(ImageRGB(pixels), 1, 1)
    assert out.pixels[0, 0, 0] == 85
    assert np.array_equal(out.pixels, _oracle_resize(pixels, 1, 1))


@pytest.mark.parametrize("size", [(5, 3), (17, 11), (2, 9)])
def test_resize_random_matches_oracle(size) -> None:
    pixels = np.asarray(Rng(5).integers(0, 256, (6, 8, 3)), dtype=np.uint8)
    out = resize_bilinear(ImageRGB(pixels), *size)
    assert np.array_equal(out.pixels, _oracle_resize(pixels, *size))


# --- image buffer ---
def test_image_rejects_bad_layout() -> None:
    with pytest.raises(GeometryError):
        ImageRGB(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(GeometryError) as exc:
        ImageRGB.from_bytes(2, 2, b"\x00" * 11)
    assert exc.value.code == "IMAGE_LENGTH"


def test_crop_outside_image_is_error() -> None:
    img = ImageRGB.filled(10, 10, (0, 0, 0))
    assert img.crop(BBox(2, 3, 4, 5)).width == 4
    with pytest.raises(GeometryError):
        img.crop(BBox(8, 8, 4, 4))


def test_flip_twice_is_identity() -> None:
    img = ImageRGB(np.asarray(Rng(2).integers(0, 256, (4, 6, 3)), dtype=np.uint8))
    assert img.flip_horizontal() != img
    assert img.flip_horizontal().flip_horizontal() == img


# --- PPM ---
def test_ppm_write_red_pixel() -> None:
    assert ppm_write(ImageRGB.filled(1, 1, (255, 0, 0))) == b"P6\n1 1\n255\n\xff\x00\x00"


def test_ppm_round_trip_random_image() -> None:
    img = ImageRGB(np.asarray(Rng(9).integers(0, 256, (11, 7, 3)), dtype=np.uint8))
    assert ppm_read(ppm_write(img)) == img


def test_ppm_read_accepts_header_comments() -> None:
    img = ppm_read(b"P6\n# made by hand\n2 1\n255\n\x01\x02\x03\x04\x05\x06")
    assert (img.width, img.height) == (2, 1)
    assert img.data == b"\x01\x02\x03\x04\x05\x06"


def test_ppm_truncated_payload() -> None:
    with pytest.raises(PpmFormatError, match="unexpected end of data"):
        ppm_read(b"P6\n2 2\n255\n\x00\x00\x00")


@pytest.mark.parametrize(
    "raw, message",
    [
        (b"P3\n1 1\n255\n\x00\x00\x00", "bad magic"),
        (b"P6\nx 1\n255\n\x00\x00\x00", "malformed width"),
        (b"P6\n1 1\n65535\n\x00\x00\x00", "unsupported maxval"),
    ],
)
def test_ppm_header_errors_name_an_offset(raw, message) -> None:
    with pytest.raises(PpmFormatError, match=message) as exc:
        ppm_read(raw)
    assert "offset" in exc.value.details


def test_save_and_load_ppm(tmp_path) -> None:
    img = ImageRGB.filled(3, 2, (1, 2, 3))
    save_ppm(tmp_path / "a" / "img.ppm", img)
    assert load_ppm(tmp_path / "a" / "img.ppm") == img
    with pytest.raises(MissingInputError):
        load_ppm(tmp_path / "missing.ppm")
