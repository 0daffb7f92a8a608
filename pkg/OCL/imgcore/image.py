"""8-bit RGB rasters, bilinear resizing and the binary PPM (P6) codec."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from OCL.errors import GeometryError, MissingInputError, PpmFormatError
from OCL.imgcore.geometry import BBox


@dataclass(frozen=True, eq=False)
class ImageRGB:
    """Row-major interleaved RGB bytes held as a read-only ``(height, width, 3)`` uint8 array."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
            raise GeometryError(f"expected (h, w, 3) uint8 pixels, got {arr.dtype} {arr.shape}", code="IMAGE_LAYOUT")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise GeometryError("image must be at least 1x1", code="IMAGE_EMPTY")
        arr = np.ascontiguousarray(arr).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "ImageRGB":
        expected = width * height * 3
        if width < 1 or height < 1 or len(data) != expected:
            raise GeometryError(
                f"data length {len(data)} does not match {width}x{height}x3 = {expected}", code="IMAGE_LENGTH"
            )
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3))

    @classmethod
    def filled(cls, width: int, height: int, color) -> "ImageRGB":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[...] = np.asarray(color, dtype=np.uint8)
        return cls(arr)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageRGB):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self) -> str:
        return f"ImageRGB({self.width}x{self.height})"

    def crop(self, box: BBox) -> "ImageRGB":
        if not box.inside(self.width, self.height):
            raise GeometryError(f"crop {box.to_list()} outside {self.width}x{self.height} image", code="CROP_OUTSIDE")
        return ImageRGB(self.pixels[box.y : box.y2, box.x : box.x2])

    def flip_horizontal(self) -> "ImageRGB":
        return ImageRGB(self.pixels[:, ::-1])


def _axis_weights(in_len: int, out_len: int):
    # half-pixel centres: src = (i + 0.5) * in/out - 0.5, clamped to the valid range
    scale = in_len / out_len
    src = (np.arange(out_len, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_len - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, in_len - 1)
    frac = src - i0
    return i0, i1, frac


def resize_array(arr: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize of a (h, w) or (h, w, c) array; returns float64 (unrounded)."""
    if out_w < 1 or out_h < 1:
        raise GeometryError(f"output size must be >= 1, got {out_w}x{out_h}", code="RESIZE_SIZE")
    src = np.asarray(arr, dtype=np.float64)
    in_h, in_w = src.shape[:2]
    x0, x1, fx = _axis_weights(in_w, out_w)
    y0, y1, fy = _axis_weights(in_h, out_h)
    if src.ndim == 3:
        fx = fx[None, :, None]
        fy = fy[:, None, None]
    else:
        fx = fx[None, :]
        fy = fy[:, None]
    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def round_to_u8(values: np.ndarray) -> np.ndarray:
    """Round half up and saturate into 0..255."""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def resize_bilinear(img: ImageRGB, out_w: int, out_h: int) -> ImageRGB:
    if out_w == img.width and out_h == img.height:
        return img
    return ImageRGB(round_to_u8(resize_array(img.pixels, out_w, out_h)))


# --- PPM codec ---
_WHITESPACE = b" \t\n\r\x0b\x0c"


class _HeaderReader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def skip_space(self) -> None:
        raw = self.raw
        while self.pos < len(raw):
            ch = raw[self.pos : self.pos + 1]
            if ch == b"#":
                while self.pos < len(raw) and raw[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif ch in _WHITESPACE:
                self.pos += 1
            else:
                break

    def integer(self, what: str) -> int:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.raw) and self.raw[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if self.pos == start:
            if start >= len(self.raw):
                raise PpmFormatError("unexpected end of data", start)
            raise PpmFormatError(f"malformed {what}", start)
        return int(self.raw[start : self.pos])


def ppm_read(raw: bytes) -> ImageRGB:
    """Parse binary NetPBM P6 with maxval 255."""
    raw = bytes(raw)
    if len(raw) < 2:
        raise PpmFormatError("unexpected end of data", len(raw))
    if raw[:2] != b"P6":
        raise PpmFormatError("bad magic, expected P6", 0)
    reader = _HeaderReader(raw)
    reader.pos = 2
    if reader.pos < len(raw) and raw[reader.pos : reader.pos + 1] not in _WHITESPACE + b"#":
        raise PpmFormatError("bad magic, expected P6", 0)
    width_at = reader.pos
    width = reader.integer("width")
    height = reader.integer("height")
    if width < 1 or height < 1:
        raise PpmFormatError(f"invalid dimensions {width}x{height}", width_at)
    maxval_at = reader.pos
    maxval = reader.integer("maxval")
    if maxval != 255:
        raise PpmFormatError(f"unsupported maxval {maxval}, expected 255", maxval_at)
    if reader.pos >= len(raw):
        raise PpmFormatError("unexpected end of data", reader.pos)
    if raw[reader.pos : reader.pos + 1] not in _WHITESPACE:
        raise PpmFormatError("expected single whitespace after maxval", reader.pos)
    start = reader.pos + 1
    need = width * height * 3
    payload = raw[start : start + need]
    if len(payload) < need:
        raise PpmFormatError("unexpected end of data", len(raw))
    return ImageRGB.from_bytes(width, height, payload)


def ppm_write(img: ImageRGB) -> bytes:
    return f"P6\n{img.width} {img.height}\n255\n".encode("ascii") + img.data


def load_ppm(path: Union[str, Path]) -> ImageRGB:
    p = Path(path)
    if not p.exists():
        raise MissingInputError(f"image not found: {p}")
    return ppm_read(p.read_bytes())


def save_ppm(path: Union[str, Path], img: ImageRGB) -> None:
    from OCL.runs import atomic_write_bytes

    atomic_write_bytes(Path(path), ppm_write(img))
