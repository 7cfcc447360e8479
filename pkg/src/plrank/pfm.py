"""Portable Float Map I/O with a PGM validity-mask sidecar.

Grayscale PFM layout: token "Pf", then width and height, then a scale token
whose sign encodes endianness (negative = little-endian), each separated by
whitespace, followed immediately by H*W raw 32-bit floats in bottom-to-top
row order. The validity mask travels as a binary PGM (P5, maxval 255,
255 = valid) at `path + ".mask.pgm"`; a missing sidecar means all-valid.

Round trips are bit-exact: values are float32 on disk and in DepthMap.
"""

from __future__ import annotations

import os

import numpy as np

from .depth import DepthMap
from .errors import FormatError

__all__ = ["MASK_SUFFIX", "read_pfm", "read_pfm_values", "write_pfm", "write_pfm_values"]

MASK_SUFFIX = ".mask.pgm"
_WHITESPACE = b" \t\n\r\x0b\x0c"


def _read_token(f, path) -> bytes:
    token = b""
    while True:
        ch = f.read(1)
        if not ch:
            if token:
                return token
            raise FormatError(f"{path}: truncated header")
        if ch in _WHITESPACE:
            if token:
                return token  # the single terminating whitespace byte is consumed
            continue
        token += ch


def _header_int(token: bytes, path, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"{path}: bad {what} {token!r}") from None
    if value <= 0:
        raise FormatError(f"{path}: {what} must be positive, got {value}")
    return value


def read_pfm_values(path) -> tuple[np.ndarray, bool]:
    """Read a grayscale PFM. Returns (values as native float32, little_endian)."""
    path = os.fspath(path)
    with open(path, "rb") as f:
        magic = _read_token(f, path)
        if magic == b"PF":
            raise FormatError(f"{path}: color PFM not supported, expected grayscale 'Pf'")
        if magic != b"Pf":
            raise FormatError(f"{path}: not a PFM file (magic {magic!r})")
        width = _header_int(_read_token(f, path), path, "width")
        height = _header_int(_read_token(f, path), path, "height")
        scale_token = _read_token(f, path)
        try:
            scale = float(scale_token)
        except ValueError:
            raise FormatError(f"{path}: bad scale {scale_token!r}") from None
        if scale == 0:
            raise FormatError(f"{path}: scale must be nonzero")
        little_endian = scale < 0
        expected = height * width * 4
        data = f.read(expected)
        if len(data) != expected:
            raise FormatError(f"{path}: expected {expected} data bytes, got {len(data)}")
    dtype = "<f4" if little_endian else ">f4"
    rows = np.frombuffer(data, dtype=dtype).reshape(height, width)
    return np.flipud(rows).astype(np.float32), little_endian


def write_pfm_values(values, path, little_endian: bool = True) -> None:
    """Write a 2-D array as grayscale PFM (values cast to float32)."""
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"PFM data must be 2-D, got shape {arr.shape}")
    height, width = arr.shape
    scale = "-1.0" if little_endian else "1.0"
    header = f"Pf\n{width} {height}\n{scale}\n".encode("ascii")
    data = np.flipud(arr).astype("<f4" if little_endian else ">f4").tobytes()
    with open(os.fspath(path), "wb") as f:
        f.write(header)
        f.write(data)


def _write_pgm_mask(mask: np.ndarray, path) -> None:
    height, width = mask.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    with open(os.fspath(path), "wb") as f:
        f.write(header)
        f.write(np.where(mask, 255, 0).astype(np.uint8).tobytes())


def _read_pgm_mask(path) -> np.ndarray:
    path = os.fspath(path)
    with open(path, "rb") as f:
        magic = _read_token(f, path)
        if magic != b"P5":
            raise FormatError(f"{path}: mask sidecar must be binary PGM 'P5' (got {magic!r})")
        width = _header_int(_read_token(f, path), path, "width")
        height = _header_int(_read_token(f, path), path, "height")
        maxval = _header_int(_read_token(f, path), path, "maxval")
        if maxval != 255:
            raise FormatError(f"{path}: mask maxval must be 255, got {maxval}")
        expected = height * width
        data = f.read(expected)
        if len(data) != expected:
            raise FormatError(f"{path}: expected {expected} mask bytes, got {len(data)}")
    return (np.frombuffer(data, dtype=np.uint8) == 255).reshape(height, width)


def write_pfm(depth_map: DepthMap, path, little_endian: bool = True) -> None:
    """Write a DepthMap as PFM plus its PGM mask sidecar."""
    write_pfm_values(depth_map.values, path, little_endian)
    _write_pgm_mask(depth_map.mask, os.fspath(path) + MASK_SUFFIX)


def read_pfm(path) -> DepthMap:
    """Read a DepthMap from PFM (+ sidecar mask when present)."""
    values, _ = read_pfm_values(path)
    sidecar = os.fspath(path) + MASK_SUFFIX
    if os.path.exists(sidecar):
        mask = _read_pgm_mask(sidecar)
        if mask.shape != values.shape:
            raise FormatError(
                f"{sidecar}: mask dimensions {mask.shape} do not match map {values.shape}"
            )
    else:
        mask = np.ones(values.shape, dtype=bool)
    try:
        return DepthMap(values, mask)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"{os.fspath(path)}: {exc}") from None
