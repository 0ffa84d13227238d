"""Report and artifact writers: JSON, CSV (rationals as p/q), PGM rasters."""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

from .exact_linalg import frac_str


def _default(o):
    if isinstance(o, Fraction):
        return frac_str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, default=_default, sort_keys=True, indent=2) + "\n"


def write_json(obj, path) -> None:
    text = dumps(obj)
    if path in (None, "-"):
        import sys
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def write_points_csv(points, path, header=None) -> int:
    """One vector per row; exact rationals are written as p/q."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    pts = list(points)
    if header is None and pts:
        header = [f"x{i}" for i in range(len(pts[0]))]
    if header:
        w.writerow(header)
    for p in pts:
        w.writerow([frac_str(Fraction(x)) if isinstance(x, (int, Fraction)) else repr(float(x))
                    for x in p])
    Path(path).write_text(buf.getvalue())
    return len(pts)


def read_points_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and any(not _looks_numeric(c) for c in rows[0]):
        rows = rows[1:]
    return [tuple(Fraction(c) for c in r) for r in rows if r]


def _looks_numeric(s: str) -> bool:
    try:
        Fraction(s)
        return True
    except (ValueError, ZeroDivisionError):
        return False


def density_raster(points: np.ndarray, size: int, bounds=None) -> np.ndarray:
    """Occupancy histogram of 2-D points as an 8-bit image (row 0 at the top)."""
    pts = np.asarray(points, dtype=float)
    if bounds is None:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.02 * np.maximum(hi - lo, 1e-9)
        bounds = (lo - pad, hi + pad)
    lo, hi = bounds
    H, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=size,
                             range=[[lo[0], hi[0]], [lo[1], hi[1]]])
    img = np.where(H.T[::-1] > 0, 0, 255).astype(np.uint8)
    return img


def write_pgm(img: np.ndarray, path) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path, format="PPM")
