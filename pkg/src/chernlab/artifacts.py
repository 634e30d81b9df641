"""CSV and PGM writers with a reproducibility header."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np


def canonical_json(config):
    return json.dumps(config, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_digest(config):
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def fmt(x):
    """Locale-free number formatting: 17 significant digits for floats."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x) if x != 0 else "0.0"
    return str(x)


def write_csv(path, columns, rows, config, comments=()):
    """Write ``rows`` under a ``#``-prefixed header carrying the config digest and echo.

    Output uses LF line endings and ``.`` decimals.
    """
    buf = io.StringIO(newline="")
    buf.write(f"# config_sha256: {config_digest(config)}\n")
    buf.write(f"# config: {canonical_json(config)}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")
    return Path(path)


def read_csv(path):
    """Parse a file written by ``write_csv``; returns ``(header_comments, columns, rows)``."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    comments = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    reader = list(csv.reader(body))
    return comments, reader[0], reader[1:]


#: Grey levels for a three-level Chern map; gapless cells get their own level.
CHERN_LEVELS = {-1: 0, 0: 128, 1: 255}
GAPLESS_LEVEL = 64


def chern_image(chern, gapless=None):
    chern = np.asarray(chern)
    img = np.full(chern.shape, 128, dtype=np.uint8)
    for value, level in CHERN_LEVELS.items():
        img[chern == value] = level
    img[chern > 1] = 255
    img[chern < -1] = 0
    if gapless is not None:
        img[np.asarray(gapless, dtype=bool)] = GAPLESS_LEVEL
    return img


def signed_image(values):
    """Map signed data to ``0..255`` symmetrically about 128."""
    v = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(v))) or 1.0
    return np.clip(np.rint(127.5 + 127.5 * v / scale), 0, 255).astype(np.uint8)


def write_pgm(path, image):
    """Binary 8-bit PGM (P5); row 0 of ``image`` is the top row."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("PGM images are two-dimensional")
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())
    return Path(path)


def read_pgm(path):
    data = Path(path).read_bytes()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit binary PGM")
    w, h = (int(x) for x in dims.split())
    return np.frombuffer(rest, dtype=np.uint8, count=w * h).reshape(h, w)
