"""
File formats: 16-bit PGM and flat CSV images, Matrix-Market matrices,
packed-bit pattern sets and the small CSV tables written by experiments.

Image CSV layout::

    width,height
    64,64
    v00,v01,...        # one line per image row, row-major
"""

from pathlib import Path
import struct

import numpy as np
from scipy import io as spio
from scipy import sparse

from .errors import UnsupportedFormat

PATTERN_MAGIC = b"SRFP"
PATTERN_VERSION = 1


def fmt(v):
    """Shortest round-trip text for a float."""
    v = float(v)
    if v == 0.0:
        return "0"
    return repr(v)


# -- PGM -------------------------------------------------------------------

def _pgm_tokens(data):
    tokens, pos = [], 2
    while len(tokens) < 3:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    return tokens, pos + 1


def read_pgm(path):
    """Return ``(image as float64, maxval)`` for binary (P5) or ASCII (P2) PGM."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P5":
        (w, h, maxval), pos = _pgm_tokens(data)
        dtype = ">u2" if maxval > 255 else "u1"
        img = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
        return img.astype(np.float64), maxval
    if magic == b"P2":
        vals = []
        for line in data.decode("ascii").splitlines():
            vals.extend(line.split("#", 1)[0].split())
        w, h, maxval = (int(t) for t in vals[1:4])
        img = np.array(vals[4:4 + w * h], dtype=np.float64).reshape(h, w)
        return img, maxval
    raise UnsupportedFormat(f"{path}: not a PGM file")


def write_pgm(path, img, peak=255.0, maxval=65535):
    """Write a binary 16-bit PGM.  ``peak`` maps to ``maxval``; values are clipped."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    scaled = np.rint(np.clip(img / peak, 0.0, 1.0) * maxval).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        f.write(scaled.tobytes())


# -- image CSV ---------------------------------------------------------------

def write_image_csv(path, img):
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    lines = ["width,height", f"{w},{h}"]
    lines += [",".join(fmt(v) for v in row) for row in img]
    Path(path).write_text("\n".join(lines) + "\n")


def read_image_csv(path):
    lines = Path(path).read_text().split()
    if not lines or lines[0].strip().lower() != "width,height":
        raise UnsupportedFormat(f"{path}: missing 'width,height' header")
    w, h = (int(t) for t in lines[1].split(","))
    vals = [float(t) for line in lines[2:] for t in line.split(",") if t]
    if len(vals) != w * h:
        raise UnsupportedFormat(f"{path}: expected {w * h} values, found {len(vals)}")
    return np.array(vals).reshape(h, w)


def read_image(path):
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        return read_pgm(path)[0]
    if path.suffix.lower() == ".csv":
        return read_image_csv(path)
    raise UnsupportedFormat(f"unsupported image format {path.suffix!r}")


# -- Matrix Market --------------------------------------------------------

def write_matrix(path, mat, comment=""):
    """Matrix-Market coordinate file (dense inputs are converted)."""
    mat = sparse.coo_matrix(mat)
    spio.mmwrite(str(path), mat, comment=comment, field="real", precision=17)


def read_matrix(path):
    return sparse.csr_matrix(spio.mmread(str(path)))


# -- pattern sets ---------------------------------------------------------

def write_patterns(path, bits):
    """Packed-bit pattern file.

    Header (16 bytes, little endian): magic ``SRFP``, version, N, K as
    uint32.  Body: the K*N bits of the row-major pattern stack, MSB first,
    zero-padded to a whole byte.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    K = bits.shape[0]
    flat = bits.reshape(K, -1)
    N = flat.shape[1]
    with open(path, "wb") as f:
        f.write(PATTERN_MAGIC + struct.pack("<III", PATTERN_VERSION, N, K))
        f.write(np.packbits(flat.ravel(), bitorder="big").tobytes())


def read_patterns(path):
    """Return the ``(K, N)`` uint8 pattern array stored by :func:`write_patterns`."""
    data = Path(path).read_bytes()
    if data[:4] != PATTERN_MAGIC:
        raise UnsupportedFormat(f"{path}: bad magic {data[:4]!r}")
    version, N, K = struct.unpack("<III", data[4:16])
    if version != PATTERN_VERSION:
        raise UnsupportedFormat(f"{path}: unsupported pattern version {version}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=16),
                         count=N * K, bitorder="big")
    return bits.reshape(K, N)


def write_patterns_csv(path, bits):
    bits = np.asarray(bits, dtype=np.uint8)
    flat = bits.reshape(bits.shape[0], -1)
    lines = ["k," + ",".join(f"b{i}" for i in range(flat.shape[1]))]
    lines += [f"{k}," + ",".join(map(str, row.tolist())) for k, row in enumerate(flat)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_patterns_csv(path):
    rows = Path(path).read_text().strip().splitlines()[1:]
    return np.array([[int(t) for t in r.split(",")[1:]] for r in rows], dtype=np.uint8)


# -- tables ---------------------------------------------------------------

def write_table(path, header, rows):
    """Plain CSV with a header line; floats use round-trip formatting."""
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v)
                            for v in row))
    Path(path).write_text("\n".join(out) + "\n")


def read_table(path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]
