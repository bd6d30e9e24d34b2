"""Binary containers for compressed couplings ("CTC1") and Tucker-ACA factors ("CTA1").

All integers and floats are little-endian.  CTC1::

    magic b"CTC1" | version u32 | q u32 | m u32 | n1 n2 n3 u32 | k0 f64 | eps f64 | kernel id u8
    then per column, per component:
        r1 r2 r3 u32 | core (r1*r2*r3 complex, mode-1 fastest) | U1 U2 U3 (column-major complex)

Complex numbers are (real f64, imag f64) pairs.  CTA1::

    magic b"CTA1" | version u32 | m2 u32 | CTC1 payload of U (m = r_c) | V (m2*r_c complex, column-major)
"""
from __future__ import annotations

import struct

import numpy as np

from .aca import ACAFactors
from .compression import CompressedCoupling
from .errors import FormatError
from .tensor_core import TuckerTensor

VERSION = 1
_CTC_HEADER = struct.Struct("<4sIIIIIIddB")
_CTA_HEADER = struct.Struct("<4sII")
_RANKS = struct.Struct("<III")
_C16 = np.dtype("<c16")


def _encode_columns(columns, dims, q, k0, eps, kernel_id):
    parts = [_CTC_HEADER.pack(b"CTC1", VERSION, q, len(columns), *dims, k0, eps, kernel_id)]
    for col in columns:
        for tt in col:
            parts.append(_RANKS.pack(*tt.ranks))
            parts.append(np.asarray(tt.core, dtype=_C16).tobytes(order="F"))
            for u in tt.factors:
                parts.append(np.asarray(u, dtype=_C16).tobytes(order="F"))
    return b"".join(parts)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def unpack(self, st, what):
        if self.pos + st.size > len(self.buf):
            raise FormatError(f"truncated {what}", self.pos)
        out = st.unpack_from(self.buf, self.pos)
        self.pos += st.size
        return out

    def complex_array(self, shape, what):
        n = int(np.prod(shape))
        nbytes = 16 * n
        if self.pos + nbytes > len(self.buf):
            raise FormatError(f"truncated {what}", self.pos)
        a = np.frombuffer(self.buf, dtype=_C16, count=n, offset=self.pos)
        self.pos += nbytes
        return a.reshape(shape, order="F").astype(complex)


def _decode_columns(reader):
    start = reader.pos
    magic, version, q, m, n1, n2, n3, k0, eps, kernel_id = reader.unpack(_CTC_HEADER, "CTC1 header")
    if magic != b"CTC1":
        raise FormatError(f"bad magic {magic!r}, expected b'CTC1'", start)
    if version != VERSION:
        raise FormatError(f"unsupported CTC1 version {version}", start + 4)
    dims = (n1, n2, n3)
    if min(dims) < 1 or q < 1:
        raise FormatError(f"invalid dimensions q={q}, dims={dims}", start + 8)
    columns = []
    for j in range(m):
        col = []
        for c in range(q):
            at = reader.pos
            ranks = reader.unpack(_RANKS, f"ranks of column {j} component {c}")
            if any(r < 1 or r > n for r, n in zip(ranks, dims)):
                raise FormatError(f"invalid ranks {ranks} for dims {dims}", at)
            core = reader.complex_array(ranks, "core")
            factors = tuple(reader.complex_array((n, r), "factor") for n, r in zip(dims, ranks))
            col.append(TuckerTensor(core, factors))
        columns.append(tuple(col))
    return dict(dims=dims, q=q, k0=k0, eps=eps, kernel_id=kernel_id, columns=columns)


def dumps_coupling(cc):
    return _encode_columns(cc.columns, cc.dims, cc.q, cc.k0, cc.eps, cc.kernel_id)


def loads_coupling(buf):
    reader = _Reader(bytes(buf))
    d = _decode_columns(reader)
    if reader.pos != len(reader.buf):
        raise FormatError("trailing bytes after CTC1 payload", reader.pos)
    if not d["eps"] > 0:
        raise FormatError(f"non-positive eps {d['eps']}", 32)
    return CompressedCoupling(d["dims"], d["q"], d["kernel_id"], d["k0"], d["eps"], d["columns"])


def dumps_aca(fac):
    if not fac.is_compressed:
        raise ValueError("only factors with a Tucker-compressed U can be written as CTA1")
    m2 = fac.V.shape[0]
    head = _CTA_HEADER.pack(b"CTA1", VERSION, m2)
    body = _encode_columns(fac.U_store, fac.dims, fac.q, fac.k0, fac.eps, fac.kernel_id)
    return head + body + np.asarray(fac.V, dtype=_C16).tobytes(order="F")


def loads_aca(buf):
    reader = _Reader(bytes(buf))
    magic, version, m2 = reader.unpack(_CTA_HEADER, "CTA1 header")
    if magic != b"CTA1":
        raise FormatError(f"bad magic {magic!r}, expected b'CTA1'", 0)
    if version != VERSION:
        raise FormatError(f"unsupported CTA1 version {version}", 4)
    d = _decode_columns(reader)
    V = reader.complex_array((m2, len(d["columns"])), "V block")
    if reader.pos != len(reader.buf):
        raise FormatError("trailing bytes after CTA1 payload", reader.pos)
    return ACAFactors(
        V, d["eps"], U_store=d["columns"], dims=d["dims"], q=d["q"],
        kernel_id=d["kernel_id"], k0=d["k0"],
    )


def save(obj, path):
    data = dumps_aca(obj) if isinstance(obj, ACAFactors) else dumps_coupling(obj)
    with open(path, "wb") as fh:
        fh.write(data)


def load(path):
    """Load a CTC1 or CTA1 file, dispatching on the magic bytes."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}", 0) from exc
    if buf[:4] == b"CTA1":
        return loads_aca(buf)
    if buf[:4] == b"CTC1":
        return loads_coupling(buf)
    raise FormatError(f"unknown magic {buf[:4]!r}", 0)
