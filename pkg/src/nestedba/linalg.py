"""Exact rational matrix helpers.

All identity checks in the package run on sympy's sparse ``DomainMatrix``
over ``QQ`` (gmpy2 rationals when available).  This module only adds the
tensor-product plumbing that ``DomainMatrix`` lacks: Kronecker products,
embedding an operator into chosen tensor factors, partial transposes and
rank factorisation of projectors.  A parallel set of numpy helpers covers
the complex floating point path used for Bethe roots.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import prod

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from .errors import SingularMatrix

Q = QQ


def qq(x):
    """Convert ints, Fractions, strings and gmpy2 rationals to a QQ element."""
    if isinstance(x, str):
        x = Fraction(x)
    if isinstance(x, Fraction):
        return QQ(x.numerator, x.denominator)
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or string")
    return QQ.convert(x)


def to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def fmt(x) -> str:
    """Canonical string for a rational ("3/4", "-2")."""
    return str(to_fraction(x))


# --- constructors ---------------------------------------------------------

def zeros(m, n=None) -> DomainMatrix:
    return DomainMatrix({}, (m, m if n is None else n), QQ)


def eye(n) -> DomainMatrix:
    return DomainMatrix({i: {i: QQ(1)} for i in range(n)}, (n, n), QQ)


def from_dok(entries, shape) -> DomainMatrix:
    """Build from {(i, j): value}; zeros are dropped."""
    dod = {}
    for (i, j), v in entries.items():
        v = qq(v)
        if v:
            dod.setdefault(i, {})[j] = v
    return DomainMatrix(dod, shape, QQ)


def from_rows(rows) -> DomainMatrix:
    rows = [list(r) for r in rows]
    n = len(rows[0]) if rows else 0
    return from_dok({(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r)},
                    (len(rows), n))


def diag(values) -> DomainMatrix:
    values = list(values)
    return from_dok({(i, i): v for i, v in enumerate(values)}, (len(values), len(values)))


def scalar(x, n) -> DomainMatrix:
    return eye(n) * qq(x)


def dok(m: DomainMatrix) -> dict:
    return {(i, j): v for i, row in m.to_dod().items() for j, v in row.items()}


def to_rows(m: DomainMatrix) -> list[list[Fraction]]:
    rows, cols = m.shape
    out = [[Fraction(0)] * cols for _ in range(rows)]
    for (i, j), v in dok(m).items():
        out[i][j] = to_fraction(v)
    return out


def to_numpy(m: DomainMatrix) -> np.ndarray:
    rows, cols = m.shape
    out = np.zeros((rows, cols), dtype=complex)
    for (i, j), v in dok(m).items():
        out[i, j] = float(to_fraction(v))
    return out


# --- basic algebra ----------------------------------------------------------

def inv(m: DomainMatrix) -> DomainMatrix:
    if m.shape[0] == 0:
        return m
    try:
        return m.inv()
    except DMNonInvertibleMatrixError as exc:
        raise SingularMatrix(str(exc)) from None


def commutator(a, b):
    return a * b - b * a


def is_zero(m: DomainMatrix) -> bool:
    return m.nnz() == 0


def max_abs(m: DomainMatrix):
    """Largest absolute entry, as an exact rational (0 for the zero matrix)."""
    vals = [abs(v) for row in m.to_dod().values() for v in row.values()]
    return max(vals) if vals else QQ(0)


def extract(m: DomainMatrix, rows, cols) -> DomainMatrix:
    rows, cols = list(rows), list(cols)
    if not rows or not cols:
        return zeros(len(rows), len(cols))
    return m.extract(rows, cols)


def proportionality(a: DomainMatrix, b: DomainMatrix):
    """Return c with a == c*b, or None.  Both zero gives 1."""
    da, db = dok(a), dok(b)
    if set(da) != set(db):
        return None
    if not db:
        return QQ(1)
    key = next(iter(db))
    c = da[key] / db[key]
    return c if a == b * c else None


# --- tensor products --------------------------------------------------------

def kron(a: DomainMatrix, b: DomainMatrix) -> DomainMatrix:
    (ar, ac), (br, bc) = a.shape, b.shape
    out = {}
    bd = b.to_dod()
    for i, row in a.to_dod().items():
        for j, x in row.items():
            for k, brow in bd.items():
                dst = out.setdefault(i * br + k, {})
                for l, y in brow.items():
                    dst[j * bc + l] = x * y
    return DomainMatrix(out, (ar * br, ac * bc), QQ)


def kron_all(mats):
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def _strides(dims):
    s = [1] * len(dims)
    for k in range(len(dims) - 2, -1, -1):
        s[k] = s[k + 1] * dims[k + 1]
    return s


def embed(m: DomainMatrix, dims, positions) -> DomainMatrix:
    """Act with ``m`` on the tensor factors ``positions`` of ``dims``.

    ``m`` is an operator on the tensor product of the listed factors, taken
    in the listed order; every other factor gets the identity.
    """
    dims = list(dims)
    positions = list(positions)
    strides = _strides(dims)
    sub_dims = [dims[p] for p in positions]
    sub_strides = _strides(sub_dims)
    if m.shape != (prod(sub_dims), prod(sub_dims)):
        raise ValueError(f"operator shape {m.shape} does not match factors {sub_dims}")
    rest = [k for k in range(len(dims)) if k not in positions]
    rest_offsets = [0]
    for k in rest:
        rest_offsets = [o + x * strides[k] for o in rest_offsets for x in range(dims[k])]

    def offset(idx):
        total = 0
        for p, st in zip(positions, sub_strides):
            total += (idx // st) % dims[p] * strides[p]
        return total

    mdod = m.to_dod()
    row_off = {i: offset(i) for i in mdod}
    col_off = {}
    out = {}
    for i, row in mdod.items():
        ri = row_off[i]
        for j, v in row.items():
            cj = col_off.get(j)
            if cj is None:
                cj = col_off[j] = offset(j)
            for o in rest_offsets:
                out.setdefault(ri + o, {})[cj + o] = v
    n = prod(dims)
    return DomainMatrix(out, (n, n), QQ)


def permutation(dims, order) -> DomainMatrix:
    """Operator sending x_0 (x) ... (x) x_k to the factors rearranged by ``order``.

    The output's factor ``t`` is the input's factor ``order[t]``.
    """
    dims = list(dims)
    new_dims = [dims[o] for o in order]
    in_strides = _strides(dims)
    out_strides = _strides(new_dims)
    entries = {}
    for idx in itertools.product(*[range(d) for d in dims]):
        src = sum(i * s for i, s in zip(idx, in_strides))
        dst = sum(idx[o] * s for o, s in zip(order, out_strides))
        entries[dst] = {src: QQ(1)}
    n = prod(dims)
    return DomainMatrix(entries, (n, n), QQ)


def swap(d1, d2) -> DomainMatrix:
    """The flip V1 (x) V2 -> V2 (x) V1."""
    return permutation([d1, d2], [1, 0])


def partial_transpose(m: DomainMatrix, dims, position) -> DomainMatrix:
    """Transpose the tensor factor ``position`` of an operator on ``dims``."""
    dims = list(dims)
    strides = _strides(dims)
    st, d = strides[position], dims[position]
    out = {}
    for i, row in m.to_dod().items():
        ia = (i // st) % d
        for j, v in row.items():
            ja = (j // st) % d
            ni = i + (ja - ia) * st
            nj = j + (ia - ja) * st
            out.setdefault(ni, {})[nj] = v
    return DomainMatrix(out, m.shape, QQ)


def rank_factor(m: DomainMatrix):
    """Return (C, F) with m == C*F, C the pivot columns and F the nonzero rref rows."""
    r, pivots = m.rref()
    k = len(pivots)
    c = extract(m, range(m.shape[0]), pivots)
    f = extract(r, range(k), range(m.shape[1]))
    return c, f


def nullspace(m: DomainMatrix) -> DomainMatrix:
    """Rows spanning the right kernel of ``m``."""
    if m.shape[1] == 0:
        return zeros(0, 0)
    if m.shape[0] == 0:
        return eye(m.shape[1])
    return m.nullspace()


def rank(m: DomainMatrix) -> int:
    if 0 in m.shape:
        return 0
    return m.rank()


# --- numpy twins --------------------------------------------------------------

def np_embed(m: np.ndarray, dims, positions) -> np.ndarray:
    """Dense counterpart of :func:`embed`."""
    dims = list(dims)
    positions = list(positions)
    n = len(dims)
    rest = [k for k in range(n) if k not in positions]
    sub = [dims[p] for p in positions]
    t = m.reshape(sub + sub)
    ident = np.eye(prod(dims[k] for k in rest)).reshape([dims[k] for k in rest] * 2)
    full = np.tensordot(t, ident, axes=0)
    # axes: out(positions), in(positions), out(rest), in(rest)
    k, r = len(positions), len(rest)
    src_out = {p: i for i, p in enumerate(positions)}
    src_out.update({q: 2 * k + i for i, q in enumerate(rest)})
    src_in = {p: k + i for i, p in enumerate(positions)}
    src_in.update({q: 2 * k + r + i for i, q in enumerate(rest)})
    perm = [src_out[a] for a in range(n)] + [src_in[a] for a in range(n)]
    total = prod(dims)
    return np.transpose(full, perm).reshape(total, total)
