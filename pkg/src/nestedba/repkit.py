"""Weight-basis matrix representations and their charge decomposition.

Generators follow the symmetrised convention ``[h_i, e_j] = (alpha_i, alpha_j) e_j``
and ``[e_i, f_j] = delta_ij h_i``, so ``h_i`` acts on a weight vector of
weight mu by ``(alpha_i, mu)``.  Raising operators are the standard
so/sp/sl root vectors; lowering operators are their transposes rescaled to
close the bracket relations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from . import linalg as la
from .errors import AlgebraMismatch, NestingMismatch, NonIntegralSpectrum, UnsupportedType
from .rootsys import (
    NestingData,
    RootSystem,
    _solve,
    build_root_system,
    charge_coweight,
    epsilon_simple_roots,
)


@dataclass(frozen=True, eq=False)
class MatrixRep:
    algebra: RootSystem
    e: tuple
    f: tuple
    h: tuple
    basis_weights: tuple
    name: str = ""

    @property
    def dim(self) -> int:
        return len(self.basis_weights)

    def generators(self, nodes=None):
        """(label, matrix) pairs for e_i, f_i, h_i over ``nodes`` (0-based, default all)."""
        nodes = range(self.algebra.rank) if nodes is None else nodes
        for i in nodes:
            yield f"e{i + 1}", self.e[i]
            yield f"f{i + 1}", self.f[i]
            yield f"h{i + 1}", self.h[i]

    def dynkin_labels(self, k) -> tuple:
        return self.algebra.dynkin_labels(self.basis_weights[k])

    @cached_property
    def highest_index(self) -> int:
        """Basis index of the weight vector killed by every e_i (first such)."""
        for k in range(self.dim):
            if all(la.is_zero(la.extract(e, range(self.dim), [k])) for e in self.e):
                return k
        raise ValueError("no highest-weight basis vector")

    @cached_property
    def root_vectors(self) -> dict:
        """Matrices x_beta for every root beta (positive and negative), by commutators."""
        rs = self.algebra
        out = {}
        for i in range(rs.rank):
            unit = tuple(int(k == i) for k in range(rs.rank))
            out[unit] = self.e[i]
            out[tuple(-x for x in unit)] = self.f[i]
        for beta in rs.positive_roots:
            if beta in out:
                continue
            for i in range(rs.rank):
                prev = tuple(b - (k == i) for k, b in enumerate(beta))
                if prev in out and any(prev):
                    x = la.commutator(self.e[i], out[prev])
                    if not la.is_zero(x):
                        out[beta] = x
                        neg = tuple(-b for b in prev)
                        out[tuple(-b for b in beta)] = la.commutator(self.f[i], out[neg])
                        break
        return out


def _weights_from_epsilon(rs, eps_weights):
    roots, norm = epsilon_simple_roots(rs)
    out = []
    for w in eps_weights:
        pair = [norm * sum(Fraction(a) * b for a, b in zip(root, w)) for root in roots]
        out.append(_solve(rs.gram, pair))
    return tuple(out)


def _close_brackets(rs, raw_e, weights, name):
    n = len(weights)
    h = tuple(
        la.diag([rs.pairing(rs.simple_roots[i], w) for w in weights]) for i in range(rs.rank)
    )
    f = []
    for i, e in enumerate(raw_e):
        ft = e.transpose()
        c = la.proportionality(h[i], la.commutator(e, ft))
        if c is None:
            raise ValueError(f"{name}: raw generators for node {i + 1} do not close")
        f.append(ft * c)
    return MatrixRep(rs, tuple(raw_e), tuple(f), h, weights, name)


def defining_rep(rs: RootSystem) -> MatrixRep:
    """Vector representation of sl_{r+1}, so_{2r+1}, sp_{2r} or so_{2r}."""
    r, fam = rs.rank, rs.family
    if fam == "A":
        n = r + 1
        eps = [[int(k == j) for k in range(n)] for j in range(n)]
        raw = [la.from_dok({(i, i + 1): 1}, (n, n)) for i in range(r)]
        return _close_brackets(rs, raw, _weights_from_epsilon(rs, eps), f"V({rs.name})")
    if fam not in "BCD":
        raise UnsupportedType(fam)
    n = 2 * r + 1 if fam == "B" else 2 * r
    bar = lambda k: n - 1 - k  # noqa: E731
    eps = [[int(k == j) for k in range(r)] for j in range(r)]
    if fam == "B":
        eps = eps + [[0] * r] + [[-x for x in v] for v in reversed(eps)]
    else:
        eps = eps + [[-x for x in v] for v in reversed(eps)]
    sign = [1 if k < r else -1 for k in range(n)]

    def root_vector(a, b):
        if fam == "C":
            if b == bar(a):
                return la.from_dok({(a, b): 1}, (n, n))
            return la.from_dok({(a, b): 1, (bar(b), bar(a)): -sign[a] * sign[b]}, (n, n))
        return la.from_dok({(a, b): 1, (bar(b), bar(a)): -1}, (n, n))

    raw = [root_vector(i, i + 1) for i in range(r - 1)]
    if fam == "B":
        raw.append(root_vector(r - 1, r))
    elif fam == "C":
        raw.append(root_vector(r - 1, r))
    else:
        raw.append(root_vector(r - 2, r))
    return _close_brackets(rs, raw, _weights_from_epsilon(rs, eps), f"V({rs.name})")


def sl2_spin_rep(twice_spin: int, rs: RootSystem | None = None) -> MatrixRep:
    """Irreducible sl_2 module of highest weight ``twice_spin`` in the basis v_0..v_k."""
    rs = rs or build_root_system("A", 1)
    k = twice_spin
    n = k + 1
    e = la.from_dok({(m - 1, m): k - m + 1 for m in range(1, n)}, (n, n))
    f = la.from_dok({(m + 1, m): m + 1 for m in range(n - 1)}, (n, n))
    weights = tuple((Fraction(k, 2) - m,) for m in range(n))
    h = la.diag([rs.pairing(rs.simple_roots[0], w) for w in weights])
    return MatrixRep(rs, (e,), (f,), (h,), weights, f"spin{k}/2")


def tensor_rep(a: MatrixRep, b: MatrixRep) -> MatrixRep:
    if a.algebra != b.algebra:
        raise AlgebraMismatch("tensor factors carry different algebras")
    ia, ib = la.eye(a.dim), la.eye(b.dim)

    def delta(x, y):
        return la.kron(x, ib) + la.kron(ia, y)

    weights = tuple(
        tuple(x + y for x, y in zip(wa, wb)) for wa in a.basis_weights for wb in b.basis_weights
    )
    return MatrixRep(
        a.algebra,
        tuple(delta(x, y) for x, y in zip(a.e, b.e)),
        tuple(delta(x, y) for x, y in zip(a.f, b.f)),
        tuple(delta(x, y) for x, y in zip(a.h, b.h)),
        weights,
        f"{a.name}x{b.name}",
    )


def compress_rep(rep: MatrixRep, embed, project, name="") -> MatrixRep:
    """Restrict ``rep`` to an invariant subspace given by a rank factorisation.

    ``embed`` (n x k) has weight-vector columns spanning the subspace and
    ``project`` (k x n) satisfies ``project * embed == 1``.
    """
    def c(x):
        return project * x * embed

    weights = []
    for col in range(embed.shape[1]):
        v = la.extract(embed, range(embed.shape[0]), [col])
        hv = [h * v for h in rep.h]
        k = next(iter(la.dok(v)))[0]
        lead = la.dok(v)[(k, 0)]
        pair = [la.to_fraction(la.dok(x).get((k, 0), la.Q(0)) / lead) for x in hv]
        weights.append(_solve(rep.algebra.gram, pair) if rep.algebra.rank else ())
    return MatrixRep(
        rep.algebra,
        tuple(c(x) for x in rep.e),
        tuple(c(x) for x in rep.f),
        tuple(c(x) for x in rep.h),
        tuple(weights),
        name or f"sub({rep.name})",
    )


def bracket_report(rep: MatrixRep) -> dict:
    """Exact check of the three MatrixRep invariants; values are booleans."""
    rs = rep.algebra
    ok_he = ok_hf = ok_ef = True
    for i in range(rs.rank):
        for j in range(rs.rank):
            a = rs.gram[i][j]
            ok_he &= la.commutator(rep.h[i], rep.e[j]) == rep.e[j] * la.qq(a)
            ok_hf &= la.commutator(rep.h[i], rep.f[j]) == rep.f[j] * la.qq(-a)
            want = rep.h[i] if i == j else la.zeros(rep.dim)
            ok_ef &= la.commutator(rep.e[i], rep.f[j]) == want
    ok_w = all(
        rep.h[i] == la.diag([rs.pairing(rs.simple_roots[i], w) for w in rep.basis_weights])
        for i in range(rs.rank)
    )
    return {"h_e": ok_he, "h_f": ok_hf, "e_f": ok_ef, "weights": ok_w}


# --- charge decomposition -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChargeBlock:
    label: int
    charge: Fraction
    indices: tuple
    sub_highest_weight: tuple
    highest_index: int


@dataclass(frozen=True, eq=False)
class ChargeDecomposition:
    rep: MatrixRep
    nesting: NestingData
    blocks: tuple
    step: Fraction

    @property
    def N(self) -> int:
        return len(self.blocks) - 1

    def dims(self) -> list[int]:
        return [len(b.indices) for b in self.blocks]

    def block_of_index(self) -> dict:
        return {k: b.label for b in self.blocks for k in b.indices}

    def restrict(self, m, I, J):
        """Block of an operator on V mapping V^J to V^I."""
        return la.extract(m, self.blocks[I].indices, self.blocks[J].indices)


def raw_charges(rep: MatrixRep, nesting: NestingData) -> list[Fraction]:
    if rep.algebra is not nesting.parent and rep.algebra != nesting.parent:
        raise AlgebraMismatch(f"{rep.name} is not a representation of {nesting.parent.name}")
    cw = charge_coweight(nesting)
    return [-rep.algebra.pairing(cw, w) for w in rep.basis_weights]


def charge_operator(rep: MatrixRep, nesting: NestingData):
    """Diagonal matrix of -h^p in the weight basis."""
    return la.diag(raw_charges(rep, nesting))


def _weight_sort_key(w):
    return tuple(-x for x in w)


def charge_decompose(rep: MatrixRep, nesting: NestingData, check_irreducible=True) -> ChargeDecomposition:
    charges = raw_charges(rep, nesting)
    values = sorted(set(charges))
    steps = {b - a for a, b in zip(values, values[1:])}
    if len(steps) > 1:
        raise NonIntegralSpectrum(f"charges {values} are not an arithmetic progression")
    step = steps.pop() if steps else Fraction(1)
    kept = nesting.kept
    blocks = []
    for label, c in enumerate(values):
        idx = sorted((k for k in range(rep.dim) if charges[k] == c),
                     key=lambda k: (_weight_sort_key(rep.basis_weights[k]), k))
        hi = _sub_highest(rep, idx, kept, check_irreducible)
        hw = tuple(rep.algebra.coroot_pairing(rep.basis_weights[hi], i) for i in kept)
        blocks.append(ChargeBlock(label, c, tuple(idx), hw, hi))
    return ChargeDecomposition(rep, nesting, tuple(blocks), step)


def _sub_highest(rep, idx, kept, check):
    """The unique sub-algebra highest-weight basis vector inside a block."""
    cand = [
        k for k in idx
        if all(la.is_zero(la.extract(rep.e[i], idx, [k])) for i in kept)
    ]
    if not check:
        return cand[0]
    if len(cand) != 1:
        raise NonIntegralSpectrum(f"block {idx} is not irreducible: highest vectors {cand}")
    # the orbit of the highest vector under the lowering operators spans the block
    n = len(idx)
    lowers = [la.extract(rep.f[i], idx, idx) for i in kept]
    start = la.from_dok({(idx.index(cand[0]), 0): 1}, (n, 1))
    span = [start]
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for f in lowers:
                w = f * v
                if not la.is_zero(w):
                    stack = span[0].hstack(*span[1:], w)
                    if la.rank(stack) > len(span):
                        span.append(w)
                        nxt.append(w)
        frontier = nxt
    if len(span) != n:
        raise NonIntegralSpectrum(f"block {idx} is reducible under the sub-algebra")
    return cand[0]


@dataclass(frozen=True)
class Sector:
    total: int
    pairs: tuple

    def dim(self, da, db) -> int:
        return sum(da.dims()[i] * db.dims()[j] for i, j in self.pairs)


def tensor_charge_blocks(da: ChargeDecomposition, db: ChargeDecomposition) -> list[Sector]:
    """Sectors W_K of V (x) W, pairs ordered by the first factor's label."""
    if da.nesting.parent != db.nesting.parent or da.nesting.removed != db.nesting.removed:
        raise NestingMismatch("decompositions use different nestings")
    out = []
    for k in range(da.N + db.N + 1):
        pairs = tuple((i, k - i) for i in range(da.N + 1) if 0 <= k - i <= db.N)
        out.append(Sector(k, pairs))
    return out


def decomposition_summary(dec: ChargeDecomposition) -> dict:
    return {
        "algebra": dec.rep.algebra.name,
        "rep": dec.rep.name,
        "removed": dec.nesting.removed,
        "N": dec.N,
        "block_dims": dec.dims(),
        "charges": [str(b.charge) for b in dec.blocks],
        "sub_highest_weights": [[str(x) for x in b.sub_highest_weight] for b in dec.blocks],
    }


# --- tabulated block content -------------------------------------------------------

def _fund(rank, i):
    """Dynkin labels of omega_i (1-based; 0 means trivial)."""
    return tuple(1 if k == i - 1 else 0 for k in range(rank))


def expected_defining_blocks(family: str, rank: int, p: int):
    """Sub-algebra highest weights of the charge blocks of the defining rep.

    Only the classical rows with V = M(omega_1) are known here; returns None
    for other nestings.  For B_2 the sub-algebra so(3) appears as A_1 and its
    vector rep has label 2.
    """
    r = rank
    if family == "A" and p in (1, r):
        blocks = [_fund(r - 1, 0), _fund(r - 1, 1)]
        return blocks if p == 1 else blocks[::-1]
    if family in ("B", "C", "D") and p == 1:
        vec = (2,) if family == "B" and r == 2 else _fund(r - 1, 1)
        return [_fund(r - 1, 0), vec, _fund(r - 1, 0)]
    if family == "C" and p == r:
        return [_fund(r - 1, 1), _fund(r - 1, r - 1)]
    if family == "D" and p in (r - 1, r):
        return [_fund(r - 1, 1), _fund(r - 1, r - 1)]
    return None


def check_table_row(rs: RootSystem, nesting: NestingData) -> dict:
    """Compare measured block highest weights with the tabulated content.

    A-type sub-diagrams are matched up to their reflection, since the table
    lists rows only up to duality.
    """
    want = expected_defining_blocks(rs.family, rs.rank, nesting.removed)
    dec = charge_decompose(defining_rep(rs), nesting)
    got = [tuple(int(x) for x in b.sub_highest_weight) for b in dec.blocks]
    if want is None:
        return {"measured": got, "expected": None, "pass": None}
    ok = got == want
    if not ok and nesting.sub_family == "A":
        ok = got == [w[::-1] for w in want]
    return {"measured": got, "expected": want, "block_dims": dec.dims(), "pass": ok}
