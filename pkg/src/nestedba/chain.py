"""Monodromy and transfer matrices of small inhomogeneous chains.

T(u) = R_{a,L}(u - c_L) ... R_{a,1}(u - c_1) acts on V (x) M with M the
tensor product of the site spaces.  Charge blocks of V split T into
A (diagonal), B (above diagonal) and C (below diagonal) blocks; each is a
matrix from V^J (x) M to V^I (x) M.  Identities that hold "modulo C" are
checked on the vacuum sector V (x) M^0.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

import numpy as np

from . import linalg as la
from .blockgauss import BlockStructure, GaussFamily, block_structure
from .errors import ConfigError, SingularPoint
from .repkit import ChargeDecomposition, MatrixRep, charge_decompose, tensor_rep
from .rmat import RMatrix, rmatrix_for, sl2_spin1
from .rootsys import NestingData, parse_algebra, remove_node

SITE_KINDS = ("defining", "spin1")


@dataclass(frozen=True, eq=False)
class ChainSpec:
    nesting: NestingData
    aux: str
    sites: tuple          # ((kind, shift), ...)
    twist: tuple          # diagonal of Z on V
    hbar: Fraction
    rmats: dict = field(repr=False)

    @property
    def aux_R(self) -> RMatrix:
        """R-matrix on V (x) V used in the RTT relation."""
        return self.rmats[(self.aux, self.aux)]

    @property
    def aux_rep(self) -> MatrixRep:
        return self.aux_R.reps[0]

    def site_R(self, l) -> RMatrix:
        return self.rmats[(self.aux, self.sites[l][0])]

    def site_rep(self, l) -> MatrixRep:
        return self.site_R(l).reps[1]

    @property
    def L(self) -> int:
        return len(self.sites)

    @property
    def site_dims(self) -> list:
        return [self.site_rep(l).dim for l in range(self.L)]

    @property
    def dim_m(self) -> int:
        return prod(self.site_dims)

    @property
    def da(self) -> int:
        return self.aux_rep.dim

    def to_json(self):
        return {
            "algebra": self.nesting.parent.name,
            "remove": self.nesting.removed,
            "aux": self.aux,
            "sites": [{"rep": k, "shift": str(c)} for k, c in self.sites],
            "twist": [str(z) for z in self.twist],
            "hbar": str(self.hbar),
        }

    # cached derived data -------------------------------------------------------
    def __post_init__(self):
        object.__setattr__(self, "_cache", {})

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def aux_decomposition(self) -> ChargeDecomposition:
        return self._cached("auxdec", lambda: charge_decompose(self.aux_rep, self.nesting))

    @property
    def structure(self) -> BlockStructure:
        return self._cached("structure", lambda: block_structure(self.aux_R, self.nesting))

    @property
    def gauss(self) -> GaussFamily:
        return self._cached("gauss", lambda: GaussFamily(self.aux_R, self.structure))

    @property
    def m_rep(self) -> MatrixRep:
        def build():
            rep = self.site_rep(0)
            for l in range(1, self.L):
                rep = tensor_rep(rep, self.site_rep(l))
            return rep
        return self._cached("mrep", build)

    @property
    def m_charges(self) -> list:
        def build():
            labels = []
            for l in range(self.L):
                dec = charge_decompose(self.site_rep(l), self.nesting)
                labels.append(dec.block_of_index())
            out = []
            for idx in itertools.product(*[range(d) for d in self.site_dims]):
                out.append(sum(labels[l][k] for l, k in enumerate(idx)))
            return out
        return self._cached("mcharge", build)


def _rmats(rs, aux, kinds, hbar):
    out = {}
    if rs.family == "A" and rs.rank == 1 and ("spin1" in kinds or aux == "spin1"):
        fused = sl2_spin1(hbar)
        names = {"defining": "V", "spin1": "W"}
        for a in (aux,):
            for k in set(kinds) | {aux}:
                out[(a, k)] = fused[names[a] + names[k]]
        return out
    if aux != "defining" or any(k != "defining" for k in kinds):
        raise ConfigError("spin1 sites and auxiliary spaces exist only for A1")
    out[("defining", "defining")] = rmatrix_for(rs, hbar)
    return out


def make_chain(algebra: str, remove: int, sites, twist=None, hbar=1, aux="defining") -> ChainSpec:
    """Build a ChainSpec; ``sites`` is a list of (kind, shift) or dicts."""
    rs = parse_algebra(algebra)
    nesting = remove_node(rs, int(remove))
    norm = []
    for s in sites:
        if isinstance(s, dict):
            kind, shift = s.get("rep", "defining"), s.get("shift", 0)
        else:
            kind, shift = s
        if kind not in SITE_KINDS:
            raise ConfigError(f"unknown site rep {kind!r}")
        norm.append((kind, Fraction(shift)))
    if not norm:
        raise ConfigError("a chain needs at least one site")
    if aux not in SITE_KINDS:
        raise ConfigError(f"unknown auxiliary rep {aux!r}")
    hbar = Fraction(hbar)
    rmats = _rmats(rs, aux, [k for k, _ in norm], hbar)
    da = rmats[(aux, aux)].dims[0]
    twist = tuple(Fraction(z) for z in (twist or [1] * da))
    if len(twist) != da or any(z == 0 for z in twist):
        raise ConfigError("twist must be an invertible diagonal of length dim V")
    spec = ChainSpec(nesting, aux, tuple(norm), twist, hbar, rmats)
    bad = check_twist(spec)
    if bad:
        raise ConfigError(f"twist rejected: Z (x) Z does not commute with {bad}")
    return spec


def check_twist(spec: ChainSpec, points=(Fraction(13, 7), Fraction(-5, 3))):
    """Name of the first operator that Z (x) Z fails to commute with, else None.

    Z must commute with R(u) on V (x) V (for commuting transfer matrices) and
    Z^I (x) Z^J with every D^{IJ}(u).
    """
    z = spec.twist
    if len(set(z)) == 1:
        return None
    zz = la.kron(la.diag(z), la.diag(z))
    dec = spec.aux_decomposition
    for u in points:
        if not la.is_zero(la.commutator(zz, spec.aux_R.evaluate(u))):
            return f"R({u})"
        for I in range(dec.N + 1):
            for J in range(dec.N + 1):
                zi = la.diag([z[k] for k in dec.blocks[I].indices])
                zj = la.diag([z[k] for k in dec.blocks[J].indices])
                if not la.is_zero(la.commutator(la.kron(zi, zj), spec.gauss.D(I, J, u))):
                    return f"D^{I}{J}({u})"
    return None


def twist_block(spec: ChainSpec, I):
    return la.diag([spec.twist[k] for k in spec.aux_decomposition.blocks[I].indices])


def load_chain(path) -> ChainSpec:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read chain config {path}: {exc}") from None
    return chain_from_dict(cfg)


def chain_from_dict(cfg: dict) -> ChainSpec:
    try:
        return make_chain(cfg["algebra"], cfg.get("remove", 1), cfg["sites"], cfg.get("twist"),
                          cfg.get("hbar", 1), cfg.get("aux", "defining"))
    except KeyError as exc:
        raise ConfigError(f"chain config lacks {exc}") from None


# --- monodromy -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Monodromy:
    spec: ChainSpec
    u: object
    matrix: object

    def rows(self, I):
        dm = self.spec.dim_m
        return [a * dm + m for a in self.spec.aux_decomposition.blocks[I].indices for m in range(dm)]

    def block(self, I, J):
        """T^I_J(u) : V^J (x) M -> V^I (x) M."""
        if isinstance(self.matrix, np.ndarray):
            return self.matrix[np.ix_(self.rows(I), self.rows(J))]
        return la.extract(self.matrix, self.rows(I), self.rows(J))


def build_monodromy(spec: ChainSpec, u) -> Monodromy:
    u = Fraction(u)
    dims = [spec.da] + spec.site_dims
    out = None
    for l in range(spec.L):
        R = spec.site_R(l)
        try:
            m = la.embed(R.evaluate(u - spec.sites[l][1]), dims, [0, l + 1])
        except SingularPoint as exc:
            raise SingularPoint(str(exc), point=u, site=l) from None
        out = m if out is None else m * out
    return Monodromy(spec, u, out)


def build_monodromy_numeric(spec: ChainSpec, u: complex, projective=False) -> Monodromy:
    """Floating-point T(u).  ``projective`` uses the denominator-free form of
    R-matrices that provide one, so T stays finite at their poles."""
    dims = [spec.da] + spec.site_dims
    out = np.eye(prod(dims), dtype=complex)
    for l in range(spec.L):
        R = spec.site_R(l)
        x = u - float(spec.sites[l][1])
        fn = R.meta.get("cleared") if projective else None
        m = fn(x) if fn is not None else R.numeric(x)
        out = la.np_embed(m, dims, [0, l + 1]) @ out
    return Monodromy(spec, u, out)


def block(T: Monodromy, I, J):
    return T.block(I, J)


def transfer(spec: ChainSpec, u):
    """t(u) = tr_a(Z_a T(u)) on M (exact)."""
    T = build_monodromy(spec, u)
    return _trace_aux(spec, T.matrix)


def _trace_aux(spec, matrix):
    dm = spec.dim_m
    if isinstance(matrix, np.ndarray):
        out = np.zeros((dm, dm), dtype=complex)
        for a in range(spec.da):
            out += complex(spec.twist[a]) * matrix[a * dm:(a + 1) * dm, a * dm:(a + 1) * dm]
        return out
    out = la.zeros(dm)
    for a in range(spec.da):
        idx = range(a * dm, (a + 1) * dm)
        out = out + la.extract(matrix, idx, idx) * la.qq(spec.twist[a])
    return out


def transfer_numeric(spec: ChainSpec, u: complex) -> np.ndarray:
    return _trace_aux(spec, build_monodromy_numeric(spec, u).matrix)


# --- checks ----------------------------------------------------------------------------

def check_rtt(spec: ChainSpec, u, v):
    u, v = Fraction(u), Fraction(v)
    dims = [spec.da, spec.da, spec.dim_m]
    r12 = la.embed(spec.aux_R.evaluate(u - v), dims, [0, 1])
    t1 = la.embed(build_monodromy(spec, u).matrix, dims, [0, 2])
    t2 = la.embed(build_monodromy(spec, v).matrix, dims, [1, 2])
    res = r12 * t1 * t2 - t2 * t1 * r12
    return la.is_zero(res), res


def check_g_invariance(spec: ChainSpec, u, nodes=None):
    """[x (x) 1 + 1 (x) Delta_M(x), T(u)] = 0 for generators over ``nodes``."""
    T = build_monodromy(spec, u).matrix
    va, vm = spec.aux_rep, spec.m_rep
    ia, im = la.eye(va.dim), la.eye(vm.dim)
    for (_, x), (_, y) in zip(va.generators(nodes), vm.generators(nodes)):
        delta = la.kron(x, im) + la.kron(ia, y)
        if not la.is_zero(la.commutator(delta, T)):
            return False
    return True


def check_grading(spec: ChainSpec, u) -> bool:
    """Support of T^I_J only connects M-charge m to m + J - I."""
    T = build_monodromy(spec, u)
    dm = spec.dim_m
    q = spec.m_charges
    N = spec.aux_decomposition.N
    for I in range(N + 1):
        for J in range(N + 1):
            blk = T.block(I, J)
            for (r, c), _ in la.dok(blk).items():
                if q[r % dm] != q[c % dm] + J - I:
                    return False
    return True


def charge_zero_indices(spec: ChainSpec) -> list:
    return [m for m, c in enumerate(spec.m_charges) if c == 0]


def vacuum_sector(spec: ChainSpec, samples=(Fraction(7, 3), Fraction(-11, 5), Fraction(17, 4))):
    """Charge-zero basis indices of M, cross-checked against the joint kernel of all C blocks.

    Returns (indices, report) where report records both characterisations.
    """
    zero = charge_zero_indices(spec)
    dm = spec.dim_m
    N = spec.aux_decomposition.N
    pieces = []
    for u in samples:
        T = build_monodromy(spec, u)
        for I in range(N + 1):
            for J in range(I):
                C = T.block(I, J)
                dj = len(spec.aux_decomposition.blocks[J].indices)
                for z in range(dj):
                    pieces.append(la.extract(C, range(C.shape[0]), range(z * dm, (z + 1) * dm)))
    if pieces:
        stack = pieces[0].vstack(*pieces[1:])
        ker = la.nullspace(stack)
    else:
        ker = la.eye(dm)
    basis = la.zeros(len(zero), dm) if not zero else la.from_dok({(i, m): 1 for i, m in enumerate(zero)}, (len(zero), dm))
    same_dim = ker.shape[0] == len(zero)
    contained = all(la.is_zero(p * basis.transpose()) for p in pieces) if zero else True
    return zero, {
        "charge_zero_dim": len(zero),
        "c_kernel_dim": ker.shape[0],
        "annihilated": contained,
        "pass": bool(same_dim and contained),
    }


def _vac_cols(spec, dims_before):
    """Column indices of (prod of dims_before) (x) M^0 inside (prod dims_before) (x) M."""
    dm = spec.dim_m
    zero = charge_zero_indices(spec)
    return [k * dm + m for k in range(prod(dims_before)) for m in zero]


def _act_a(X, da_out, da_in, db, dm):
    """X on factors (a, M) lifted to (a, b, M) with identity on b."""
    pin = la.permutation([da_in, dm, db], [0, 2, 1])
    pout = la.permutation([da_out, dm, db], [0, 2, 1])
    return pout * la.kron(X, la.eye(db)) * pin.transpose()


def _act_b(Y, da, dm):
    return la.kron(la.eye(da), Y)


def _act_ab(X, dm):
    return la.kron(X, la.eye(dm))


def _dims(spec, I):
    return len(spec.aux_decomposition.blocks[I].indices)


def check_daa(spec: ChainSpec, I, J, u, v):
    """D^IJ(u-v) A^I(u)_a A^J(v)_b - A^J(v)_b A^I(u)_a D^IJ(u-v) on V^I (x) V^J (x) M^0."""
    u, v = Fraction(u), Fraction(v)
    dI, dJ, dm = _dims(spec, I), _dims(spec, J), spec.dim_m
    Tu, Tv = build_monodromy(spec, u), build_monodromy(spec, v)
    Aa = _act_a(Tu.block(I, I), dI, dI, dJ, dm)
    Ab = _act_b(Tv.block(J, J), dI, dm)
    D = _act_ab(spec.gauss.D(I, J, u - v), dm)
    res = D * Aa * Ab - Ab * Aa * D
    cols = _vac_cols(spec, [dI, dJ])
    res = la.extract(res, range(res.shape[0]), cols)
    return la.is_zero(res), res


def ab_terms(spec: ChainSpec, I, J, u, v) -> dict:
    """Each term of the A-B exchange relation on V^I (x) V^{J+1} (x) M^0."""
    u, v = Fraction(u), Fraction(v)
    N = spec.aux_decomposition.N
    if not 0 <= J < N:
        raise ValueError("the A-B relation needs 0 <= J < N")
    dm = spec.dim_m
    d = {k: _dims(spec, k) for k in range(N + 1)}
    Tu, Tv = build_monodromy(spec, u), build_monodromy(spec, v)
    fam = spec.gauss
    w = u - v
    cols = _vac_cols(spec, [d[I], d[J + 1]])

    def restrict(m):
        return la.extract(m, range(m.shape[0]), cols)

    lhs = _act_a(Tu.block(I, I), d[I], d[I], d[J], dm) * _act_b(Tv.block(J, J + 1), d[I], dm)
    wanted = (_act_ab(la.inv(fam.D(I, J, w)), dm)
              * _act_b(Tv.block(J, J + 1), d[I], dm)
              * _act_a(Tu.block(I, I), d[I], d[I], d[J + 1], dm)
              * _act_ab(fam.D(I, J + 1, w), dm))
    out = {"lhs": restrict(lhs), "wanted": restrict(wanted)}
    factors = fam.at(w)
    if I >= 1:
        lblk = factors.L[((I, J), (I - 1, J + 1))]
        term = (_act_ab(lblk, dm)
                * _act_a(Tu.block(I - 1, I), d[I - 1], d[I], d[J + 1], dm)
                * _act_b(Tv.block(J + 1, J + 1), d[I], dm))
        out["unwanted_lower"] = restrict(term)
    if I + 1 <= N:
        lblk = factors.L[((I + 1, J), (I, J + 1))]
        term = (_act_a(Tu.block(I, I + 1), d[I], d[I + 1], d[J], dm)
                * _act_b(Tv.block(J, J), d[I + 1], dm)
                * _act_ab(lblk, dm))
        out["unwanted_upper"] = restrict(term)
    return out


def check_ab_relation(spec: ChainSpec, I, J, u, v):
    t = ab_terms(spec, I, J, u, v)
    res = t["lhs"] - t["wanted"]
    if "unwanted_lower" in t:
        res = res + t["unwanted_lower"]
    if "unwanted_upper" in t:
        res = res - t["unwanted_upper"]
    report = {k: not la.is_zero(m) for k, m in t.items() if k.startswith("unwanted")}
    return la.is_zero(res), {"residual_zero": la.is_zero(res), "nonzero_terms": report}
