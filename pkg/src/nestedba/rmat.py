"""Rational R-matrices for classical vector representations, fusion and checks.

``yang_rmatrix`` gives R(u) = (u + hbar P)/(u + hbar) on C^n (x) C^n.  For
orthogonal and symplectic types ``zz_rmatrix`` adds the rank-one invariant
term Q, whose signs are not hard-coded but fixed by a search over sign
conventions that demands the exact Yang-Baxter equation and unitarity.
The winning signs are frozen in ``ZZ_CONVENTIONS`` and re-derived in the
test-suite.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import linalg as la
from .errors import ConventionSearchFailed, NotFusionPoint, SingularPoint, UnsupportedType
from .repkit import MatrixRep, compress_rep, defining_rep, tensor_rep
from .rootsys import RootSystem, build_root_system

# (c_P, c_Q, s): R(u) = g(u) (1 + c_P hbar P/u + c_Q hbar Q/(u - s kappa hbar)),
# g(u) = u/(u + c_P hbar).  Regenerate with ``search_zz_convention``.
ZZ_CONVENTIONS = {
    "B": (1, -1, -1),
    "C": (1, -1, -1),
    "D": (1, -1, -1),
}


@dataclass(frozen=True, eq=False)
class RMatrix:
    """u -> R(u) on V1 (x) V2, exact at rational u and numeric at complex u."""

    name: str
    dims: tuple
    hbar: Fraction
    exact: Callable = field(repr=False)
    numeric_fn: Callable = field(repr=False)
    singular_set: tuple = ()
    reps: tuple = (None, None)
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    def evaluate(self, u):
        u = Fraction(u)
        if u in self.singular_set:
            raise SingularPoint(f"{self.name}: u={u} is singular", point=u)
        return self.exact(la.qq(u))

    def numeric(self, u: complex) -> np.ndarray:
        return self.numeric_fn(complex(u))

    def __call__(self, u):
        return self.evaluate(u)


def _perm_np(n):
    return la.to_numpy(la.swap(n, n)).real


def yang_rmatrix(n: int, hbar=1, rep: MatrixRep | None = None) -> RMatrix:
    if n < 2:
        raise UnsupportedType("yang_rmatrix needs n >= 2")
    hbar = Fraction(hbar)
    h = la.qq(hbar)
    P = la.swap(n, n)
    eye = la.eye(n * n)
    Pn = _perm_np(n)
    In = np.eye(n * n)
    rep = rep or defining_rep(build_root_system("A", n - 1))

    def exact(u):
        return (eye * u + P * h) * (1 / (u + h))

    def numeric(u):
        return (u * In + float(hbar) * Pn) / (u + float(hbar))

    return RMatrix(f"yang({n})", (n, n), hbar, exact, numeric, (-hbar,), (rep, rep),
                   {"kind": "yang", "n": n, "cleared": lambda u: u * In + float(hbar) * Pn})


# --- orthogonal / symplectic --------------------------------------------------

def invariant_q(rep: MatrixRep):
    """Q = Omega theta^T from the invariant vector and covector of V (x) V, with Q^2 = n Q."""
    n = rep.dim
    tr = tensor_rep(rep, rep)
    gens = [m for _, m in tr.generators()]
    stack = gens[0].vstack(*gens[1:])
    vec = la.nullspace(stack)
    stack_t = gens[0].transpose().vstack(*[g.transpose() for g in gens[1:]])
    cov = la.nullspace(stack_t)
    if vec.shape[0] != 1 or cov.shape[0] != 1:
        raise UnsupportedType(f"{rep.name}: no unique invariant bilinear form")
    omega = vec.transpose()
    theta = cov.transpose()
    pair = (theta.transpose() * omega).to_dod().get(0, {}).get(0)
    theta = theta * (la.qq(n) / pair)
    return omega * theta.transpose()


def kappa(rs: RootSystem) -> Fraction:
    n = defining_dim(rs)
    return Fraction(n, 2) - 1 if rs.family in "BD" else Fraction(n, 2) + 1


def defining_dim(rs: RootSystem) -> int:
    return {"A": rs.rank + 1, "B": 2 * rs.rank + 1, "C": 2 * rs.rank, "D": 2 * rs.rank}[rs.family]


def _zz_parts(rs, hbar, conv):
    rep = defining_rep(rs)
    n = rep.dim
    Q = invariant_q(rep)
    P = la.swap(n, n)
    cp, cq, s = conv
    h = la.qq(hbar)
    pole = la.qq(s * kappa(rs) * hbar)
    eye = la.eye(n * n)

    def exact(u):
        g = u / (u + cp * h)
        return eye * g + P * (cp * h / (u + cp * h)) + Q * (g * cq * h / (u - pole))

    Pn, Qn, In = la.to_numpy(P).real, la.to_numpy(Q).real, np.eye(n * n)
    hf, pf = float(hbar), float(s * kappa(rs) * hbar)

    def numeric(u):
        g = u / (u + cp * hf)
        return g * In + (cp * hf / (u + cp * hf)) * Pn + (g * cq * hf / (u - pf)) * Qn

    singular = tuple(sorted({Fraction(-cp) * hbar, s * kappa(rs) * hbar}))
    return rep, exact, numeric, singular


def _unnormalised_ybe(P, Q, n, conv, kap, u, v):
    """YBE for 1 + cP P/u + cQ Q/(u - s kappa); the scalar prefactor drops out."""
    cp, cq, s = conv

    def r(x):
        x = la.qq(x)
        return la.eye(n * n) + P * (cp / x) + Q * (cq / (x - la.qq(s * kap)))

    dims = [n, n, n]
    r12 = la.embed(r(u - v), dims, [0, 1])
    r13 = la.embed(r(u), dims, [0, 2])
    r23 = la.embed(r(v), dims, [1, 2])
    return r12 * r13 * r23 == r23 * r13 * r12


def search_zz_convention(rs: RootSystem, seed: int = 0, samples: int = 10):
    """Return the first (c_P, c_Q, s) passing exact YBE and unitarity; c_P = +1 preferred."""
    rep = defining_rep(rs)
    n = rep.dim
    P = la.swap(n, n)
    Q = invariant_q(rep)
    kap = kappa(rs)
    rng = random.Random(seed)
    order = [(cp, cq, s) for cp in (1, -1) for cq in (1, -1) for s in (1, -1)]
    for conv in order:
        bad = {Fraction(0), conv[2] * kap, -conv[0] * Fraction(1)}
        pts = []
        while len(pts) < samples:
            u, v = random_rational(rng), random_rational(rng)
            if {u, v, u - v, -u, -v} & bad or u == v:
                continue
            pts.append((u, v))
        if not all(_unnormalised_ybe(P, Q, n, conv, kap, u, v) for u, v in pts):
            continue
        _, exact, _, singular = _zz_parts(rs, Fraction(1), conv)
        ok = all(exact(la.qq(u)) * exact(la.qq(-u)) == la.eye(n * n)
                 for u, _ in pts if u not in singular and -u not in singular)
        if ok:
            return conv
    raise ConventionSearchFailed(f"no sign convention satisfies YBE for {rs.name}")


def zz_rmatrix(rs: RootSystem, hbar=1, conv=None) -> RMatrix:
    if rs.family not in "BCD":
        raise UnsupportedType(f"zz_rmatrix needs an orthogonal or symplectic type, got {rs.name}")
    conv = conv or ZZ_CONVENTIONS[rs.family]
    hbar = Fraction(hbar)
    rep, exact, numeric, singular = _zz_parts(rs, hbar, conv)
    n = rep.dim
    return RMatrix(f"zz({rs.name})", (n, n), hbar, exact, numeric, singular, (rep, rep),
                   {"kind": "zz", "algebra": rs.name, "conv": conv, "kappa": str(kappa(rs))})


def rmatrix_for(rs: RootSystem, hbar=1) -> RMatrix:
    """Vector-representation R-matrix of a classical algebra."""
    if rs.family == "A":
        return yang_rmatrix(rs.rank + 1, hbar, defining_rep(rs))
    return zz_rmatrix(rs, hbar)


# --- sampling -----------------------------------------------------------------

def random_rational(rng: random.Random, num=20, den=5) -> Fraction:
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def sample_points(rng: random.Random, count: int, bad=(), arity: int = 1, ok=None):
    """Seeded rational points avoiding ``bad``; tuples when ``arity`` > 1."""
    bad = set(Fraction(b) for b in bad)
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 10000:
            raise RuntimeError("could not draw enough regular sample points")
        pt = tuple(random_rational(rng) for _ in range(arity))
        if any(x in bad for x in pt) or len(set(pt)) < arity:
            continue
        if ok is not None and not ok(*pt):
            continue
        out.append(pt[0] if arity == 1 else pt)
    return out


# --- checks ---------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    points: list
    witness: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "points": [_point_json(p) for p in self.points],
            "witness": self.witness,
        }


def _point_json(p):
    if isinstance(p, tuple):
        return [str(Fraction(x)) for x in p]
    return str(Fraction(p))


def residual_norm(m) -> str:
    """Largest absolute entry, as an exact rational string."""
    return la.fmt(la.max_abs(m))


def check_mixed_ybe(r12: RMatrix, r13: RMatrix, r23: RMatrix, u, v):
    """R12(u-v) R13(u) R23(v) == R23(v) R13(u) R12(u-v) on V1 (x) V2 (x) V3.

    Returns (passed, residual matrix).
    """
    d1, d2 = r12.dims
    d3 = r13.dims[1]
    if r13.dims[0] != d1 or r23.dims != (d2, d3):
        raise ValueError("R-matrix factors do not share spaces")
    u, v = Fraction(u), Fraction(v)
    dims = [d1, d2, d3]
    a = la.embed(r12.evaluate(u - v), dims, [0, 1])
    b = la.embed(r13.evaluate(u), dims, [0, 2])
    c = la.embed(r23.evaluate(v), dims, [1, 2])
    res = a * b * c - c * b * a
    return la.is_zero(res), res


def check_ybe(R: RMatrix, u, v):
    return check_mixed_ybe(R, R, R, u, v)


def check_unitarity(R: RMatrix, u):
    res = R.evaluate(u) * R.evaluate(-Fraction(u)) - la.eye(R.dim)
    return la.is_zero(res), res


def check_prp(R: RMatrix, u):
    d1, d2 = R.dims
    if d1 != d2:
        raise ValueError("PRP needs equal factors")
    P = la.swap(d1, d2)
    m = R.evaluate(u)
    res = P * m * P - m
    return la.is_zero(res), res


def check_g_invariance(R: RMatrix, u, reps=None):
    a, b = reps or R.reps
    m = R.evaluate(u)
    worst = la.zeros(R.dim)
    ok = True
    for (_, x), (_, y) in zip(a.generators(), b.generators()):
        delta = la.kron(x, la.eye(b.dim)) + la.kron(la.eye(a.dim), y)
        c = la.commutator(delta, m)
        if not la.is_zero(c):
            ok, worst = False, c
    return ok, worst


def check_identity_at_infinity(R: RMatrix, scales=(10 ** 6, 10 ** 9, 10 ** 12)):
    """R(u) - 1 shrinks like 1/u: u * (R(u) - 1) stays bounded along a growing sequence."""
    norms = []
    for s in scales:
        m = (R.evaluate(s) - la.eye(R.dim)) * la.qq(s)
        norms.append(la.max_abs(m))
    return all(x <= 4 * max(norms[0], 1) for x in norms), [la.fmt(x) for x in norms]


def perturbed(R: RMatrix, eps=Fraction(1, 3)) -> RMatrix:
    """Negative control: add an asymmetric non-invariant term."""
    d = R.dim
    bump = la.from_dok({(0, 1): 1}, (d, d))

    def exact(u):
        return R.exact(u) + bump * la.qq(eps)

    def numeric(u):
        return R.numeric_fn(u) + float(eps) * la.to_numpy(bump)

    return RMatrix(R.name + "+bump", R.dims, R.hbar, exact, numeric, R.singular_set, R.reps, R.meta)


# --- fusion ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Projector:
    matrix: object
    embed: object
    project: object

    @property
    def rank(self) -> int:
        return self.embed.shape[1]


def make_projector(pi) -> Projector:
    if pi * pi != pi:
        raise NotFusionPoint("matrix is not idempotent")
    c, f = la.rank_factor(pi)
    return Projector(pi, c, f)


def fusion_scalar(R: RMatrix, proj: Projector, z):
    """c with R(z) == c * Pi, or None."""
    c = la.proportionality(R.evaluate(z), proj.matrix)
    return None if c is None or c == 0 else c


def _check_fusion_point(R, base, proj, z):
    base = base or R
    if base.dims[0] != base.dims[1] or base.dim != proj.matrix.shape[0]:
        raise NotFusionPoint("fusion point check needs the R-matrix on V (x) V")
    if fusion_scalar(base, proj, z) is None:
        raise NotFusionPoint(f"{base.name}({z}) is not proportional to the projector")


def fuse(R: RMatrix, proj: Projector, z1, shift=0, name=None, base=None) -> RMatrix:
    """Left fusion: u -> Pi R13(u+z1+shift) R23(u+shift) Pi on image(Pi) (x) V2.

    ``R`` acts on V (x) V2 and ``proj`` on V (x) V.  ``shift`` = -z1/2 gives
    the centred convention that keeps unitarity; the default follows the
    plain definition.
    """
    z1, shift = Fraction(z1), Fraction(shift)
    d, d2 = R.dims
    _check_fusion_point(R, base, proj, z1)
    dims = [d, d, d2]
    emb = la.kron(proj.embed, la.eye(d2))
    prj = la.kron(proj.project, la.eye(d2))

    def exact(u):
        a = la.embed(R.exact(u + la.qq(z1 + shift)), dims, [0, 2])
        b = la.embed(R.exact(u + la.qq(shift)), dims, [1, 2])
        return prj * a * b * emb

    emb_n, prj_n = la.to_numpy(emb), la.to_numpy(prj)
    zf, sf = complex(float(z1 + shift)), complex(float(shift))

    def numeric(u):
        a = la.np_embed(R.numeric_fn(u + zf), dims, [0, 2])
        b = la.np_embed(R.numeric_fn(u + sf), dims, [1, 2])
        return prj_n @ a @ b @ emb_n

    singular = tuple(sorted({s - z1 - shift for s in R.singular_set} | {s - shift for s in R.singular_set}))
    rep_a, rep_b = R.reps
    w = None
    if rep_a is not None:
        w = compress_rep(tensor_rep(rep_a, rep_a), proj.embed, proj.project)
    return RMatrix(name or f"fuseL({R.name})", (proj.rank, d2), R.hbar, exact, numeric, singular,
                   (w, rep_b), {"kind": "fused", "z": str(z1), "shift": str(shift)})


def fuse_right(R: RMatrix, proj: Projector, z, shift=0, name=None, base=None) -> RMatrix:
    """Right fusion: u -> Pi34 R_X3(u+shift) R_X4(u+z+shift) Pi34 on V1 (x) image(Pi).

    ``R`` acts on V1 (x) V and ``proj`` on V (x) V.
    """
    z, shift = Fraction(z), Fraction(shift)
    _check_fusion_point(R, base, proj, z)
    d1, d = R.dims
    dims = [d1, d, d]
    emb = la.kron(la.eye(d1), proj.embed)
    prj = la.kron(la.eye(d1), proj.project)

    def exact(u):
        a = la.embed(R.exact(u + la.qq(shift)), dims, [0, 1])
        b = la.embed(R.exact(u + la.qq(z + shift)), dims, [0, 2])
        return prj * a * b * emb

    emb_n, prj_n = la.to_numpy(emb), la.to_numpy(prj)
    zf, sf = complex(float(z + shift)), complex(float(shift))

    def numeric(u):
        a = la.np_embed(R.numeric_fn(u + sf), dims, [0, 1])
        b = la.np_embed(R.numeric_fn(u + zf), dims, [0, 2])
        return prj_n @ a @ b @ emb_n

    singular = tuple(sorted({s - shift for s in R.singular_set} | {s - z - shift for s in R.singular_set}))
    rep_a, rep_b = R.reps
    w = None
    if rep_b is not None:
        w = compress_rep(tensor_rep(rep_b, rep_b), proj.embed, proj.project)
    return RMatrix(name or f"fuseR({R.name})", (d1, proj.rank), R.hbar, exact, numeric, singular,
                   (rep_a, w), {"kind": "fused", "z": str(z), "shift": str(shift)})


def sl2_spin1(hbar=1):
    """Fused sl_2 R-matrices in the centred convention.

    Returns a dict with keys ``"VV"``, ``"WV"``, ``"VW"``, ``"WW"`` where V is
    spin 1/2 and W spin 1, plus the symmetriser projector.
    """
    hbar = Fraction(hbar)
    R = yang_rmatrix(2, hbar)
    proj = make_projector(R.evaluate(hbar))
    wv = fuse(R, proj, hbar, shift=-hbar / 2, name="R[W,V]")
    vw = fuse_right(R, proj, hbar, shift=-hbar / 2, name="R[V,W]")
    ww = fuse_right(wv, proj, hbar, shift=-hbar / 2, name="R[W,W]", base=R)
    return {"VV": R, "WV": wv, "VW": vw, "WW": ww, "projector": proj}
