"""Rational function reconstruction from exact point evaluations.

A univariate rational function p/q is recovered by solving the linear
system p(u_k) - f_k q(u_k) = 0 for increasing total degree and accepting
the first candidate that also matches a set of held-out samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from sympy import Poly, QQ, Symbol

from . import linalg as la
from .errors import ReconstructionFailed

_U = Symbol("u")


@dataclass(frozen=True)
class RationalFunction:
    num: tuple  # coefficients, lowest degree first
    den: tuple

    def __call__(self, u):
        u = Fraction(u)
        return _horner(self.num, u) / _horner(self.den, u)

    def numeric(self, u: complex) -> complex:
        return _horner(self.num, u, complex) / _horner(self.den, u, complex)

    def laurent_lead(self):
        """(order, coefficient) of the leading term at u = 0."""
        kn = next(i for i, c in enumerate(self.num) if c) if any(self.num) else None
        if kn is None:
            return None, Fraction(0)
        kd = next(i for i, c in enumerate(self.den) if c)
        return kn - kd, self.num[kn] / self.den[kd]

    def degrees(self):
        return _deg(self.num), _deg(self.den)

    def __str__(self):
        n = Poly(list(reversed(self.num)), _U, domain=QQ).as_expr()
        d = Poly(list(reversed(self.den)), _U, domain=QQ).as_expr()
        return f"({n})/({d})" if d != 1 else f"{n}"


def _deg(c):
    nz = [i for i, x in enumerate(c) if x]
    return nz[-1] if nz else -1


def _horner(coeffs, u, kind=Fraction):
    acc = kind(0)
    for c in reversed(coeffs):
        acc = acc * u + kind(c)
    return acc


def _normalise(num, den):
    pn = Poly(list(reversed(num)), _U, domain=QQ)
    pd = Poly(list(reversed(den)), _U, domain=QQ)
    g = pn.gcd(pd)
    pn, pd = pn.quo(g), pd.quo(g)
    lc = pd.LC()
    pn, pd = pn * (1 / lc), pd * (1 / lc)

    def coeffs(p):
        out = [Fraction(int(c.numerator), int(c.denominator)) for c in reversed(p.all_coeffs())]
        return tuple(out)

    return RationalFunction(coeffs(pn) if not pn.is_zero else (Fraction(0),), coeffs(pd))


def reconstruct(samples, max_degree: int = 12, holdout: int = 3) -> RationalFunction:
    """Fit a rational function to ``[(u, f(u)), ...]`` with exact rationals."""
    samples = [(Fraction(u), Fraction(f)) for u, f in samples]
    if all(f == 0 for _, f in samples):
        return RationalFunction((Fraction(0),), (Fraction(1),))
    for total in range(max_degree + 1):
        need = total + 2
        if need + holdout > len(samples):
            break
        fit, check = samples[:need], samples[need:]
        for dn in range(total, -1, -1):
            dd = total - dn
            rows = []
            for u, f in fit:
                rows.append([u ** i for i in range(dn + 1)] + [-f * u ** i for i in range(dd + 1)])
            ker = la.nullspace(la.from_rows(rows))
            if ker.shape[0] == 0:
                continue
            vec = la.to_rows(ker)[0]
            num, den = tuple(vec[: dn + 1]), tuple(vec[dn + 1:])
            if not any(den):
                continue
            cand = RationalFunction(num, den)
            try:
                ok = all(cand(u) == f for u, f in check)
            except ZeroDivisionError:
                ok = False
            if ok:
                return _normalise(num, den)
    raise ReconstructionFailed(
        f"no rational function of total degree <= {max_degree} fits {len(samples)} samples"
    )


def sample_grid(count: int, scale: Fraction = Fraction(1, 7), avoid=()) -> list[Fraction]:
    """Small nonzero rationals +-k*scale, skipping ``avoid``."""
    out, k = [], 1
    avoid = set(Fraction(a) for a in avoid)
    while len(out) < count:
        for s in (1, -1):
            u = s * k * scale + Fraction(1, 97 * k)
            if u not in avoid and u != 0:
                out.append(u)
        k += 1
    return out[:count]


def reconstruct_matrix(evaluate, shape, points, max_degree: int = 12) -> dict:
    """Entry-wise reconstruction of a matrix-valued rational function.

    ``evaluate(u)`` returns a DomainMatrix; the result maps (i, j) to a
    RationalFunction for every entry that is nonzero at some sample.
    """
    values = [(u, la.dok(evaluate(u))) for u in points]
    keys = set()
    for _, d in values:
        keys.update(d)
    out = {}
    for key in sorted(keys):
        data = [(u, la.to_fraction(d[key]) if key in d else Fraction(0)) for u, d in values]
        out[key] = reconstruct(data, max_degree=max_degree)
    return out


def laurent_leading(entries: dict, shape):
    """Leading Laurent order at 0 and its coefficient matrix for reconstructed entries."""
    leads = {k: f.laurent_lead() for k, f in entries.items()}
    orders = [o for o, _ in leads.values() if o is not None]
    if not orders:
        return None, la.zeros(*shape)
    k = min(orders)
    coeff = {key: c for key, (o, c) in leads.items() if o == k}
    return k, la.from_dok(coeff, shape)
