"""Cartan data for the classical simple Lie algebras and single-node nesting.

Conventions
-----------
* Node labels follow Bourbaki: for B_r the short root is alpha_r, for C_r the
  long root is alpha_r, and D_r forks at alpha_{r-2} into alpha_{r-1},
  alpha_r.
* Long roots have squared length 2, so ``d_i = (alpha_i, alpha_i)/2`` is 1
  for long roots and 1/2 for short roots (B_r: alpha_r; C_r: alpha_1..r-1).
* ``cartan[i][j] = (alpha_i, alpha_j) / d_j``.  This is the transpose of
  the Kac convention for non simply-laced types.
* Vectors (roots, weights, coweights) are stored in simple-root
  coordinates; :meth:`RootSystem.pairing` applies the Gram matrix.

=====  ==========================  ==================
type   diagram                     d
=====  ==========================  ==================
A_r    1 - 2 - ... - r             (1, ..., 1)
B_r    1 - ... - (r-1) => r        (1, ..., 1, 1/2)
C_r    1 - ... - (r-1) <= r        (1/2, ..., 1/2, 1)
D_r    1 - ... - (r-2) < (r-1), r  (1, ..., 1)
=====  ==========================  ==================
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .errors import NotEndNode, RankTooSmall, UnsupportedType

FAMILIES = ("A", "B", "C", "D")
MIN_RANK = {"A": 1, "B": 2, "C": 2, "D": 3}

Vector = tuple  # tuple[Fraction, ...]


def _epsilon_roots(family: str, rank: int):
    """Simple roots in an orthogonal epsilon basis and the squared norm of epsilon."""
    r = rank
    if family == "A":
        n = r + 1
        roots = [[1 if k == i else -1 if k == i + 1 else 0 for k in range(n)] for i in range(r)]
        return roots, Fraction(1)
    roots = [[1 if k == i else -1 if k == i + 1 else 0 for k in range(r)] for i in range(r - 1)]
    if family == "B":
        roots.append([1 if k == r - 1 else 0 for k in range(r)])
        return roots, Fraction(1)
    if family == "C":
        roots.append([2 if k == r - 1 else 0 for k in range(r)])
        return roots, Fraction(1, 2)
    roots.append([1 if k in (r - 2, r - 1) else 0 for k in range(r)])
    return roots, Fraction(1)


def _gram_from_epsilon(roots, norm):
    return tuple(
        tuple(norm * sum(a * b for a, b in zip(x, y)) for y in roots) for x in roots
    )


def _solve(matrix, rhs):
    """Solve a small rational linear system by Gauss-Jordan elimination."""
    n = len(matrix)
    aug = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(row[-1] for row in aug)


@dataclass(frozen=True)
class RootSystem:
    """Cartan data of a classical simple Lie algebra (or the trivial rank-0 algebra)."""

    family: str
    rank: int
    gram: tuple = field(repr=False)

    @property
    def name(self) -> str:
        return f"{self.family}{self.rank}"

    @cached_property
    def symmetrizers(self) -> tuple:
        return tuple(self.gram[i][i] / 2 for i in range(self.rank))

    @cached_property
    def cartan(self) -> tuple:
        d = self.symmetrizers
        return tuple(
            tuple(int(self.gram[i][j] / d[j]) for j in range(self.rank)) for i in range(self.rank)
        )

    @cached_property
    def simple_roots(self) -> tuple:
        return tuple(
            tuple(Fraction(int(i == j)) for j in range(self.rank)) for i in range(self.rank)
        )

    @cached_property
    def fundamental_weights(self) -> tuple:
        # (omega_i, alpha_j) = d_j delta_ij
        d = self.symmetrizers
        return tuple(
            _solve(self.gram, [d[j] if j == i else 0 for j in range(self.rank)])
            for i in range(self.rank)
        )

    @cached_property
    def fundamental_coweights(self) -> tuple:
        # (omega_p^vee, alpha_i) = delta_ip
        return tuple(
            _solve(self.gram, [int(j == i) for j in range(self.rank)]) for i in range(self.rank)
        )

    def pairing(self, x, y) -> Fraction:
        return sum(
            (Fraction(x[i]) * self.gram[i][j] * Fraction(y[j])
             for i in range(self.rank) for j in range(self.rank) if x[i] and y[j]),
            Fraction(0),
        )

    def coroot_pairing(self, weight, i) -> Fraction:
        """<weight, alpha_i^vee> = (weight, alpha_i) / d_i, the i-th Dynkin label."""
        return self.pairing(weight, self.simple_roots[i]) / self.symmetrizers[i]

    def dynkin_labels(self, weight) -> tuple:
        return tuple(self.coroot_pairing(weight, i) for i in range(self.rank))

    @cached_property
    def positive_roots(self) -> tuple:
        """All positive roots as integer tuples in simple-root coordinates, by height."""
        r = self.rank
        simple = [tuple(int(i == j) for j in range(r)) for i in range(r)]
        roots = set(simple)
        layer = list(simple)
        while layer:
            nxt = []
            for beta in layer:
                for i in range(r):
                    q = 0
                    probe = list(beta)
                    while True:
                        probe[i] -= 1
                        if tuple(probe) in roots:
                            q += 1
                        else:
                            break
                    label = self.coroot_pairing(beta, i)
                    if q - label > 0:
                        new = tuple(b + (k == i) for k, b in enumerate(beta))
                        if new not in roots:
                            roots.add(new)
                            nxt.append(new)
            layer = nxt
        return tuple(sorted(roots, key=lambda b: (sum(b), tuple(-x for x in b))))

    @cached_property
    def highest_root_coeffs(self) -> tuple:
        if self.rank == 0:
            return ()
        return self.positive_roots[-1]

    def neighbours(self, p: int) -> list[int]:
        """0-based neighbours of the 0-based node ``p``."""
        return [j for j in range(self.rank) if j != p and self.cartan[p][j] != 0]


def build_root_system(family: str, rank: int) -> RootSystem:
    family = family.upper()
    if family not in FAMILIES:
        raise UnsupportedType(f"family {family!r} is not a classical type")
    if rank < MIN_RANK[family]:
        raise RankTooSmall(f"{family}{rank}: rank must be at least {MIN_RANK[family]}")
    roots, norm = _epsilon_roots(family, rank)
    return RootSystem(family, rank, _gram_from_epsilon(roots, norm))


def parse_algebra(spec: str) -> RootSystem:
    """Parse strings like ``"A2"`` or ``"b3"``."""
    spec = spec.strip()
    if len(spec) < 2 or not spec[1:].isdigit():
        raise UnsupportedType(f"cannot parse algebra {spec!r}")
    return build_root_system(spec[0], int(spec[1:]))


def epsilon_simple_roots(rs: RootSystem):
    """Simple roots in the epsilon basis used by the defining representations."""
    return _epsilon_roots(rs.family, rs.rank)


TRIVIAL = RootSystem("A", 0, ())


@dataclass(frozen=True)
class NestingData:
    """Result of deleting the end node ``removed`` (1-based) from ``parent``.

    ``node_map[k]`` is the 1-based parent label of the sub-algebra's node k+1.
    ``sub`` inherits the parent's bilinear form, so for rank-2 parents the
    remaining root keeps its length (d = 1/2 for a short root).
    """

    parent: RootSystem
    removed: int
    sub: RootSystem
    sub_family: str
    node_map: tuple
    max_charge: int

    @property
    def p0(self) -> int:
        return self.removed - 1

    @property
    def kept(self) -> tuple:
        """0-based parent indices of the sub-algebra nodes, in sub order."""
        return tuple(k - 1 for k in self.node_map)


def _sub_gram(rs, nodes):
    return tuple(tuple(rs.gram[i][j] for j in nodes) for i in nodes)


def _classify(rs: RootSystem, kept):
    """Find a standard type and node order matching the induced sub-diagram."""
    n = len(kept)
    if n == 0:
        return "A", ()
    target = {}
    for fam in FAMILIES:
        if n >= MIN_RANK[fam]:
            target[fam] = build_root_system(fam, n).cartan
    perms = [tuple(range(n))] + [p for p in itertools.permutations(range(n)) if p != tuple(range(n))]
    d = [rs.symmetrizers[k] for k in kept]
    for perm in perms:
        order = [kept[k] for k in perm]
        cart = tuple(
            tuple(int(rs.gram[i][j] / rs.symmetrizers[j]) for j in order) for i in order
        )
        for fam, want in target.items():
            if cart == want:
                return fam, tuple(order)
    raise UnsupportedType(f"could not classify sub-diagram of {rs.name} on nodes {kept}; d={d}")


def remove_node(rs: RootSystem, p: int) -> NestingData:
    """Delete the end node ``p`` (1-based) and describe the diagram subalgebra."""
    if not 1 <= p <= rs.rank:
        raise NotEndNode(f"node {p} out of range for {rs.name}")
    if len(rs.neighbours(p - 1)) >= 2:
        raise NotEndNode(f"node {p} of {rs.name} has {len(rs.neighbours(p - 1))} neighbours")
    kept = [k for k in range(rs.rank) if k != p - 1]
    fam, order = _classify(rs, kept)
    sub = RootSystem(fam, len(order), _sub_gram(rs, order))
    return NestingData(
        parent=rs,
        removed=p,
        sub=sub,
        sub_family=fam,
        node_map=tuple(k + 1 for k in order),
        max_charge=rs.highest_root_coeffs[p - 1],
    )


def charge_coweight(nesting: NestingData) -> tuple:
    """omega_p^vee in simple-root coordinates."""
    return nesting.parent.fundamental_coweights[nesting.p0]


def positive_roots_of_charge(nesting: NestingData, charge: int) -> list:
    """Positive roots whose alpha_p coefficient equals ``charge``."""
    return [b for b in nesting.parent.positive_roots if b[nesting.p0] == charge]


def summary(rs: RootSystem, nesting: NestingData | None = None) -> dict:
    """JSON-friendly description used by the ``roots`` subcommand."""
    f = lambda v: [str(x) for x in v]  # noqa: E731
    out = {
        "algebra": rs.name,
        "cartan": [list(row) for row in rs.cartan],
        "symmetrizers": f(rs.symmetrizers),
        "fundamental_weights": [f(w) for w in rs.fundamental_weights],
        "fundamental_coweights": [f(w) for w in rs.fundamental_coweights],
        "highest_root_coeffs": list(rs.highest_root_coeffs),
        "positive_roots": [list(b) for b in rs.positive_roots],
    }
    if nesting is not None:
        out["nesting"] = {
            "removed": nesting.removed,
            "sub": nesting.sub.name if nesting.sub.rank else "trivial",
            "node_map": list(nesting.node_map),
            "max_charge": nesting.max_charge,
            "sub_cartan": [list(row) for row in nesting.sub.cartan],
            "charge_coweight": f(charge_coweight(nesting)),
        }
    return out
