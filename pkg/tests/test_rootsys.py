from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nestedba.errors import NotEndNode, RankTooSmall, UnsupportedType
from nestedba.rootsys import (build_root_system, charge_coweight, parse_algebra,
                              positive_roots_of_charge, remove_node, summary)

CASES = [("A", r) for r in range(1, 6)] + [("B", r) for r in range(2, 5)] + \
        [("C", r) for r in range(2, 5)] + [("D", r) for r in range(3, 6)]


def n_positive(family, r):
    return {"A": r * (r + 1) // 2, "B": r * r, "C": r * r, "D": r * (r - 1)}[family]


def highest_root(family, r):
    if family == "A":
        return (1,) * r
    if family == "B":
        return (1,) + (2,) * (r - 1)
    if family == "C":
        return (2,) * (r - 1) + (1,)
    return (1,) + (2,) * (r - 3) + (1, 1)


@pytest.mark.parametrize("family,r", CASES)
def test_root_counts_and_highest_root(family, r):
    rs = build_root_system(family, r)
    assert len(rs.positive_roots) == n_positive(family, r)
    assert rs.highest_root_coeffs == highest_root(family, r)


def test_b2_cartan_matches_hand_computation():
    # alpha_1 long, alpha_2 short: (a1,a2) = -1, d = (1, 1/2)
    rs = build_root_system("B", 2)
    assert rs.symmetrizers == (1, Fraction(1, 2))
    assert rs.cartan == ((2, -2), (-1, 2))


def test_d4_fork():
    rs = build_root_system("D", 4)
    assert sorted(rs.neighbours(1)) == [0, 2, 3]
    with pytest.raises(NotEndNode):
        remove_node(rs, 2)


@pytest.mark.parametrize("family,r", CASES)
def test_fundamental_weights_dual_to_coroots(family, r):
    rs = build_root_system(family, r)
    for i, w in enumerate(rs.fundamental_weights):
        assert rs.dynkin_labels(w) == tuple(int(i == j) for j in range(r))


@pytest.mark.parametrize("family,r", CASES)
def test_coweights_measure_root_coefficients(family, r):
    rs = build_root_system(family, r)
    for p in range(r):
        cw = rs.fundamental_coweights[p]
        for beta in rs.positive_roots:
            assert rs.pairing(cw, beta) == beta[p]


@given(st.sampled_from(CASES), st.data())
def test_nesting_partitions_roots_by_charge(case, data):
    family, r = case
    rs = build_root_system(family, r)
    ends = [p for p in range(1, r + 1) if len(rs.neighbours(p - 1)) <= 1]
    p = data.draw(st.sampled_from(ends))
    nd = remove_node(rs, p)
    assert nd.sub.rank == r - 1
    assert p not in nd.node_map
    counts = [len(positive_roots_of_charge(nd, k)) for k in range(nd.max_charge + 1)]
    assert sum(counts) == len(rs.positive_roots)
    assert counts[0] == (n_positive(nd.sub_family, r - 1) if r > 1 else 0)
    assert charge_coweight(nd) == rs.fundamental_coweights[p - 1]


@pytest.mark.parametrize("family,r,p,sub", [
    ("A", 3, 1, "A2"), ("B", 3, 1, "B2"), ("C", 3, 3, "A2"), ("D", 4, 1, "D3"), ("D", 5, 5, "A4"),
    ("B", 2, 1, "A1"), ("C", 2, 2, "A1"),
])
def test_sub_diagram_types(family, r, p, sub):
    assert remove_node(build_root_system(family, r), p).sub.name == sub


def test_charge_one_roots_count_aux_site():
    # the charge-1 positive roots of B2 with alpha_1 removed: a1, a1+a2, a1+2a2
    nd = remove_node(build_root_system("B", 2), 1)
    assert positive_roots_of_charge(nd, 1) == [(1, 0), (1, 1), (1, 2)]


def test_parse_errors():
    with pytest.raises(UnsupportedType):
        parse_algebra("X3")
    with pytest.raises(UnsupportedType):
        parse_algebra("A")
    with pytest.raises(RankTooSmall):
        parse_algebra("D2")


def test_summary_is_json_ready():
    import json
    rs = parse_algebra("C3")
    out = summary(rs, remove_node(rs, 3))
    json.dumps(out)
    assert out["nesting"]["sub"] == "A2"
