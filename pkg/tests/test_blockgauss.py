from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nestedba import blockgauss as bg
from nestedba import linalg as la
from nestedba.bethe import auxiliary_site
from nestedba.errors import ConjectureFailed, SingularDBlock
from nestedba.rmat import rmatrix_for, sl2_spin1, yang_rmatrix
from nestedba.rootsys import build_root_system, remove_node

F = Fraction


def family_for(name, p=1, variant="UDL"):
    if name == "spin1":
        R = sl2_spin1()["WW"]
        nd = remove_node(build_root_system("A", 1), 1)
    else:
        rs = build_root_system(name[0], int(name[1:]))
        R = rmatrix_for(rs)
        nd = remove_node(rs, p)
    s = bg.block_structure(R, nd)
    return R, nd, s, bg.GaussFamily(R, s, variant)


def hand_yang2(u):
    """Backward block elimination of the 4x4 Yang matrix, written out by hand.

    Sector K=1 holds pairs (0,1) = |up,down> and (1,0) = |down,up>; the last
    pair is eliminated first.
    """
    a, b = u / (u + 1), 1 / (u + 1)   # diagonal and swap entries on the sector
    d10 = a
    u_block = b / d10
    d01 = a - b * b / d10
    return {"D00": F(1), "D11": F(1), "D10": d10, "D01": d01, "U": u_block}


@pytest.mark.parametrize("u", [F(3), F(-5, 2), F(2, 7), F(11, 3)])
def test_yang2_against_hand_elimination(u):
    R, _, s, _ = family_for("A1")
    f = bg.udl_decompose(R, s, u)
    want = hand_yang2(u)
    assert la.to_rows(f.D[(0, 0)]) == [[want["D00"]]]
    assert la.to_rows(f.D[(1, 1)]) == [[want["D11"]]]
    assert la.to_rows(f.D[(1, 0)]) == [[want["D10"]]]
    assert la.to_rows(f.D[(0, 1)]) == [[want["D01"]]]
    assert want["D10"] == u / (u + 1) and want["D01"] == (u - 1) / u
    assert la.to_rows(f.U[((0, 1), (1, 0))]) == [[want["U"]]] == [[1 / u]]


def test_singular_at_zero():
    R, _, s, _ = family_for("A1")
    with pytest.raises(SingularDBlock):
        bg.udl_decompose(R, s, 0)


def test_ldu_corollary_value():
    R, _, s, _ = family_for("A1")
    g = bg.ldu_decompose(R, s, 3)
    assert la.to_rows(g.D[(0, 1)]) == [[F(3, 4)]]
    assert la.to_rows(g.D[(0, 1)]) == [[1 / ((F(-3) - 1) / F(-3))]]


CASES = [("A1", 1), ("A2", 1), ("A3", 1), ("B2", 1), ("B2", 2), ("C2", 1), ("C2", 2), ("spin1", 1)]


@pytest.mark.parametrize("name,p", CASES)
def test_reconstruction_uniqueness_and_corollary(name, p):
    R, _, s, fam = family_for(name, p)
    for u in bg.regular_points(fam, 4):
        f = bg.udl_decompose(R, s, u)
        g = bg.ldu_decompose(R, s, u)
        assert bg.check_reconstruction(R, f) and bg.check_reconstruction(R, g)
        assert bg.check_uniqueness(R, f)
        rel = bg.check_ldu_relations(bg.udl_decompose(R, s, -u), g)
        assert rel["D"] and rel["L"] and rel["U"]
        for pair in s.pairs:
            assert f.D[pair].shape[0] == s.block_dim(pair)


@given(st.fractions(min_value=-9, max_value=9, max_denominator=6))
def test_b2_reconstruction_property(u):
    R, _, s, fam = family_for("B2")
    try:
        f = bg.udl_decompose(R, s, u)
    except Exception:
        return  # singular set of the decomposition
    assert bg.check_reconstruction(R, f)


@pytest.mark.parametrize("name,p", CASES)
def test_d_identities(name, p):
    R, _, s, fam = family_for(name, p)
    for u in bg.regular_points(fam, 3):
        assert all(bg.check_d_identities(R, s, u).values())


def test_d_identities_named_points():
    R, _, s, _ = family_for("A1")
    assert all(bg.check_d_identities(R, s, 3).values())
    R, _, s, _ = family_for("B2")
    assert all(bg.check_d_identities(R, s, F(7, 3)).values())


def test_extremal_blocks_are_corners():
    R, _, s, fam = family_for("B2")
    u = F(5, 3)
    Ru = R.evaluate(u)
    assert fam.D(0, 0, u) == s.extract(Ru, (0, 0), (0, 0))
    assert fam.D(2, 2, u) == s.extract(Ru, (2, 2), (2, 2))


@pytest.mark.parametrize("name,p", [("A2", 1), ("B2", 1), ("C2", 2), ("spin1", 1)])
@pytest.mark.parametrize("variant", ["UDL", "LDU"])
def test_nested_ybe_all_triples(name, p, variant):
    _, _, s, fam = family_for(name, p, variant)
    N = s.N
    pts = [(F(7, 3), F(-2, 5)), (F(3, 2), F(5, 7))]
    for u, v in pts:
        for I in range(N + 1):
            for J in range(N + 1):
                for K in range(N + 1):
                    assert bg.check_nested_ybe(fam, I, J, K, u, v)[0]


def test_nested_ybe_named():
    _, _, _, fam = family_for("A2")
    assert bg.check_nested_ybe(fam, 1, 1, 1, 2, F(1, 2))[0]
    _, _, _, fam = family_for("B2")
    assert bg.check_nested_ybe(fam, 1, 0, 1, F(3, 2), F(-2, 5))[0]


def test_normalization_factors():
    _, _, _, fam = family_for("A1")
    f = bg.scalar_function(lambda u: bg.normalization_factor(fam, 1, u), bg.regular_points(fam, 10))
    assert str(f) == "(u - 1)/(u)"
    _, _, _, fam = family_for("B2")
    f = bg.scalar_function(lambda u: bg.normalization_factor(fam, 1, u), bg.regular_points(fam, 10))
    assert bg.linear_ratio(f) is not None


@pytest.mark.parametrize("name,p", [("spin1", 1), ("A2", 1), ("B2", 1), ("C2", 2)])
def test_projector_limit(name, p):
    _, nd, s, fam = family_for(name, p)
    want = auxiliary_site(nd).dim
    for J in range(s.N):
        lim = bg.projector_limit(fam, J, want)
        assert lim.passed, lim.to_json()
        P = lim.projector
        assert P * P == P and la.rank(P) == want


def test_projector_trivial_dual_factor():
    _, nd, s, fam = family_for("A2")
    lim = bg.projector_limit(fam, 0, 2)
    assert lim.projector == la.eye(2)


@pytest.mark.parametrize("name,p", [("A2", 1), ("B2", 1), ("spin1", 1)])
def test_fused_aux_rmatrix_nested_ybe(name, p):
    _, nd, s, fam = family_for(name, p)
    lim = bg.projector_limit(fam, 0, auxiliary_site(nd).dim)
    u, v = F(7, 3), F(-2, 5)
    for I in range(s.N + 1):
        aux = bg.fused_aux_rmatrix(fam, I, lim, check_points=[F(3), F(-5, 2)])
        dI = s.factor_dims((I, I))[0]
        dims = [dI, dI, lim.rank]
        a = la.embed(fam.D(I, I, u - v), dims, [0, 1])
        b = la.embed(aux.evaluate(u), dims, [0, 2])
        c = la.embed(aux.evaluate(v), dims, [1, 2])
        assert a * b * c == c * b * a


def test_sl3_aux_is_shifted_yang():
    _, nd, s, fam = family_for("A2")
    lim = bg.projector_limit(fam, 0, 2)
    aux = bg.fused_aux_rmatrix(fam, 1, lim)
    fit = bg.fit_yang_shift({u: aux.evaluate(u) for u in (F(3), F(5, 7), F(-9, 4), F(13, 5))})
    assert fit is not None


def test_degenerate_projector_rejected():
    _, _, s, fam = family_for("A2")
    bad = bg.ProjectorLimit(0, -1, None, la.zeros(2), 0, 2, False)
    with pytest.raises(ConjectureFailed):
        bg.fused_aux_rmatrix(fam, 1, bad)


def test_sl2_ratio_fit():
    # fitted N is dim(V) - 1 for both the spin-1/2 and the spin-1 auxiliary space
    _, _, s, fam = family_for("A1")
    assert bg.fit_sl2_ratio(fam)[0] == 1
    _, _, s, fam = family_for("spin1")
    N, ratios = bg.fit_sl2_ratio(fam)
    assert N == 2 == s.dec_a.rep.dim - 1


@pytest.mark.parametrize("u", [F(7, 3), F(-5, 2), F(2, 9)])
def test_sl2_l_block(u):
    _, _, _, fam = family_for("spin1")
    assert bg.check_sl2_l_block(fam, u)[0]
    _, _, _, fam = family_for("A1")
    assert bg.check_sl2_l_block(fam, u)[0]


@pytest.mark.parametrize("key", [("A", 2, 1), ("A", 4, 1), ("C", 2, 2), ("C", 3, 3), ("D", 4, 4)])
def test_n1_normalisation_spacing(key):
    rs = build_root_system(key[0], key[1])
    R = rmatrix_for(rs, hbar=F(3, 2))
    s = bg.block_structure(R, remove_node(rs, key[2]))
    out = bg.check_n1_normalisation(bg.GaussFamily(R, s), key)
    assert out["linear_ratio"] and out["pass"], out
