import random

import pytest
from hypothesis import given, settings, strategies as st

from novikov import matrix as mx
from novikov.chain import (
    ChainComplex,
    ChainHomotopy,
    ChainMap,
    HomologyGroup,
    HomotopyIdentityFails,
    Label,
    NotAChainMap,
    PrecisionExhausted,
    ValueFiltration,
    WrongCoefficients,
    cone_iso,
    homology_Z,
    identity_map,
    is_block_unitriangular,
    mapping_cone,
    novikov_ranks,
    verify_complex,
    zero_map,
)
from novikov.rings import LaurentPolynomial

from .helpers import FLIP, Z0, random_complex, random_matrix, random_nullhomotopic_map


def circle():
    return ChainComplex({0: ["q"], 1: ["p"]}, {1: [[0]]})


def disk():
    return ChainComplex({0: ["v"], 1: ["e"], 2: ["f"]}, {1: [[0]], 2: [[1]]})


def test_circle_passes():
    assert verify_complex(circle()) == []


def test_bad_square_is_reported():
    c = ChainComplex({0: ["a"], 1: ["b"], 2: ["c"]}, {1: [[1]], 2: [[2]]})
    assert verify_complex(c) == [(2, 0, 0)]


def test_novikov_single_differential():
    one_minus_z = Z0.one(8) - Z0.z(1, 8)
    c = ChainComplex({0: ["q"], 1: ["p"]}, {1: [[one_minus_z]]}, Z0, 8)
    assert verify_complex(c) == []
    assert novikov_ranks(c, 8) == {0: 0, 1: 0}


def test_homology_point_torus_rp2():
    assert homology_Z(ChainComplex({0: ["x"]})) == {0: HomologyGroup(1)}
    torus = ChainComplex({0: ["a"], 1: ["b", "c"], 2: ["e"]})
    assert [str(g) for g in homology_Z(torus).values()] == ["Z", "Z^2", "Z"]
    rp2 = ChainComplex({0: ["v"], 1: ["a"], 2: ["f"]}, {1: [[0]], 2: [[2]]})
    assert homology_Z(rp2) == {0: HomologyGroup(1), 1: HomologyGroup(0, (2,)), 2: HomologyGroup(0)}


def test_homology_needs_integers():
    c = ChainComplex({0: ["q"]}, {}, Z0, 4)
    with pytest.raises(WrongCoefficients):
        homology_Z(c)


def test_cone_of_zero_map_is_sum_with_negated_block():
    c = disk()
    cone = mapping_cone(zero_map(c, circle()))
    assert cone.names(2) == ["e[+1]"]
    assert cone.diff(3)[0, 0] == -1
    assert verify_complex(cone) == []


def test_cone_of_identity_is_acyclic():
    c = disk()
    h = homology_Z(mapping_cone(identity_map(c)))
    assert all(g == HomologyGroup(0) for g in h.values())


def test_two_disks_glued_along_circle():
    # cone of (i, -i): C(S^1) -> C(D^2) + C(D^2) has the homology of S^2
    s1 = ChainComplex({0: ["v"], 1: ["e"]}, {1: [[0]]})
    two = ChainComplex(
        {0: ["v1", "v2"], 1: ["e1", "e2"], 2: ["f1", "f2"]},
        {1: [[0, 0], [0, 0]], 2: [[1, 0], [0, 1]]},
    )
    phi = ChainMap(s1, two, {0: [[1], [-1]], 1: [[1], [-1]]})
    h = homology_Z(mapping_cone(phi))
    assert [str(h[i]) for i in range(3)] == ["Z", "0", "Z"]


def test_non_chain_map_rejected():
    c = disk()
    with pytest.raises(NotAChainMap):
        mapping_cone(ChainMap(c, c, {1: [[1]]}))


def test_anticommuting_map_regraded():
    # theta: D -> F of degree -1 with d theta = -theta d
    d = ChainComplex({1: ["a"], 2: ["b"]}, {2: [[1]]})
    f = ChainComplex({0: ["x"], 1: ["y"]}, {1: [[1]]})
    theta = ChainMap(d, f, {1: [[1]], 2: [[-1]]}, shift=-1, anticommute=True)
    assert theta.check() == []
    cone = mapping_cone(theta)
    assert verify_complex(cone) == []
    assert all(g == HomologyGroup(0) for g in homology_Z(cone).values())


def test_cone_iso_trivial_homotopy_is_identity():
    c = disk()
    phi = identity_map(c)
    iso = cone_iso(ChainHomotopy(phi, phi))
    cone = mapping_cone(phi)
    assert iso == identity_map(cone)


def test_cone_iso_rejects_bad_homotopy():
    c = disk()
    phi = identity_map(c)
    with pytest.raises(HomotopyIdentityFails):
        cone_iso(ChainHomotopy(phi, phi, {1: [[1]]}))


def random_homotopy(rng, ring=None, precision=None):
    c = random_complex(rng, ring, precision, prefix="c")
    d = random_complex(rng, ring, precision, prefix="d")
    phi = random_nullhomotopic_map(rng, c, d)
    psi = {i: random_matrix(rng, d.rank(i + 1), c.rank(i), ring, precision) for i in c.degree_range()}
    h = ChainHomotopy(phi, phi, psi)
    maps = {}
    for i in c.degree_range():
        dpsi = mx.matmul(d.diff(i + 1), h.matrix(i)) + mx.matmul(h.matrix(i - 1), c.diff(i))
        maps[i] = phi.matrix(i) - dpsi
    return ChainHomotopy(phi, ChainMap(c, d, maps), psi)


@pytest.mark.parametrize("seed", range(8))
def test_random_rank3_homotopy_gives_chain_isomorphism(seed):
    h = random_homotopy(random.Random(seed))
    assert h.check() == []
    iso = cone_iso(h)
    assert iso.check() == []
    back = cone_iso(h.reverse())
    both = back.compose(iso)
    for i in iso.source.degrees:
        split = h.phi.target.rank(i)
        assert is_block_unitriangular(both.matrix(i), split)


RINGS = [(None, None), (FLIP, None), (Z0, 8)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(RINGS))
def test_cone_is_always_a_complex(seed, ring):
    rng = random.Random(seed)
    ctx, prec = ring
    c = random_complex(rng, ctx, prec, prefix="c")
    d = random_complex(rng, ctx, prec, prefix="d")
    assert verify_complex(c) == [] and verify_complex(d) == []
    cone = mapping_cone(random_nullhomotopic_map(rng, c, d))
    assert verify_complex(cone) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_cone_of_zero_map_adds_shifted_homology(seed):
    rng = random.Random(seed)
    c = random_complex(rng, prefix="c")
    d = random_complex(rng, prefix="d")
    hc, hd = homology_Z(c), homology_Z(d)
    hcone = homology_Z(mapping_cone(zero_map(c, d)))
    for i in range(0, 4):
        expect = (hd.get(i, HomologyGroup(0)).betti) + hc.get(i - 1, HomologyGroup(0)).betti
        assert hcone.get(i, HomologyGroup(0)).betti == expect


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_novikov_ranks_invariant_under_permutation_and_units(seed):
    rng = random.Random(seed)
    c = random_complex(rng, Z0, 10)
    base = novikov_ranks(c, 10)
    orders = {i: rng.sample(range(c.rank(i)), c.rank(i)) for i in c.degrees}
    assert novikov_ranks(c.permuted(orders), 10) == base
    # rescale one basis vector of each degree by the unit -z^2 (and inverse on rows)
    diffs = {}
    for i in c.degree_range():
        m = c.diff(i).copy()
        if m.shape[1]:
            m[:, 0] = [v * Z0.z(2) * -1 for v in m[:, 0]]
        if m.shape[0]:
            m[0, :] = [-Z0.z(-2) * v for v in m[0, :]]
        diffs[i] = m
    scaled = ChainComplex(c.basis, diffs, Z0, 10)
    assert novikov_ranks(scaled, 6) == novikov_ranks(c, 6)


def test_novikov_ranks_zero_differential():
    c = ChainComplex({0: ["a", "b"], 1: ["c"]}, {}, Z0, 5)
    assert novikov_ranks(c, 5) == {0: 2, 1: 1}


def test_novikov_ranks_precision_exhausted():
    c = ChainComplex({0: ["q"], 1: ["p"]}, {1: [[Z0.z(5, 8)]]}, Z0, 8)
    with pytest.raises(PrecisionExhausted):
        novikov_ranks(c, 4)
    assert novikov_ranks(c, 8) == {0: 0, 1: 0}


def test_json_round_trip():
    x = LaurentPolynomial({0: 1, 1: -1})
    c = ChainComplex(
        {0: [Label("q", 0, 0)], 1: [Label("p", 1, 1)]}, {1: [[x]]}, Z0, 6
    )
    assert ChainComplex.from_json(c.to_json()) == c
    assert ChainComplex.from_json(circle().to_json()) == circle()


def test_value_filtration_gap():
    c = ChainComplex({0: [Label("a", 0, 0), Label("b", 0, 3)], 1: [Label("c", 1, 1)]})
    assert ValueFiltration.of(c).gap == 1


def test_shift_negates_differential():
    s = disk().shift(1)
    assert s.names(1) == ["f"] and s.diff(1)[0, 0] == -1
