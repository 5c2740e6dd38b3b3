import random

import pytest
from hypothesis import given, settings, strategies as st

from novikov import matrix as mx
from novikov.assembly import (
    AlgebraicCobordism,
    BasisMismatch,
    FilteredEndomorphism,
    InvalidGamma,
    NotFilteredShape,
    assemble_fhat,
    build_E,
    congruence_order,
    diff_congruence,
    finite_stage,
    invert_filtered,
    is_identity_mod,
    retraction_check,
    validate_gamma,
)
from novikov.chain import ChainComplex, ChainMap, identity_map, novikov_ranks, verify_complex
from novikov.corpus import circle_domain, torus_domain, torus_projection_domain
from novikov.dmt import extract_gamma, zgraded_complex
from novikov.rings import NegativeDegreePresent, NovikovElement

from .helpers import FLIP, Z0, random_filtered, random_gamma


def ranks(r):
    return {k: v for k, v in r.items() if v}


def fiber_circle():
    return ChainComplex({0: ["q"], 1: ["p"]}, {1: [[0]]})


# -- validation and the E-complex -------------------------------------------------------

def test_decoupled_blocks_validate():
    d = ChainComplex({0: ["a"], 1: ["b"]}, {1: [[2]]})
    f = ChainComplex({1: ["x"]})
    g = AlgebraicCobordism(f, d, {}, {}, {0: [[3]], 1: [[3]]})
    assert validate_gamma(g, 6) == []


def test_fiber_with_identity_validates_and_is_acyclic():
    g = AlgebraicCobordism(ChainComplex({}), fiber_circle(), {}, {}, {0: [[1]], 1: [[1]]})
    assert validate_gamma(g, 8) == []
    e = build_E(g, 8)
    assert verify_complex(e, 8) == []
    assert ranks(novikov_ranks(e, 8)) == {}


def test_bumped_psi_is_reported():
    d = ChainComplex({0: ["a"], 1: ["b"]}, {1: [[1]]})
    g = AlgebraicCobordism(ChainComplex({}), d, {}, {}, {0: [[1]], 1: [[2]]})
    report = validate_gamma(g, 4)
    assert report and all("Dshift" in r for r in report)
    with pytest.raises(InvalidGamma):
        build_E(g, 4)
    with pytest.raises(InvalidGamma):
        assemble_fhat(g, 4)


def test_empty_cut_gives_interior_complex():
    f = ChainComplex({0: ["q"], 1: ["p"]}, {1: [[2]]})
    g = AlgebraicCobordism(f, ChainComplex({}), {}, {}, {})
    e = build_E(g, 5)
    assert e.names(1) == ["p"]
    fh = assemble_fhat(g, 5)
    assert fh.diff(1)[0, 0] == Z0.constant(2, 5)


def test_torus_projection_e_complex_is_acyclic():
    g = extract_gamma(torus_projection_domain())
    assert ranks(novikov_ranks(build_E(g, 8), 8)) == {}


def test_fhat_without_psi_is_one_step():
    f = ChainComplex({0: ["q"], 1: ["p"]})
    d = ChainComplex({0: ["n"]})
    g = AlgebraicCobordism(f, d, {1: [[1]]}, {0: [[1]]}, {})
    fh = assemble_fhat(g, 6)
    assert fh.diff(1)[0, 0] == Z0.z(1, 6)


def test_circle_domain_assembles_to_one_minus_z():
    g = extract_gamma(circle_domain())
    fh = assemble_fhat(g, 8)
    assert fh.diff(1)[0, 0] == Z0.one(8) - Z0.z(1, 8)


@pytest.mark.parametrize("seed", range(12))
def test_random_gamma_assembles(seed):
    g = random_gamma(random.Random(seed), seed % 3)
    assert validate_gamma(g, 8) == []
    fh = assemble_fhat(g, 8)
    assert verify_complex(fh, 8) == []
    # eliminating the D blocks does not change the Novikov ranks
    assert ranks(novikov_ranks(build_E(g, 8), 8)) == ranks(novikov_ranks(fh, 8))


@pytest.mark.parametrize("seed", range(6))
def test_truncation_is_functorial(seed):
    g = random_gamma(random.Random(seed), 1)
    big = assemble_fhat(g, 8)
    for ell in range(7):
        small = assemble_fhat(g, ell + 1)
        stage = finite_stage(big, ell).complex
        for i in small.degrees:
            assert mx.equal(stage.diff(i), small.diff(i), ell + 1)


def test_gamma_json_round_trip():
    g = random_gamma(random.Random(4), 2)
    back = AlgebraicCobordism.from_json(g.to_json())
    assert back.dumps() == g.dumps()
    twisted = AlgebraicCobordism(ChainComplex({}), fiber_circle(), {}, {}, {0: [[1]], 1: [[1]]}, FLIP)
    assert AlgebraicCobordism.from_json(twisted.to_json()).context == FLIP


# -- finite stages -------------------------------------------------------------------------

def test_stage_zero_is_the_augmented_complex():
    c = ChainComplex({0: ["q"], 1: ["p"]}, {1: [[Z0.one(6) - Z0.z(1, 6)]]}, Z0, 6)
    st0 = finite_stage(c, 0)
    assert st0.complex.diff(1)[0, 0] == Z0.one(1)
    st2 = finite_stage(c, 2)
    assert st2.complex.diff(1)[0, 0] == Z0.one(3) - Z0.z(1, 3)
    assert st2.projection.check(3) == []


def test_torus_stages_commute_with_projection():
    fd = torus_domain()
    c = zgraded_complex(fd, 5)
    for ell in range(1, 5):
        st = finite_stage(c, ell)
        assert st.projection is not None and st.projection.check(ell + 1) == []


def test_negative_degrees_rejected():
    c = ChainComplex({0: ["q"], 1: ["p"]}, {1: [[Z0.z(-1, 4)]]}, Z0, 4)
    with pytest.raises(NegativeDegreePresent):
        finite_stage(c, 1)


# -- filtered inversion ----------------------------------------------------------------------

def test_identity_inverts_to_identity():
    t = FilteredEndomorphism(["a", "b"], mx.identity(2), 6)
    assert is_identity_mod(invert_filtered(t).matrix, 6)


def test_one_by_one_geometric_series():
    n = 6
    t = FilteredEndomorphism(["a"], [[Z0.one(n) + Z0.z(1, n) * 3]], n)
    inv = invert_filtered(t).matrix[0, 0]
    expect = NovikovElement({j: Z0.group_element((-3) ** j) for j in range(n)}, n, Z0)
    assert inv == expect


def test_two_by_two_round_trip():
    n = 8
    theta = [[Z0.one(n), Z0.one(n)], [Z0.z(1, n), Z0.one(n) + Z0.z(2, n)]]
    t = FilteredEndomorphism(["a", "b"], theta, n)
    inv = invert_filtered(t)
    assert is_identity_mod(mx.matmul(t.matrix, inv.matrix), n)
    assert is_identity_mod(mx.matmul(inv.matrix, t.matrix), n)


def test_bad_shape_rejected():
    with pytest.raises(NotFilteredShape):
        FilteredEndomorphism(["a", "b"], [[1, 0], [1, 1]], 4)
    with pytest.raises(NotFilteredShape):
        FilteredEndomorphism(["a"], [[2]], 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.sampled_from([Z0, FLIP]))
def test_random_filtered_inverse(seed, size, ring):
    t = random_filtered(random.Random(seed), ring, size, 8)
    inv = invert_filtered(t, 8)
    assert is_identity_mod(mx.matmul(t.matrix, inv.matrix), 8)
    assert is_identity_mod(mx.matmul(inv.matrix, t.matrix), 8)


# -- congruences and retractions ------------------------------------------------------------

def test_congruence_examples():
    c1 = ChainComplex({0: ["q"], 1: ["p"]}, {1: [[Z0.one(8) - Z0.z(1, 8)]]}, Z0, 8)
    c2 = ChainComplex({0: ["q"], 1: ["p"]}, {1: [[Z0.one(8) - Z0.z(1, 8) + Z0.z(5, 8)]]}, Z0, 8)
    assert diff_congruence(c1, c1, 8).ok
    assert diff_congruence(c1, c2, 5).ok
    res = diff_congruence(c1, c2, 6)
    assert not res.ok and res.first[:3] == (1, "q", "p")
    assert congruence_order(c1, c2, 8) == 5


def test_congruence_needs_same_basis():
    c1 = ChainComplex({0: ["q"]}, {}, Z0, 4)
    c2 = ChainComplex({0: ["r"]}, {}, Z0, 4)
    with pytest.raises(BasisMismatch):
        diff_congruence(c1, c2, 2)


def test_torus_fhat_matches_unrolled_complex():
    fd = torus_domain()
    g = extract_gamma(fd)
    assert diff_congruence(assemble_fhat(g, 4), zgraded_complex(fd, 3), 4).ok


def test_retraction_examples():
    c = ChainComplex({0: ["a"], 1: ["b"]}, {1: [[1]]})
    assert retraction_check(identity_map(c), identity_map(c))
    big = ChainComplex({0: ["a", "x"], 1: ["b"]}, {1: [[1], [0]]})
    inc = ChainMap(c, big, {0: [[1], [0]], 1: [[1]]})
    proj = ChainMap(big, c, {0: [[1, 0]], 1: [[1]]})
    assert retraction_check(inc, proj)
    tri = ChainComplex({0: ["a", "x"]})
    up = ChainMap(tri, tri, {0: [[1, 2], [0, 1]]})
    assert not retraction_check(identity_map(tri), up)


def test_unitriangular_composite_repaired_by_inversion():
    n = 6
    tri = ChainComplex({0: ["a", "x"]}, {}, Z0, n)
    m = [[Z0.one(n), Z0.z(1, n)], [Z0.zero(n), Z0.one(n)]]
    comp = ChainMap(tri, tri, {0: m})
    assert not retraction_check(identity_map(tri), comp, n)
    inv = invert_filtered(FilteredEndomorphism(["a", "x"], m, n))
    fixed = ChainMap(tri, tri, {0: inv.matrix}).compose(comp)
    assert retraction_check(identity_map(tri), fixed, n)
