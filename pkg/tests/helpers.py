"""Random generators shared by the property tests."""

from __future__ import annotations

import random

import numpy as np

from novikov import matrix as mx
from novikov.chain import ChainComplex, ChainMap, Label
from novikov.rings import NovikovElement, RingContext

Z0 = RingContext()
FLIP = RingContext(1, ((-1,),))


def random_scalar(rng: random.Random, ring: RingContext | None, precision, spread=2):
    if ring is None:
        return rng.randint(-spread, spread)
    coeffs = {}
    for _ in range(rng.randint(0, 2)):
        exp = tuple(rng.randint(-1, 1) for _ in range(ring.rank))
        coeffs[rng.randint(0, 3)] = ring.group_element(rng.randint(-spread, spread), exp)
    out = ring.zero(precision)
    for j, g in coeffs.items():
        out = out + NovikovElement({j: g}, precision, ring)
    return out


def random_matrix(rng, rows, cols, ring, precision, density=0.5):
    out = mx.zeros(rows, cols)
    for r in range(rows):
        for c in range(cols):
            if rng.random() < density:
                out[r, c] = random_scalar(rng, ring, precision)
    if ring is not None:
        out = mx.to_series(out, ring, precision)
    return out


def random_complex(rng, ring=None, precision=None, top=2, prefix="c") -> ChainComplex:
    """An elementary complex (cancelling pairs plus free homology) in a random basis.

    The basis change is a product of elementary matrices, whose inverse is the
    reversed product with negated off-diagonal entries.
    """
    ranks = {i: rng.randint(0, 3) for i in range(top + 1)}
    # elementary differentials: match the first k_i generators of degree i to
    # generators of degree i-1 not already hit from degree i-1 itself
    used_down = {i: 0 for i in ranks}
    elem = {}
    for i in range(1, top + 1):
        free_below = ranks[i - 1] - used_down[i - 1]
        k = rng.randint(0, min(ranks[i], free_below))
        m = mx.zeros(ranks[i - 1], ranks[i])
        for t in range(k):
            m[ranks[i - 1] - 1 - t, t] = 1
        used_down[i] = k
        elem[i] = m
    # change of basis by elementary operations with explicit inverses
    ops = {}
    for i, n in ranks.items():
        seq = []
        for _ in range(3 if n > 1 else 0):
            a, b = rng.sample(range(n), 2)
            seq.append((a, b, random_scalar(rng, ring, precision)))
        ops[i] = seq
    one = 1 if ring is None else ring.one(precision)

    def elementary(n, a, b, c):
        e = mx.identity(n, one)
        e[a, b] = c
        return e

    def forward(i):
        m = mx.identity(ranks[i], one)
        for a, b, c in ops[i]:
            m = mx.matmul(elementary(ranks[i], a, b, c), m)
        return m

    def backward(i):
        m = mx.identity(ranks[i], one)
        for a, b, c in ops[i]:
            m = mx.matmul(m, elementary(ranks[i], a, b, -c))
        return m

    diffs = {}
    for i in range(1, top + 1):
        if ranks[i] and ranks[i - 1]:
            d = mx.matmul(forward(i - 1), mx.matmul(elem[i], backward(i)))
            if ring is not None:
                d = mx.to_series(d, ring, precision)
            diffs[i] = d
    basis = {i: [Label(f"{prefix}{i}_{k}", i) for k in range(n)] for i, n in ranks.items()}
    return ChainComplex(basis, diffs, ring, precision)


def random_nullhomotopic_map(rng, source, target) -> ChainMap:
    """``d H + H d`` for a random degree +1 map H: always a chain map."""
    ring, prec = target.ring, target.precision
    h = {i: random_matrix(rng, target.rank(i + 1), source.rank(i), ring, prec) for i in source.degree_range()}

    def hm(i):
        return h.get(i, mx.zeros(target.rank(i + 1), source.rank(i)))

    maps = {}
    for i in source.degree_range():
        maps[i] = mx.matmul(target.diff(i + 1), hm(i)) + mx.matmul(hm(i - 1), source.diff(i))
    return ChainMap(source, target, maps)


def as_array(rows):
    return np.array(rows, dtype=object)


def random_filtered(rng: random.Random, ring: RingContext, size: int, precision: int, max_degree: int = 3):
    """A matrix whose z^0 part is upper triangular with signed group elements on the diagonal."""
    from novikov.assembly import FilteredEndomorphism

    def exp():
        return tuple(rng.randint(-1, 1) for _ in range(ring.rank))

    m = mx.zeros(size, size)
    for r in range(size):
        for c in range(size):
            coeffs = {}
            if r == c:
                coeffs[0] = ring.group_element(rng.choice([1, -1]), exp())
            elif r < c and rng.random() < 0.5:
                coeffs[0] = ring.group_element(rng.randint(-3, 3), exp())
            for j in range(1, max_degree + 1):
                if rng.random() < 0.3:
                    coeffs[j] = ring.group_element(rng.randint(-3, 3), exp())
            m[r, c] = NovikovElement({j: g for j, g in coeffs.items() if g}, precision, ring)
    return FilteredEndomorphism([f"x{k}" for k in range(size)], m, precision, ring)


def random_gamma(rng: random.Random, scale: int = 1):
    """A valid integral algebraic cobordism built from two random homotopies.

    With ``theta = d a - a d``, ``theta' = d b + b d`` and ``psi = scale - a d b - a b d``
    all three block identities hold for any a: F_i -> D_i and b: D_i -> F_{i+1}.
    """
    from novikov.assembly import AlgebraicCobordism

    d = random_complex(rng, prefix="d")
    f = random_complex(rng, prefix="f")
    degrees = sorted(set(d.degree_range()) | set(f.degree_range()))
    a = {i: random_matrix(rng, d.rank(i), f.rank(i), None, None, 0.4) for i in degrees}
    b = {i: random_matrix(rng, f.rank(i + 1), d.rank(i), None, None, 0.4) for i in degrees}

    def get(m, i, rows, cols):
        return m.get(i, mx.zeros(rows, cols))

    theta, thetap, psi = {}, {}, {}
    for i in degrees:
        a_i = get(a, i, d.rank(i), f.rank(i))
        a_lo = get(a, i - 1, d.rank(i - 1), f.rank(i - 1))
        b_i = get(b, i, f.rank(i + 1), d.rank(i))
        b_lo = get(b, i - 1, f.rank(i), d.rank(i - 1))
        theta[i] = mx.matmul(d.diff(i), a_i) - mx.matmul(a_lo, f.diff(i))
        thetap[i] = mx.matmul(f.diff(i + 1), b_i) + mx.matmul(b_lo, d.diff(i))
        psi[i] = (
            mx.identity(d.rank(i)) * scale
            - mx.matmul(a_i, mx.matmul(f.diff(i + 1), b_i))
            - mx.matmul(a_i, mx.matmul(b_lo, d.diff(i)))
        )
    return AlgebraicCobordism(f, d, theta, thetap, psi)
