"""Named example complexes, fields, splittings and fundamental domains."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .dmt import (
    Cell,
    CellComplex,
    Collar,
    FundamentalDomain,
    SplitModel,
    VectorField,
    collared_domain,
    cylinder,
    from_simplicial,
    level_id,
    merge,
    prism_id,
    random_matching,
    relabel,
    validate_field,
)


def circle() -> CellComplex:
    return from_simplicial([(0, 1), (1, 2), (0, 2)])


def sphere() -> CellComplex:
    return from_simplicial([(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])


def torus() -> CellComplex:
    """The 7-vertex torus."""
    facets = []
    for i in range(7):
        facets.append((i, (i + 1) % 7, (i + 3) % 7))
        facets.append((i, (i + 2) % 7, (i + 3) % 7))
    return from_simplicial(facets)


def projective_plane() -> CellComplex:
    """The 6-vertex projective plane (half an icosahedron)."""
    return from_simplicial(
        [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1),
         (1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3)]
    )


def klein_bottle() -> CellComplex:
    """A 3 x 3 grid with one pair of sides glued with a flip."""

    def vert(x, y):
        if x >= 3:
            x, y = x - 3, -y
        return (x % 3) * 3 + (y % 3)

    facets = []
    for x in range(3):
        for y in range(3):
            a, b, c, d = vert(x, y), vert(x + 1, y), vert(x + 1, y + 1), vert(x, y + 1)
            facets += [(a, b, c), (a, c, d)]
    return from_simplicial(facets)


CORPUS: dict[str, Callable[[], CellComplex]] = {
    "circle": circle,
    "sphere": sphere,
    "torus": torus,
    "projective_plane": projective_plane,
    "klein_bottle": klein_bottle,
}

# integral homology by degree, as (betti, torsion)
EXPECTED_HOMOLOGY = {
    "circle": ["Z", "Z"],
    "sphere": ["Z", "0", "Z"],
    "torus": ["Z", "Z^2", "Z"],
    "projective_plane": ["Z", "Z/2", "0"],
    "klein_bottle": ["Z", "Z + Z/2", "0"],
}


def point() -> CellComplex:
    return CellComplex([Cell("v", 0)])


def points(*names: str) -> CellComplex:
    return CellComplex([Cell(n, 0) for n in names])


def tagged(k: CellComplex, tag: str) -> CellComplex:
    """Prefix every vertex name of a simplicial complex."""
    return relabel(k, lambda s: ".".join(tag + v for v in s.split(".")))


def cone(base: CellComplex, apex: str, name: Callable[[str], str]) -> CellComplex:
    """The cone ``apex * base`` with d(a*s) = s - a*(ds) (and d(a*v) = v - a)."""
    cells = [Cell(apex, 0)]
    for c in base.cells.values():
        if c.dim == 0:
            bd = ((c.id, 1), (apex, -1))
        else:
            bd = ((c.id, 1),) + tuple((name(f), -s) for f, s in c.boundary)
        cells.append(Cell(name(c.id), c.dim + 1, bd))
    return CellComplex(list(base.cells.values()) + cells)


def _restricted_matching(k: CellComplex, allowed: set[str], rng: random.Random) -> VectorField:
    sub = CellComplex([k[c] for c in k.subcomplex_closure(allowed)])
    v = random_matching(sub, rng)
    return VectorField({lo: up for lo, up in v.pairs.items() if lo in allowed and up in allowed})


def _build_split(
    n: CellComplex,
    lower: CellComplex,
    upper: CellComplex,
    v_lower: VectorField,
    v_upper: VectorField,
    v_n: VectorField,
) -> SplitModel:
    collar = Collar(n)
    col = cylinder(n, 3)
    k = merge(lower, col, upper)
    v = v_lower.union(v_upper).union(VectorField(collar.transverse_pairs()))
    report = validate_field(k, v)
    if report:
        raise ValueError("; ".join(report))
    ends = {level_id(s, 3) for s in n.cells}
    return SplitModel(k, v, collar, v_n, frozenset(set(upper.cells) - ends))


def sphere_equator(v_n: VectorField | None = None) -> SplitModel:
    """Two cones on a triangle glued along a collar around the equator."""
    n = circle()
    if v_n is None:
        v_n = VectorField({"1": "1.2", "2": "0.2"})
    low_base = relabel(n, lambda s: level_id(s, 0))
    up_base = relabel(n, lambda s: level_id(s, 3))
    lower = cone(low_base, "S", lambda s: f"S*{s}")
    upper = cone(up_base, "N", lambda s: f"N*{s}")
    # lower: everything on the equator flows into the south pole
    v_lower = VectorField({level_id(s, 0): f"S*{level_id(s, 0)}" for s in n.cells})
    # upper: collapse from the north pole, leaving one 2-cell
    v_upper = VectorField({
        "N": f"N*{level_id('0', 3)}",
        f"N*{level_id('1', 3)}": f"N*{level_id('0.1', 3)}",
        f"N*{level_id('2', 3)}": f"N*{level_id('1.2', 3)}",
    })
    return _build_split(n, lower, upper, v_lower, v_upper, v_n)


def circle_two_points(v_n: VectorField | None = None) -> SplitModel:
    """A circle cut at two points: two arcs joined by a collar on each point."""
    n = points("p", "q")
    v_n = v_n or VectorField({})
    lower = CellComplex([
        Cell("p@0", 0), Cell("q@0", 0), Cell("lo", 0),
        Cell("lo~p", 1, (("p@0", 1), ("lo", -1))),
        Cell("lo~q", 1, (("q@0", 1), ("lo", -1))),
    ])
    upper = CellComplex([
        Cell("p@3", 0), Cell("q@3", 0), Cell("hi", 0),
        Cell("hi~p", 1, (("p@3", 1), ("hi", -1))),
        Cell("hi~q", 1, (("q@3", 1), ("hi", -1))),
    ])
    v_lower = VectorField({"p@0": "lo~p", "q@0": "lo~q"})
    v_upper = VectorField({"hi": "hi~p"})
    return _build_split(n, lower, upper, v_lower, v_upper, v_n)


def torus_two_meridians(v_n: VectorField | None = None, seed: int = 0) -> SplitModel:
    """A torus cut along two meridian circles into two annuli."""
    tri = circle()
    n = merge(tagged(tri, "a"), tagged(tri, "b"))
    if v_n is None:
        v_n = VectorField({"a1": "a1.a2", "a2": "a0.a2", "b1": "b1.b2", "b2": "b0.b2"})

    def annulus(t_end: int, prefix: str) -> CellComplex:
        def lev(s, t):
            if t == 0:
                return level_id(".".join("a" + v for v in s.split(".")), t_end)
            if t == 2:
                return level_id(".".join("b" + v for v in s.split(".")), t_end)
            return f"{prefix}:{s}@{t}"

        return cylinder(tri, 2, level=lev, prism=lambda s, t: f"{prefix}:{s}@{t - 1}~{t}")

    lower, upper = annulus(0, "lo"), annulus(3, "hi")
    rng = random.Random(seed)
    v_lower = _restricted_matching(lower, set(lower.cells), rng)
    ends = {level_id(s, 3) for s in n.cells}
    v_upper = _restricted_matching(upper, set(upper.cells) - ends, rng)
    return _build_split(n, lower, upper, v_lower, v_upper, v_n)


SPLITS: dict[str, Callable[[], SplitModel]] = {
    "sphere_equator": sphere_equator,
    "torus_meridians": torus_two_meridians,
    "circle_points": circle_two_points,
}


# -- fundamental domains -------------------------------------------------------------

def circle_domain(split: bool = True) -> FundamentalDomain:
    """An arc over a point cut, with one interior maximum and minimum."""
    return collared_domain(point(), 6, holes=[("v", 5)], v_n=VectorField({}) if split else None)


TRIANGLE_FIELD = VectorField({"1": "1.2", "2": "0.2"})


def torus_projection_domain() -> FundamentalDomain:
    """The torus as a circle bundle over the circle with no interior critical cells."""
    return collared_domain(circle(), 5, v_n=TRIANGLE_FIELD)


def torus_domain() -> FundamentalDomain:
    """A torus domain with a cancelling pair sitting over the critical vertex of the cut field."""
    return collared_domain(circle(), 6, holes=[("0", 5)], v_n=TRIANGLE_FIELD)


def torus_domain_unsplit_cut() -> FundamentalDomain:
    """Both kinds of interior pairs, with every cell of the cut left critical."""
    return collared_domain(circle(), 7, holes=[("0", 5), ("0.1", 6)], v_n=VectorField({}))


DOMAINS: dict[str, Callable[[], FundamentalDomain]] = {
    "circle": circle_domain,
    "torus_projection": torus_projection_domain,
    "torus": torus_domain,
    "torus_full_cut": torus_domain_unsplit_cut,
}


# -- cobordisms and squares ------------------------------------------------------------

@dataclass
class CollarCobordism:
    """``K x [0, 1]`` relative to its top, with ``V_K`` below and ``V' x I`` on the prisms."""

    complex: CellComplex
    field: VectorField
    removed: frozenset[str]
    bottom: list[str]
    prisms: list[str]


def collar_cobordism(k: CellComplex, v_bottom: VectorField, v_prism: VectorField | None = None) -> CollarCobordism:
    v_prism = v_bottom if v_prism is None else v_prism
    cyl = cylinder(k, 1)
    pairs = {level_id(lo, 0): level_id(up, 0) for lo, up in v_bottom.pairs.items()}
    pairs.update({prism_id(lo, 1): prism_id(up, 1) for lo, up in v_prism.pairs.items()})
    removed = frozenset(level_id(s, 1) for s in k.cells)
    v = VectorField(pairs)
    bottom = [level_id(c, 0) for c in v_bottom.critical(k)]
    prisms = [prism_id(c, 1) for c in v_prism.critical(k)]
    return CollarCobordism(cyl, v, removed, bottom, prisms)


def double_cylinder(k: CellComplex, v_k: VectorField, prefix: str = "") -> tuple[CellComplex, VectorField, frozenset[str]]:
    """``I x I x K`` relative to the two top faces, with ``V_K`` on every slab."""
    from .dmt import interval, product

    square = product(interval(), interval(), lambda x, y: f"{x}|{y}")
    cells = product(square, k, lambda x, y: f"{prefix}{x}/{y}")
    slabs = [c for c in square.cells]
    pairs = {f"{prefix}{s}/{lo}": f"{prefix}{s}/{up}" for s in slabs for lo, up in v_k.pairs.items()}
    removed = frozenset(
        c for c in cells.cells if c.split("/")[0][len(prefix):].split("|")[0] == "1"
        or c.split("/")[0][len(prefix):].split("|")[1] == "1"
    )
    return cells, VectorField(pairs), removed


def square_block(cell_id: str) -> int:
    """Which of the four corner blocks an ``I x I x K`` cell belongs to."""
    a, b = cell_id.split("/")[0].split("|")[-2:]
    a = a.split(":")[-1]
    return (1 if a == "0~1" else 0) + (2 if b == "0~1" else 0)


def rematched_field(k: CellComplex, v: VectorField, rng: random.Random, attempts: int = 200) -> VectorField | None:
    """A different acyclic matching with exactly the critical cells of ``v``, if one turns up."""
    matched = v.matched()
    cands = [
        (f, c.id) for c in k.cells.values() if c.id in matched
        for f, s in c.boundary if f in matched and abs(s) == 1
    ]
    for _ in range(attempts):
        rng.shuffle(cands)
        pairs: dict[str, str] = {}
        used: set[str] = set()
        for lo, up in cands:
            if lo in used or up in used:
                continue
            if not validate_field(k, VectorField({**pairs, lo: up})):
                pairs[lo] = up
                used |= {lo, up}
        if used == matched and pairs != v.pairs:
            return VectorField(pairs)
    return None


def perturbed_collar_composite(k: CellComplex, v: VectorField, w: VectorField):
    """The continuation map Morse(v) -> Morse(w) -> Morse(v) through two collars."""
    from .cobordism import continuation_map, extract_triple
    from .dmt import ordered_morse_complex

    def one(a, b):
        cc = collar_cobordism(k, a, b)
        mc = ordered_morse_complex(cc.complex, cc.field, cc.bottom + cc.prisms, cc.removed)
        return continuation_map(extract_triple(mc, cc.bottom, [], cc.prisms))

    return one(v, w).compose(one(w, v))
