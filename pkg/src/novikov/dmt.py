"""Discrete Morse theory on finite regular CW complexes.

Gradient paths of an acyclic matching stand in for flow lines.  For a
critical cell tau and a critical cell sigma one dimension lower the Morse
differential counts every path ``s_0, ..., s_r = sigma`` with ``s_0`` a face
of tau, each non-critical ``s_i`` matched upward to ``V(s_i)`` and
``s_{i+1} != s_i`` a face of ``V(s_i)``.  A path contributes

    <d tau, s_0> * prod_i ( -<d V(s_i), s_{i+1}> * <d V(s_i), s_i> ).

Cells of a removed (relative) subcomplex absorb every path that reaches
them, which realizes complexes of pairs and open free ends.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Callable, Iterable, Mapping, Sequence

from .chain import ChainComplex, Label


class DMTError(ValueError):
    pass


class DuplicateFacet(DMTError):
    pass


class InvalidComplex(DMTError):
    pass


class InvalidField(DMTError):
    pass


class CollarPatternViolation(DMTError):
    pass


class AcyclicityLost(InvalidField):
    pass


class GluingMismatch(DMTError):
    pass


@dataclass(frozen=True)
class Cell:
    id: str
    dim: int
    boundary: tuple[tuple[str, int], ...] = ()

    def incidence(self, face: str) -> int:
        return sum(s for f, s in self.boundary if f == face)


class CellComplex:
    """Cells keyed by id, each with a signed boundary list."""

    def __init__(self, cells: Iterable[Cell], check: bool = True):
        self.cells: dict[str, Cell] = {}
        for c in cells:
            if c.id in self.cells:
                if self.cells[c.id] != c:
                    raise GluingMismatch(f"cell {c.id} declared twice with different data")
                continue
            self.cells[c.id] = c
        if check:
            problems = self.check()
            if problems:
                raise InvalidComplex("; ".join(problems[:5]))

    def __len__(self):
        return len(self.cells)

    def __contains__(self, cid):
        return cid in self.cells

    def __getitem__(self, cid) -> Cell:
        return self.cells[cid]

    @property
    def dimension(self) -> int:
        return max((c.dim for c in self.cells.values()), default=-1)

    def ids(self, dim: int | None = None) -> list[str]:
        return sorted(c.id for c in self.cells.values() if dim is None or c.dim == dim)

    def f_vector(self) -> tuple[int, ...]:
        return tuple(len(self.ids(k)) for k in range(self.dimension + 1))

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))

    def is_regular(self) -> bool:
        return all(abs(s) == 1 for c in self.cells.values() for _, s in c.boundary)

    def cofaces(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {cid: [] for cid in self.cells}
        for c in self.cells.values():
            for f, _ in c.boundary:
                out[f].append(c.id)
        return out

    def check(self) -> list[str]:
        problems = []
        for c in self.cells.values():
            for f, s in c.boundary:
                if f not in self.cells:
                    problems.append(f"{c.id}: missing face {f}")
                elif self.cells[f].dim != c.dim - 1:
                    problems.append(f"{c.id}: face {f} has wrong dimension")
            if problems:
                continue
            dd: dict[str, int] = {}
            for f, s in c.boundary:
                for g, t in self.cells[f].boundary:
                    dd[g] = dd.get(g, 0) + s * t
            bad = sorted(g for g, v in dd.items() if v)
            if bad:
                problems.append(f"{c.id}: boundary of boundary hits {bad}")
        return problems

    def subcomplex_closure(self, ids: Iterable[str]) -> set[str]:
        out, stack = set(), list(ids)
        while stack:
            x = stack.pop()
            if x not in out:
                out.add(x)
                stack.extend(f for f, _ in self.cells[x].boundary)
        return out

    def to_json(self) -> dict:
        return {
            "cells": [
                {"id": c.id, "dim": c.dim, "boundary": [[f, s] for f, s in c.boundary]}
                for c in sorted(self.cells.values(), key=lambda c: (c.dim, c.id))
            ]
        }

    @classmethod
    def from_json(cls, obj) -> "CellComplex":
        return cls(
            Cell(str(c["id"]), int(c["dim"]), tuple((str(f), int(s)) for f, s in c.get("boundary", [])))
            for c in obj["cells"]
        )


def merge(*complexes: CellComplex) -> CellComplex:
    """Union of complexes that agree on the cells they share."""
    return CellComplex(c for k in complexes for c in k.cells.values())


def relabel(k: CellComplex, name: Callable[[str], str]) -> CellComplex:
    return CellComplex(
        Cell(name(c.id), c.dim, tuple((name(f), s) for f, s in c.boundary)) for c in k.cells.values()
    )


def simplex_id(vertices: Sequence) -> str:
    return ".".join(str(v) for v in vertices)


def from_simplicial(facets: Iterable[Iterable]) -> CellComplex:
    """All faces of the given simplices, with deletion-parity incidences."""
    seen = set()
    simplices = set()
    for facet in facets:
        vs = tuple(sorted(facet))
        if len(set(vs)) != len(vs):
            raise DMTError(f"facet {facet} repeats a vertex")
        if vs in seen:
            raise DuplicateFacet(f"facet {vs} listed twice")
        seen.add(vs)
        for r in range(1, len(vs) + 1):
            simplices.update(itertools.combinations(vs, r))
    cells = []
    for s in simplices:
        bd = tuple(
            (simplex_id(s[:i] + s[i + 1:]), (-1) ** i) for i in range(len(s))
        ) if len(s) > 1 else ()
        cells.append(Cell(simplex_id(s), len(s) - 1, bd))
    return CellComplex(cells)


def product(a: CellComplex, b: CellComplex, name: Callable[[str, str], str] | None = None) -> CellComplex:
    """Cartesian product with d(x*y) = dx*y + (-1)^{|x|} x*dy."""
    name = name or (lambda x, y: f"{x}*{y}")
    cells = []
    for x in a.cells.values():
        for y in b.cells.values():
            bd = [(name(f, y.id), s) for f, s in x.boundary]
            sign = -1 if x.dim % 2 else 1
            bd += [(name(x.id, g), sign * t) for g, t in y.boundary]
            cells.append(Cell(name(x.id, y.id), x.dim + y.dim, tuple(bd)))
    return CellComplex(cells)


def level_id(sigma: str, t) -> str:
    return f"{sigma}@{t}"


def prism_id(sigma: str, t) -> str:
    """The cell sigma x [t-1, t]."""
    return f"{sigma}@{t - 1}~{t}"


def interval(length: int = 1) -> CellComplex:
    cells = [Cell(str(t), 0) for t in range(length + 1)]
    cells += [Cell(f"{t - 1}~{t}", 1, ((str(t), 1), (str(t - 1), -1))) for t in range(1, length + 1)]
    return CellComplex(cells)


def cylinder(k: CellComplex, length: int = 1, level=level_id, prism=prism_id) -> CellComplex:
    """``K x [0, length]`` with d(s x I) = s x {1} - s x {0} - (ds) x I on each slab."""
    cells = []
    for c in k.cells.values():
        for t in range(length + 1):
            cells.append(Cell(level(c.id, t), c.dim, tuple((level(f, t), s) for f, s in c.boundary)))
        for t in range(1, length + 1):
            bd = [(level(c.id, t), 1), (level(c.id, t - 1), -1)]
            bd += [(prism(f, t), -s) for f, s in c.boundary]
            cells.append(Cell(prism(c.id, t), c.dim + 1, tuple(bd)))
    return CellComplex(cells)


def cellular_complex(k: CellComplex, removed: Iterable[str] = ()) -> ChainComplex:
    """The cellular chain complex of K (relative to a removed subcomplex)."""
    return morse_complex(k, VectorField({}), removed)


# -- vector fields ----------------------------------------------------------

@dataclass(frozen=True)
class VectorField:
    """An acyclic matching stored as lower cell -> upper cell."""

    pairs: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pairs", dict(sorted(self.pairs.items())))
        uppers = list(self.pairs.values())
        if len(set(uppers)) != len(uppers) or set(uppers) & set(self.pairs):
            raise InvalidField("a cell occurs in two pairs")

    @property
    def down(self) -> dict[str, str]:
        return {u: l for l, u in self.pairs.items()}

    def matched(self) -> set[str]:
        return set(self.pairs) | set(self.pairs.values())

    def critical(self, k: CellComplex, removed: Iterable[str] = ()) -> list[str]:
        gone = self.matched() | set(removed)
        return [cid for cid in sorted(k.cells, key=lambda c: (k[c].dim, c)) if cid not in gone]

    def union(self, other: "VectorField") -> "VectorField":
        return VectorField({**self.pairs, **other.pairs})

    def without(self, cells: Iterable[str]) -> "VectorField":
        drop = set(cells)
        return VectorField({l: u for l, u in self.pairs.items() if l not in drop and u not in drop})

    def to_json(self) -> dict:
        return {"pairs": [[l, u] for l, u in self.pairs.items()]}

    @classmethod
    def from_json(cls, obj) -> "VectorField":
        return cls({str(l): str(u) for l, u in obj["pairs"]})


def _modified_hasse(k: CellComplex, v: VectorField, cells: Iterable[str] | None = None) -> dict[str, set[str]]:
    """Predecessor sets for the flow order: a cell comes after everything it flows into."""
    down = v.down
    graph: dict[str, set[str]] = {}
    for cid in cells if cells is not None else k.cells:
        c = k[cid]
        succ = set()
        for f, _ in c.boundary:
            if down.get(cid) == f:
                continue
            succ.add(f)
        if cid in v.pairs:
            # the flow goes up from a matched lower cell to its partner
            succ.add(v.pairs[cid])
        graph[cid] = succ
    return graph


def validate_field(k: CellComplex, v: VectorField) -> list[str]:
    report = []
    for lo, up in v.pairs.items():
        if lo not in k or up not in k:
            report.append(f"pair ({lo}, {up}) uses an unknown cell")
            continue
        if k[up].dim != k[lo].dim + 1:
            report.append(f"pair ({lo}, {up}) does not raise dimension by one")
        elif abs(k[up].incidence(lo)) != 1:
            report.append(f"pair ({lo}, {up}) is not a regular face pair")
    if report:
        return report
    try:
        tuple(TopologicalSorter(_modified_hasse(k, v)).static_order())
    except CycleError as exc:
        cycle = exc.args[1]
        report.append("closed V-path through " + " -> ".join(cycle))
    return report


def morse_values(k: CellComplex, v: VectorField) -> dict[str, Fraction]:
    """A discrete Morse function for V: positions in a flow-compatible order."""
    order = list(TopologicalSorter(_modified_hasse(k, v)).static_order())
    return {cid: Fraction(i) for i, cid in enumerate(order)}


def flow_counts(
    k: CellComplex, v: VectorField, removed: Iterable[str] = ()
) -> Callable[[str], dict[str, int]]:
    """``reach(cell)``: signed counts of gradient paths from a cell to critical cells."""
    gone = set(removed)
    down = v.down
    memo: dict[str, dict[str, int]] = {}

    def direct(cid: str) -> dict[str, int] | None:
        if cid in gone or cid in down:
            return {}
        if cid not in v.pairs:
            return {cid: 1}
        return None

    def reach(start: str) -> dict[str, int]:
        stack = [start]
        while stack:
            cid = stack[-1]
            if cid in memo:
                stack.pop()
                continue
            base = direct(cid)
            if base is not None:
                memo[cid] = base
                stack.pop()
                continue
            up = k[v.pairs[cid]]
            pending = [f for f, _ in up.boundary if f != cid and f not in memo]
            if pending:
                stack.extend(pending)
                continue
            w = up.incidence(cid)
            acc: dict[str, int] = {}
            for f, s in up.boundary:
                if f == cid:
                    continue
                for tgt, n in memo[f].items():
                    acc[tgt] = acc.get(tgt, 0) - s * w * n
            memo[cid] = {t: n for t, n in acc.items() if n}
            stack.pop()
        return memo[start]

    return reach


def boundary_counts(k: CellComplex, v: VectorField, removed: Iterable[str] = ()) -> dict[str, dict[str, int]]:
    """Morse boundary of every critical cell as a dict target -> count."""
    removed = set(removed)
    reach = flow_counts(k, v, removed)
    out = {}
    for cid in v.critical(k, removed):
        acc: dict[str, int] = {}
        for f, s in k[cid].boundary:
            for tgt, n in reach(f).items():
                acc[tgt] = acc.get(tgt, 0) + s * n
        out[cid] = {t: n for t, n in acc.items() if n}
    return out


def morse_complex(
    k: CellComplex,
    v: VectorField,
    removed: Iterable[str] = (),
    values: Mapping[str, Fraction] | None = None,
    check: bool = True,
) -> ChainComplex:
    """The Morse complex on critical cells (of the pair K, removed)."""
    removed = set(removed)
    if check:
        report = validate_field(k, v)
        if report:
            raise InvalidField("; ".join(report))
    crit = v.critical(k, removed)
    counts = boundary_counts(k, v, removed)
    basis: dict[int, list[Label]] = {}
    for cid in crit:
        val = None if values is None else values.get(cid)
        basis.setdefault(k[cid].dim, []).append(Label(cid, k[cid].dim, val))
    index = {lab.name: (i, j) for i, labs in basis.items() for j, lab in enumerate(labs)}
    diffs: dict[int, list[list[int]]] = {}
    for i in basis:
        if i - 1 not in basis:
            continue
        m = [[0] * len(basis[i]) for _ in basis[i - 1]]
        for col, lab in enumerate(basis[i]):
            for tgt, n in counts[lab.name].items():
                m[index[tgt][1]][col] = n
        diffs[i] = m
    return ChainComplex(basis, diffs)


# -- random acyclic matchings ---------------------------------------------

def random_matching(k: CellComplex, rng: random.Random, attempts: int | None = None) -> VectorField:
    """Greedy acyclic matching over regular face pairs in random order."""
    candidates = [
        (f, c.id) for c in k.cells.values() for f, s in c.boundary if abs(c.incidence(f)) == 1
    ]
    candidates = sorted(set(candidates))
    rng.shuffle(candidates)
    if attempts is not None:
        candidates = candidates[:attempts]
    pairs: dict[str, str] = {}
    used: set[str] = set()
    for lo, up in candidates:
        if lo in used or up in used:
            continue
        trial = VectorField({**pairs, lo: up})
        if _acyclic_near(k, trial, k[lo].dim):
            pairs[lo] = up
            used.update((lo, up))
    return VectorField(pairs)


def _acyclic_near(k: CellComplex, v: VectorField, dim: int) -> bool:
    # V-paths live between two adjacent dimensions, so only those cells matter
    cells = [c for c in k.cells if k[c].dim in (dim, dim + 1)]
    graph = _modified_hasse(k, v, cells)
    graph = {c: {s for s in succ if s in graph} for c, succ in graph.items()}
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError:
        return False
    return True


# -- collars and splittings ----------------------------------------------------

@dataclass(frozen=True)
class Collar:
    """An embedded ``N x [0, 3]``: ``level(s, t)`` names s x {t}, ``prism(s, t)`` names s x [t-1, t]."""

    n: CellComplex
    level: Callable[[str, int], str] = level_id
    prism: Callable[[str, int], str] = prism_id

    def transverse_pairs(self, times: Iterable[int] = (1, 2, 3)) -> dict[str, str]:
        return {self.level(s, t): self.prism(s, t) for s in self.n.cells for t in times}


def insert_splitting_collar(m: CellComplex, v: VectorField, collar: Collar, v_n: VectorField) -> VectorField:
    """Replace the middle slab of a transverse collar by a copy of ``V_N``.

    Level 2 gets the pairs of ``V_N`` and the slab ``[1, 2]`` gets ``V_N x I``, so
    each critical cell c of ``V_N`` leaves two critical cells behind: ``c x {2}``
    and ``c x [1, 2]``.
    """
    for lo, up in collar.transverse_pairs().items():
        if lo not in m or up not in m:
            raise CollarPatternViolation(f"collar cell {lo} or {up} is not in the complex")
        if v.pairs.get(lo) != up:
            raise CollarPatternViolation(f"{lo} is not paired with {up}")
    report = validate_field(collar.n, v_n)
    if report:
        raise InvalidField("; ".join(report))
    middle = collar.transverse_pairs((2,))
    pairs = {lo: up for lo, up in v.pairs.items() if lo not in middle}
    for lo, up in v_n.pairs.items():
        pairs[collar.level(lo, 2)] = collar.level(up, 2)
        pairs[collar.prism(lo, 2)] = collar.prism(up, 2)
    out = VectorField(pairs)
    report = validate_field(m, out)
    if report:
        raise AcyclicityLost("; ".join(report))
    return out


@dataclass
class SplitModel:
    """A complex cut by a collar into a lower part ``M'`` and an upper part ``M''``.

    Gradient paths run from the upper part through the collar (level 3 to
    level 0) into the lower part.
    """

    complex: CellComplex
    field: VectorField
    collar: Collar
    v_n: VectorField
    upper: frozenset[str]
    removed: frozenset[str] = frozenset()

    def split_field(self) -> VectorField:
        return insert_splitting_collar(self.complex, self.field, self.collar, self.v_n)

    def d_complex(self) -> ChainComplex:
        return morse_complex(self.collar.n, self.v_n)

    def sides(self, v: VectorField) -> tuple[list[str], list[str]]:
        crit = v.critical(self.complex, self.removed)
        new = self.new_cells()
        lower = [c for c in crit if c not in self.upper and c not in new]
        upper = [c for c in crit if c in self.upper]
        return lower, upper

    def new_cells(self) -> set[str]:
        crit_n = self.v_n.critical(self.collar.n)
        return {self.collar.level(c, 2) for c in crit_n} | {self.collar.prism(c, 2) for c in crit_n}


def split_data(model: SplitModel):
    """Splitting data read off the split field, with the attaching map of the unsplit one."""
    from .chain import ChainMap
    from .cobordism import SplittingData

    k = model.complex
    d = model.d_complex()
    vs = model.split_field()
    lower, upper = model.sides(model.field)
    fp = _sub_complex(k, model.field, lower, model.removed)
    fpp = _sub_complex(k, model.field, upper, model.removed)
    raw_split = boundary_counts(k, vs, model.removed)
    raw = boundary_counts(k, model.field, model.removed)

    level = {c.name: model.collar.level(c.name, 2) for c in d.all_labels()}
    prism = {c.name: model.collar.prism(c.name, 2) for c in d.all_labels()}

    def grid(rows, cols, counts, key_row, key_col, sign=1):
        out = [[0] * len(cols) for _ in rows]
        for ci, col in enumerate(cols):
            for ri, row in enumerate(rows):
                out[ri][ci] = sign * counts.get(key_col(col), {}).get(key_row(row), 0)
        return out

    same = lambda x: x  # noqa: E731
    thetap = {
        i: grid(fp.names(i), d.names(i), raw_split, same, lambda c: prism[c], -1) for i in d.degrees
    }
    thetapp = {
        i: grid(d.names(i - 1), fpp.names(i), raw_split, lambda c: level[c], same) for i in fpp.degrees
    }
    phi = {i: grid(fp.names(i - 1), fpp.names(i), raw, same, same) for i in fpp.degrees}
    return SplittingData(
        d,
        fp,
        fpp,
        ChainMap(d, fp, thetap),
        ChainMap(fpp, d, thetapp, -1, True),
        ChainMap(fpp, fp, phi, -1, True),
    )


def _sub_complex(k: CellComplex, v: VectorField, names: Sequence[str], removed) -> ChainComplex:
    counts = boundary_counts(k, v, removed)
    basis: dict[int, list[str]] = {}
    for c in names:
        basis.setdefault(k[c].dim, []).append(c)
    diffs = {}
    for i, cols in basis.items():
        rows = basis.get(i - 1, [])
        diffs[i] = [[counts[c].get(r, 0) for c in cols] for r in rows]
    return ChainComplex(basis, diffs)


def ordered_morse_complex(k: CellComplex, v: VectorField, order: Sequence[str], removed=()) -> ChainComplex:
    """The Morse complex with critical cells listed in the given order."""
    counts = boundary_counts(k, v, removed)
    crit = set(v.critical(k, removed))
    if set(order) != crit:
        raise InvalidField("order must list exactly the critical cells")
    basis: dict[int, list[str]] = {}
    for c in order:
        basis.setdefault(k[c].dim, []).append(c)
    diffs = {
        i: [[counts[c].get(r, 0) for c in cols] for r in basis.get(i - 1, [])] for i, cols in basis.items()
    }
    return ChainComplex(basis, diffs)


# -- fundamental domains --------------------------------------------------------------

@dataclass
class FundamentalDomain:
    """A domain P whose right end is glued to the left end of the next copy.

    ``glue`` maps each left-end cell to the right-end cell it is identified
    with.  Gradient paths run leftward, so copy j+1 lies downstream of copy j.
    """

    p: CellComplex
    glue: Mapping[str, str]
    field: VectorField
    collar: Collar | None = None
    v_n: VectorField | None = None

    def __post_init__(self):
        left, right = set(self.glue), set(self.glue.values())
        if left & right:
            raise GluingMismatch("the two ends overlap")
        for lo, ro in self.glue.items():
            a, b = self.p[lo], self.p[ro]
            if a.dim != b.dim:
                raise GluingMismatch(f"{lo} and {ro} have different dimensions")
            mapped = sorted((self.glue.get(f, "?"), s) for f, s in a.boundary)
            if mapped != sorted(b.boundary):
                raise GluingMismatch(f"gluing does not preserve the boundary of {lo}")
        if set(self.field.matched()) & left:
            raise GluingMismatch("left-end cells must be left for the downstream copy to pair")
        for c in self.field.critical(self.p, left):
            if c in right:
                raise GluingMismatch(f"right-end cell {c} is critical")

    @property
    def split(self) -> bool:
        return self.collar is not None

    def split_field(self) -> VectorField:
        if self.collar is None or self.v_n is None:
            return self.field
        return insert_splitting_collar(self.p, self.field, self.collar, self.v_n)

    def interior_critical(self) -> list[str]:
        return self.field.critical(self.p, set(self.glue))


def copy_name(j: int, cid: str) -> str:
    return f"{j}|{cid}"


def parse_copy(name: str) -> tuple[int, str]:
    j, _, cid = name.partition("|")
    return int(j), cid


@dataclass
class Unrolled:
    complex: CellComplex
    field: VectorField
    removed: frozenset[str]
    copies: int


def unroll(fd: FundamentalDomain, ell: int, split: bool = False) -> Unrolled:
    """``ell + 1`` copies of the domain; the left end of the last copy is cut away."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    v = fd.split_field() if split else fd.field

    def name(j, cid):
        if cid in fd.glue:
            return copy_name(j + 1, fd.glue[cid])
        return copy_name(j, cid)

    cells, pairs = [], {}
    for j in range(ell + 1):
        for c in fd.p.cells.values():
            cells.append(Cell(name(j, c.id), c.dim, tuple((name(j, f), s) for f, s in c.boundary)))
        for lo, up in v.pairs.items():
            pairs[name(j, lo)] = name(j, up)
    k = CellComplex(cells)
    removed = frozenset(name(ell, c) for c in fd.glue)
    return Unrolled(k, VectorField(pairs), removed, ell + 1)


def zgraded_complex(fd: FundamentalDomain, ell: int, n: int | None = None):
    """Copy-0 critical cells with path counts to copy j recorded as z^j, mod z^{ell+1}."""
    from .rings import NovikovElement, RingContext

    ctx = RingContext()
    n = ell + 1 if n is None else n
    un = unroll(fd, ell)
    counts = boundary_counts(un.complex, un.field, un.removed)
    crit = fd.interior_critical()
    basis: dict[int, list[str]] = {}
    for c in crit:
        basis.setdefault(fd.p[c].dim, []).append(c)
    diffs = {}
    for i, cols in basis.items():
        rows = basis.get(i - 1, [])
        m = [[{} for _ in cols] for _ in rows]
        for ci, col in enumerate(cols):
            for tgt, cnt in counts[copy_name(0, col)].items():
                j, cid = parse_copy(tgt)
                m[rows.index(cid)][ci][j] = m[rows.index(cid)][ci].get(j, 0) + cnt
        diffs[i] = [
            [NovikovElement({j: ctx.group_element(c) for j, c in e.items()}, n, ctx) for e in row] for row in m
        ]
    return ChainComplex(basis, diffs, ctx, n)


def extract_gamma(fd: FundamentalDomain):
    """The algebraic cobordism of a domain with a splitting collar.

    Counts come from two copies of the split domain: copy-0 interior cells to
    the copy-0 level cells give theta, copy-0 prisms to copy-1 interior cells
    give -theta', and copy-0 prisms to copy-1 level cells give -psi.
    """
    from .assembly import AlgebraicCobordism

    if fd.collar is None or fd.v_n is None:
        raise InvalidField("the domain carries no splitting collar")
    collar = fd.collar
    d = morse_complex(collar.n, fd.v_n)
    un = unroll(fd, 1, split=True)
    counts = boundary_counts(un.complex, un.field, un.removed)
    crit_n = d.all_labels()
    level = {c.name: collar.level(c.name, 2) for c in crit_n}
    prism = {c.name: collar.prism(c.name, 2) for c in crit_n}
    new = set(level.values()) | set(prism.values())
    interior = [c for c in fd.split_field().critical(fd.p, set(fd.glue)) if c not in new]
    f_basis: dict[int, list[str]] = {}
    for c in interior:
        f_basis.setdefault(fd.p[c].dim, []).append(c)

    def count(src_copy, src, tgt_copy, tgt):
        return counts.get(copy_name(src_copy, src), {}).get(copy_name(tgt_copy, tgt), 0)

    f_diffs = {
        i: [[count(0, c, 0, r) for c in cols] for r in f_basis.get(i - 1, [])] for i, cols in f_basis.items()
    }
    f = ChainComplex(f_basis, f_diffs)

    problems = []
    for i in d.degrees:
        for a in d.names(i):
            for b in d.names(i):
                if count(0, prism[a], 0, level[b]) != (1 if a == b else 0):
                    problems.append(f"prism {a} -> level {b} is not the identity block")
            for b in d.names(i - 1):
                if count(0, prism[a], 0, prism[b]) != -d.entry(b, a):
                    problems.append(f"prism {a} -> prism {b} is not -d_D")
    for c in interior:
        for t in interior:
            if count(0, c, 1, t):
                problems.append(f"{c} reaches the next copy without crossing the cut")
    if problems:
        raise InvalidField("; ".join(problems[:5]))

    theta = {i: [[count(0, c, 0, level[r]) for c in f.names(i)] for r in d.names(i - 1)] for i in f.degrees}
    thetap = {i: [[-count(0, prism[c], 1, r) for c in d.names(i)] for r in f.names(i)] for i in d.degrees}
    psi = {i: [[-count(0, prism[c], 1, level[r]) for c in d.names(i)] for r in d.names(i)] for i in d.degrees}
    return AlgebraicCobordism(f, d, theta, thetap, psi)


def collared_domain(
    n: CellComplex,
    length: int,
    holes: Iterable[tuple[str, int]] = (),
    v_n: VectorField | None = None,
) -> FundamentalDomain:
    """``N x [0, length]`` with the transverse field, minus the given pairs.

    A hole ``(s, t)`` leaves ``s x {t}`` and ``s x [t-1, t]`` critical.  With
    ``v_n`` the slab ``[0, 3]`` becomes a splitting collar, so holes must sit at
    ``t > 3``.
    """
    p = cylinder(n, length)
    holes = set(holes)
    if v_n is not None and any(t <= 3 for _, t in holes):
        raise CollarPatternViolation("holes must avoid the collar slab [0, 3]")
    pairs = {
        level_id(s, t): prism_id(s, t)
        for s in n.cells
        for t in range(1, length + 1)
        if (s, t) not in holes
    }
    glue = {level_id(s, 0): level_id(s, length) for s in n.cells}
    collar = Collar(n) if v_n is not None else None
    return FundamentalDomain(p, glue, VectorField(pairs), collar, v_n)


# -- circle-valued functions on the circle -----------------------------------------------

class NotAlternating(DMTError):
    pass


@dataclass(frozen=True)
class CircleFunction:
    """Critical points in cyclic order as (label, index, value); ``winding`` 0 is real-valued."""

    points: tuple[tuple[str, int, Fraction], ...] = ()
    winding: int = 0

    def __post_init__(self):
        pts = tuple((str(a), int(i), Fraction(v)) for a, i, v in self.points)
        object.__setattr__(self, "points", pts)
        if self.winding < 0:
            raise NotAlternating("winding must be nonnegative")
        idx = [i for _, i, _ in pts]
        if any(i not in (0, 1) for i in idx):
            raise NotAlternating("indices must be 0 or 1")
        if pts and (len(pts) % 2 or any(idx[k] == idx[(k + 1) % len(idx)] for k in range(len(idx)))):
            raise NotAlternating("minima and maxima must alternate around the circle")

    def to_json(self) -> dict:
        return {"points": [[a, i, str(v)] for a, i, v in self.points], "winding": self.winding}

    @classmethod
    def from_json(cls, obj) -> "CircleFunction":
        return cls(tuple((a, i, Fraction(v)) for a, i, v in obj["points"]), int(obj.get("winding", 0)))


def _circle_basis(f: CircleFunction):
    basis = {0: [Label(a, 0, v) for a, i, v in f.points if i == 0]}
    basis[1] = [Label(a, 1, v) for a, i, v in f.points if i == 1]
    return basis


def circle_morse(f: CircleFunction) -> ChainComplex:
    """d(max) = (right neighbour) - (left neighbour)."""
    if f.winding:
        raise NotAlternating("circle_morse is for real-valued functions")
    if not f.points:
        return ChainComplex({})
    basis = _circle_basis(f)
    mins = [l.name for l in basis[0]]
    m = [[0] * len(basis[1]) for _ in mins]
    pts = f.points
    for col, lab in enumerate(basis[1]):
        k = next(t for t, p in enumerate(pts) if p[0] == lab.name)
        m[mins.index(pts[(k + 1) % len(pts)][0])][col] += 1
        m[mins.index(pts[k - 1][0])][col] -= 1
    return ChainComplex(basis, {1: m})


def circle_novikov(f: CircleFunction, n: int) -> ChainComplex:
    """Lifted neighbours; each pass across the cut after the last point costs z^winding."""
    from .rings import RingContext

    if f.winding < 1:
        raise NotAlternating("circle_novikov needs positive winding")
    ctx = RingContext()
    if not f.points:
        return ChainComplex({}, {}, ctx, n)
    basis = _circle_basis(f)
    mins = [l.name for l in basis[0]]
    m = [[ctx.zero(n) for _ in basis[1]] for _ in mins]
    pts = f.points
    w = f.winding
    for col, lab in enumerate(basis[1]):
        k = next(t for t, p in enumerate(pts) if p[0] == lab.name)
        right, left = (k + 1) % len(pts), k - 1
        r_row, l_row = mins.index(pts[right][0]), mins.index(pts[left][0])
        m[r_row][col] = m[r_row][col] + ctx.z(w if right < k else 0, n)
        m[l_row][col] = m[l_row][col] - ctx.z(w if left < 0 else 0, n)
    return ChainComplex(basis, {1: m}, ctx, n)
