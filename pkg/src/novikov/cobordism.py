"""Real-valued cobordism algebra: triple complexes, attaching cones and splittings.

Conventions used throughout:

* ``theta: F_* -> D_{*-1}`` anticommutes with the differentials,
  ``theta': D'_* -> F_*`` commutes, and ``psi: D'_* -> D_*`` is a degree zero
  map tied to them by ``d_D psi - psi d_D' + theta theta' = 0``.  These are the
  block identities of ``d^2 = 0`` for the matrix
  ``[[d_D, theta, -psi], [0, d_F, -theta'], [0, 0, -d_D']]``.
* An attaching map ``phi: F''_* -> F'_{*-1}`` anticommutes; the glued complex
  is its cone ``[[d_F', phi], [0, d_F'']]`` with ``F''`` keeping its degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import matrix as mx
from .chain import (
    ChainComplex,
    ChainMap,
    Label,
    ShapeMismatch,
    ValueFiltration,
    identity_map,
    mapping_cone,
    verify_complex,
)


class CobordismError(ValueError):
    pass


class IdentityViolation(CobordismError):
    def __init__(self, failures: Sequence[str]):
        self.failures = list(failures)
        super().__init__("violated: " + ", ".join(self.failures))


class NotSimple(CobordismError):
    pass


class BadPartition(CobordismError):
    pass


def _shape_check(m: ChainMap, source: ChainComplex, target: ChainComplex, shift: int, what: str):
    if m.shift != shift:
        raise ShapeMismatch(f"{what} must have degree {shift}")
    for i in m.degrees():
        if m.matrix(i).shape != (target.rank(i + shift), source.rank(i)):
            raise ShapeMismatch(f"{what} has the wrong shape in degree {i}")
        if m.source.names(i) != source.names(i) or m.target.names(i + shift) != target.names(i + shift):
            raise ShapeMismatch(f"{what} is attached to the wrong basis in degree {i}")


# -- triples -------------------------------------------------------------------

@dataclass
class MorseTriple:
    d: ChainComplex
    f: ChainComplex
    dprime: ChainComplex
    theta: ChainMap
    thetaprime: ChainMap
    psi: ChainMap

    def __post_init__(self):
        _shape_check(self.theta, self.f, self.d, -1, "theta")
        _shape_check(self.thetaprime, self.dprime, self.f, 0, "theta'")
        _shape_check(self.psi, self.dprime, self.d, 0, "psi")

    def identity_failures(self) -> list[str]:
        out = []
        n = _prec(self.d, self.f, self.dprime)
        if ChainMap(self.f, self.d, self.theta.maps, -1, True).check(n):
            out.append("d_D theta + theta d_F = 0")
        if ChainMap(self.dprime, self.f, self.thetaprime.maps).check(n):
            out.append("d_F theta' = theta' d_D'")
        for i in self.dprime.degree_range():
            lhs = (
                mx.matmul(self.d.diff(i), self.psi.matrix(i))
                - mx.matmul(self.psi.matrix(i - 1), self.dprime.diff(i))
                + mx.matmul(self.theta.matrix(i), self.thetaprime.matrix(i))
            )
            if mx.nonzero_entries(lhs, n):
                out.append("d_D psi - psi d_D' + theta theta' = 0")
                break
        return out

    def to_json(self) -> dict:
        return {
            "D": self.d.to_json(),
            "F": self.f.to_json(),
            "Dprime": self.dprime.to_json(),
            "theta": _map_json(self.theta),
            "thetaprime": _map_json(self.thetaprime),
            "psi": _map_json(self.psi),
        }

    @classmethod
    def from_json(cls, obj) -> "MorseTriple":
        d, f, dp = (ChainComplex.from_json(obj[k]) for k in ("D", "F", "Dprime"))
        return cls(
            d, f, dp,
            _map_from_json(obj["theta"], f, d, -1, True),
            _map_from_json(obj["thetaprime"], dp, f, 0, False),
            _map_from_json(obj["psi"], dp, d, 0, False),
        )


def _prec(*cs: ChainComplex):
    precs = [c.precision for c in cs if c.precision is not None]
    return min(precs) if precs else None


def _map_json(m: ChainMap) -> dict:
    from .chain import _entry_to_json

    return {
        str(i): [[_entry_to_json(v) for v in row] for row in m.matrix(i)]
        for i in m.degrees()
        if m.matrix(i).size
    }


def _map_from_json(obj, source, target, shift, anti) -> ChainMap:
    from .chain import _entry_from_json

    maps = {
        int(i): mx.asmatrix(
            [[_entry_from_json(v, target.ring, target.precision) for v in row] for row in rows],
            target.rank(int(i) + shift),
            source.rank(int(i)),
        )
        for i, rows in obj.items()
    }
    return ChainMap(source, target, maps, shift, anti)


def assemble_triple(t: MorseTriple, suffix: str = "[+1]", check: bool = True) -> ChainComplex:
    """``C_i = D_i + F_i + D'_{i-1}`` with the block differential above.

    With ``check=False`` the block matrix is returned even when the identities
    fail, so callers can watch d^2 go wrong.
    """
    failures = t.identity_failures() if check else []
    if failures:
        raise IdentityViolation(failures)
    d, f, dp = t.d, t.f, t.dprime
    shifted = {i + 1: [Label(l.name + suffix, i + 1, l.value) for l in labs] for i, labs in dp.basis.items()}
    degrees = sorted(set(d.degree_range()) | set(f.degree_range()) | set(shifted))
    lo, hi = degrees[0], degrees[-1]
    basis = {i: list(d.labels(i)) + list(f.labels(i)) + shifted.get(i, []) for i in degrees}
    diffs = {}
    for i in range(lo, hi + 1):
        diffs[i] = mx.block(
            [
                [d.diff(i), t.theta.matrix(i), mx.scale(-1, t.psi.matrix(i - 1))],
                [None, f.diff(i), mx.scale(-1, t.thetaprime.matrix(i - 1))],
                [None, None, mx.scale(-1, dp.diff(i - 1))],
            ],
            [d.rank(i - 1), f.rank(i - 1), dp.rank(i - 2)],
            [d.rank(i), f.rank(i), dp.rank(i - 1)],
        )
    return ChainComplex({i: b for i, b in basis.items() if b}, diffs, d.ring, _prec(d, f, dp))


def extract_triple(
    c: ChainComplex, d_names: Sequence[str], f_names: Sequence[str], dprime_names: Sequence[str]
) -> MorseTriple:
    """Read the blocks of a complex laid out as ``D + F + D'[+1]`` back into a triple.

    ``dprime_names`` are the labels of the shifted block in ``c``; the returned
    ``D'`` carries them one degree lower.
    """

    def sub(names, shift=0):
        basis = {}
        for name in names:
            i, k = c.index(name)
            lab = c.labels(i)[k]
            basis.setdefault(i - shift, []).append(Label(name, i - shift, lab.value))
        return basis

    def pick(row_names, col_names):
        out = mx.zeros(len(row_names), len(col_names))
        for r, rn in enumerate(row_names):
            for k, cn in enumerate(col_names):
                out[r, k] = c.entry(rn, cn)
        return out

    bd, bf, bdp = sub(d_names), sub(f_names), sub(dprime_names, shift=1)

    def names(b, i):
        return [l.name for l in b.get(i, [])]

    def complex_of(b, sign=1):
        diffs = {i: mx.scale(sign, pick(names(b, i - 1), names(b, i))) for i in b}
        return ChainComplex(b, diffs, c.ring, c.precision)

    d = complex_of(bd)
    f = complex_of(bf)
    dp = complex_of(bdp, sign=-1)
    theta = ChainMap(f, d, {i: pick(names(bd, i - 1), names(bf, i)) for i in bf}, -1, True)
    thetap = ChainMap(dp, f, {i: mx.scale(-1, pick(names(bf, i), names(bdp, i))) for i in bdp})
    psi = ChainMap(dp, d, {i: mx.scale(-1, pick(names(bd, i), names(bdp, i))) for i in bdp})
    return MorseTriple(d, f, dp, theta, thetap, psi)


def continuation_map(t: MorseTriple) -> ChainMap:
    """The map ``psi: D' -> D`` of a cobordism without interior critical points."""
    if any(t.f.rank(i) for i in t.f.degrees):
        raise NotSimple("the cobordism has interior critical points")
    failures = t.identity_failures()
    if failures:
        raise IdentityViolation(failures)
    m = ChainMap(t.dprime, t.d, t.psi.maps)
    if m.check():
        raise IdentityViolation(["psi is a chain map"])
    return m


# -- splittings ------------------------------------------------------------------

@dataclass
class SplittingData:
    """``theta': D -> F'`` (commuting), ``theta'': F''_{*} -> D_{*-1}`` (anticommuting)."""

    d: ChainComplex
    fp: ChainComplex
    fpp: ChainComplex
    thetap: ChainMap
    thetapp: ChainMap
    phi: ChainMap | None = None

    def __post_init__(self):
        _shape_check(self.thetap, self.d, self.fp, 0, "theta'")
        _shape_check(self.thetapp, self.fpp, self.d, -1, "theta''")
        if self.phi is not None:
            _shape_check(self.phi, self.fpp, self.fp, -1, "phi")

    def validate(self) -> list[str]:
        out = []
        if self.thetap.anticommute or self.thetap.check():
            out.append("theta' is not a chain map")
        if not self.thetapp.anticommute or self.thetapp.check():
            out.append("theta'' does not anticommute with d")
        if self.phi is not None and (not self.phi.anticommute or self.phi.check()):
            out.append("phi does not anticommute with d")
        return out

    def composite(self) -> ChainMap:
        """``theta' theta'': F''_* -> F'_{*-1}``."""
        return self.thetap.compose(self.thetapp)


@dataclass
class AttachingCone:
    complex: ChainComplex
    inclusion: ChainMap
    projection: ChainMap

    def exact(self) -> bool:
        return not (self.inclusion.check() or self.projection.check()) and all(
            not mx.nonzero_entries(mx.matmul(self.projection.matrix(i), self.inclusion.matrix(i)))
            for i in self.inclusion.degrees()
        )


def glued_complex(fp: ChainComplex, fpp: ChainComplex, phi: ChainMap) -> ChainComplex:
    """``F' + F''`` with differential ``[[d_F', phi], [0, d_F'']]``."""
    return mapping_cone(phi, suffix="")


def attaching_cone(s: SplittingData) -> AttachingCone:
    if s.phi is None:
        raise CobordismError("splitting data carries no attaching map")
    cone = glued_complex(s.fp, s.fpp, s.phi)
    inc, proj = {}, {}
    for i in cone.degrees:
        a, b = s.fp.rank(i), s.fpp.rank(i)
        inc[i] = mx.block([[mx.identity(a)], [None]], [a, b], [a])
        proj[i] = mx.block([[None, mx.identity(b)]], [b], [a, b])
    return AttachingCone(cone, ChainMap(s.fp, cone, inc), ChainMap(cone, s.fpp, proj))


@dataclass
class SplitComplex:
    """The split complex ``F' + D_{*-1} + D + F''`` with its exact-sequence maps."""

    complex: ChainComplex
    cone: ChainComplex
    p: ChainMap
    j: ChainMap
    section: ChainMap
    retraction: ChainMap
    coker: ChainComplex

    def exactness_failures(self) -> list[str]:
        out = []
        if verify_complex(self.complex):
            out.append("d^2 != 0 on the split complex")
        if self.p.check():
            out.append("p_h is not a chain map")
        if self.j.check():
            out.append("the quotient map is not a chain map")
        for i in self.complex.degrees:
            n = self.complex.rank(i)
            jp = mx.matmul(self.j.matrix(i), self.p.matrix(i))
            if mx.nonzero_entries(jp):
                out.append(f"j p_h != 0 in degree {i}")
            if not mx.equal(mx.matmul(self.j.matrix(i), self.section.matrix(i)), mx.identity(self.coker.rank(i))):
                out.append(f"j s != 1 in degree {i}")
            if not mx.equal(mx.matmul(self.retraction.matrix(i), self.p.matrix(i)), mx.identity(self.cone.rank(i))):
                out.append(f"r p_h != 1 in degree {i}")
            total = mx.matmul(self.p.matrix(i), self.retraction.matrix(i)) + mx.matmul(
                self.section.matrix(i), self.j.matrix(i)
            )
            if not mx.equal(total, mx.identity(n)):
                out.append(f"p_h r + s j != 1 in degree {i}")
        return out


def splitting_complex(s: SplittingData, suffix: str = "[+1]") -> SplitComplex:
    failures = s.validate()
    if failures:
        raise IdentityViolation(failures)
    d, fp, fpp = s.d, s.fp, s.fpp
    prisms = {i + 1: [Label(l.name + suffix, i + 1, l.value) for l in labs] for i, labs in d.basis.items()}

    def sizes(i):
        return [fp.rank(i), d.rank(i - 1), d.rank(i), fpp.rank(i)]

    degrees = sorted(set(fp.degree_range()) | set(fpp.degree_range()) | set(d.degree_range()) | set(prisms))
    basis = {i: list(fp.labels(i)) + prisms.get(i, []) + list(d.labels(i)) + list(fpp.labels(i)) for i in degrees}
    diffs = {}
    for i in range(degrees[0], degrees[-1] + 1):
        diffs[i] = mx.block(
            [
                [fp.diff(i), mx.scale(-1, s.thetap.matrix(i - 1)), None, None],
                [None, mx.scale(-1, d.diff(i - 1)), None, None],
                [None, mx.identity(d.rank(i - 1)), d.diff(i), s.thetapp.matrix(i)],
                [None, None, None, fpp.diff(i)],
            ],
            sizes(i - 1),
            sizes(i),
        )
    ch = ChainComplex({i: b for i, b in basis.items() if b}, diffs, d.ring, _prec(d, fp, fpp))

    cone = mapping_cone(identity_map(d), suffix=suffix)
    coker = mapping_cone(s.composite(), suffix="")
    p, j, sec, ret = {}, {}, {}, {}
    for i in degrees:
        a, x, y, b = sizes(i)
        iy = mx.identity(y)
        ix = mx.identity(x)
        # cone basis is D_i + D_{i-1}: (y, x)
        p[i] = mx.block(
            [[mx.scale(-1, s.thetap.matrix(i)), None], [None, ix], [iy, None], [None, None]],
            [a, x, y, b],
            [y, x],
        )
        ret[i] = mx.block([[None, None, iy, None], [None, ix, None, None]], [y, x], [a, x, y, b])
        j[i] = mx.block(
            [[mx.identity(a), None, s.thetap.matrix(i), None], [None, None, None, mx.identity(b)]],
            [a, b],
            [a, x, y, b],
        )
        sec[i] = mx.block([[mx.identity(a), None], [None, None], [None, None], [None, mx.identity(b)]], [a, x, y, b], [a, b])
    return SplitComplex(
        ch,
        cone,
        ChainMap(cone, ch, p),
        ChainMap(ch, coker, j),
        ChainMap(coker, ch, sec),
        ChainMap(ch, cone, ret),
        coker,
    )


def cokernel_complex(sc: SplitComplex) -> ChainComplex:
    """The quotient differential ``j d_h s`` computed directly from the split complex."""
    diffs = {}
    for i in sc.coker.degrees:
        diffs[i] = mx.matmul(
            sc.j.matrix(i - 1), mx.matmul(sc.complex.diff(i), sc.section.matrix(i))
        )
    return sc.coker.like(sc.coker.basis, diffs)


@dataclass
class GlueResult:
    ok: bool
    discrepancy: dict[int, np.ndarray] = field(default_factory=dict)


def glue_check(phi: ChainMap, thetap: ChainMap, thetapp: ChainMap) -> GlueResult:
    """Compare a directly counted attaching map with the composite through the splitting."""
    if thetapp.target.basis != thetap.source.basis:
        raise ShapeMismatch("theta'' and theta' do not meet in the same complex")
    if phi.source.basis != thetapp.source.basis or phi.target.basis != thetap.target.basis:
        raise ShapeMismatch("phi and theta' theta'' have different ends")
    comp = thetap.compose(thetapp)
    if phi.shift != comp.shift:
        raise ShapeMismatch("phi and theta' theta'' have different degrees")
    bad = {}
    for i in sorted(set(phi.degrees()) | set(comp.degrees())):
        diff = phi.matrix(i) - comp.matrix(i)
        if mx.nonzero_entries(diff):
            bad[i] = diff
    return GlueResult(not bad, bad)


# -- rigidity checks -------------------------------------------------------------

@dataclass(frozen=True)
class SettingViolation:
    upper: str
    lower: str
    total: object
    gap: Fraction


def setting_check(
    square: ChainComplex,
    partition: Mapping[str, int],
    values: ValueFiltration | Mapping[str, Fraction],
    epsilon: Fraction,
) -> list[SettingViolation]:
    """Two-step composites from block 3 to block 0 through blocks 1 and 2.

    For ``u`` in block 3 and ``v`` in block 0 two degrees lower with
    ``value(u) - value(v) < epsilon`` the sum over both middle blocks must vanish.
    """
    vals = values.values if isinstance(values, ValueFiltration) else values
    labels = square.all_labels()
    missing = [l.name for l in labels if l.name not in partition]
    if missing or any(b not in (0, 1, 2, 3) for b in partition.values()):
        raise BadPartition(f"partition must assign blocks 0..3 to every label (missing {missing[:5]})")
    if any(l.name not in vals for l in labels if partition[l.name] in (0, 3)):
        raise BadPartition("blocks 0 and 3 need values")
    eps = Fraction(epsilon)
    out = []
    for k in square.degrees:
        d_hi, d_lo = square.diff(k), square.diff(k - 1)
        for cu, u in enumerate(square.labels(k)):
            if partition[u.name] != 3:
                continue
            for rv, v in enumerate(square.labels(k - 2)):
                if partition[v.name] != 0:
                    continue
                gap = Fraction(vals[u.name]) - Fraction(vals[v.name])
                if gap >= eps:
                    continue
                total = 0
                for rx, x in enumerate(square.labels(k - 1)):
                    if partition[x.name] in (1, 2):
                        total = total + d_lo[rv, rx] * d_hi[rx, cu]
                if not mx.entry_is_zero(total, square.precision):
                    out.append(SettingViolation(u.name, v.name, total, gap))
    return out


def value_order(labels: Sequence[str], values: Mapping[str, Fraction]) -> list[int]:
    """Indices of ``labels`` sorted by value, ties kept in their given order."""
    return sorted(range(len(labels)), key=lambda k: (values[labels[k]], k))


def triangularity_check(a, labels: Sequence[str] | None = None, values: Mapping[str, Fraction] | None = None) -> bool:
    """Upper triangular with diagonal entries +-1 once rows and columns are sorted by value."""
    a = mx.asmatrix(a)
    n = a.shape[0]
    if a.shape != (n, n):
        return False
    order = list(range(n)) if values is None else value_order(list(labels), values)
    b = a[np.ix_(order, order)] if n else a
    for r in range(n):
        if b[r, r] not in (1, -1):
            return False
        for c in range(r):
            if b[r, c] != 0:
                return False
    return True
