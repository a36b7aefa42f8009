"""Exact rational feasibility for tiny linear systems, and 2D cone helpers.

Everything here is exact: coefficients are ints or ``Fraction``; floats are
converted exactly via ``Fraction(float)``. The one floating-point use is a
prefilter in :func:`extreme_generators` that only narrows the candidate set
before an exact comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

_RELATIONS = (">=", ">", "=", "<=", "<")


def _q(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    return Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)


@dataclass(frozen=True)
class LinearConstraint:
    """``coefficients . v  REL  constant`` over the variables (w1, w2, b)."""

    coefficients: tuple
    relation: str
    constant: Fraction = Fraction(0)

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        object.__setattr__(self, "coefficients", tuple(_q(a) for a in self.coefficients))
        object.__setattr__(self, "constant", _q(self.constant))

    def satisfied_by(self, values: Sequence) -> bool:
        lhs = sum(a * _q(v) for a, v in zip(self.coefficients, values))
        c = self.constant
        return {
            ">=": lhs >= c, ">": lhs > c, "=": lhs == c, "<=": lhs <= c, "<": lhs < c,
        }[self.relation]


def ge(coeffs, const=0) -> LinearConstraint:
    return LinearConstraint(tuple(coeffs), ">=", const)


def gt(coeffs, const=0) -> LinearConstraint:
    return LinearConstraint(tuple(coeffs), ">", const)


def le(coeffs, const=0) -> LinearConstraint:
    return LinearConstraint(tuple(coeffs), "<=", const)


def lt(coeffs, const=0) -> LinearConstraint:
    return LinearConstraint(tuple(coeffs), "<", const)


def eq(coeffs, const=0) -> LinearConstraint:
    return LinearConstraint(tuple(coeffs), "=", const)


# Internal row: (coeffs tuple of Fraction, const Fraction, strict bool) meaning
# coeffs . v >= const  (or > const when strict).


def _rows(constraints: Iterable[LinearConstraint], n: int):
    ineqs, eqs = [], []
    for c in constraints:
        a = tuple(c.coefficients) + (Fraction(0),) * (n - len(c.coefficients))
        if len(a) != n:
            raise ValueError("constraint has too many coefficients")
        r = c.relation
        if r == "=":
            eqs.append((a, c.constant))
        elif r in (">=", ">"):
            ineqs.append((a, c.constant, r == ">"))
        else:
            ineqs.append((tuple(-x for x in a), -c.constant, r == "<"))
    return ineqs, eqs


def _normalize(rows):
    """Scale each row so its leading nonzero coefficient is +-1; keep the
    tightest bound per coefficient vector. Returns None on a trivially false
    row."""
    best: dict[tuple, tuple[Fraction, bool]] = {}
    for a, c, strict in rows:
        lead = next((x for x in a if x != 0), None)
        if lead is None:
            ok = 0 > c if strict else 0 >= c
            if not ok:
                return None
            continue
        s = abs(lead)
        a = tuple(x / s for x in a)
        c = c / s
        prev = best.get(a)
        if prev is None or c > prev[0] or (c == prev[0] and strict and not prev[1]):
            best[a] = (c, strict)
    return [(a, c, s) for a, (c, s) in best.items()]


def _substitute(rows, j, expr_coeffs, expr_const):
    """Replace variable j by (expr_coeffs . v + expr_const) in each row."""
    out = []
    for a, c, strict in rows:
        aj = a[j]
        if aj == 0:
            out.append((a, c, strict))
            continue
        na = tuple((a[i] + aj * expr_coeffs[i]) if i != j else Fraction(0) for i in range(len(a)))
        out.append((na, c - aj * expr_const, strict))
    return out


def solve(constraints: Iterable[LinearConstraint], n: int = 3) -> tuple[Fraction, ...] | None:
    """Return an exact rational point satisfying every constraint, or None.

    Equalities are eliminated by substitution, then inequalities by
    Fourier-Motzkin; a combined bound is strict whenever either parent is.
    """
    ineqs, eqs = _rows(constraints, n)
    subs = []  # (var, coeffs, const): var = coeffs . v + const
    for a, c in eqs:
        # apply earlier substitutions to this equality
        for j, ec, ek in subs:
            if a[j] != 0:
                aj = a[j]
                a = tuple((a[i] + aj * ec[i]) if i != j else Fraction(0) for i in range(n))
                c = c - aj * ek
        piv = next((i for i in range(n) if a[i] != 0), None)
        if piv is None:
            if c != 0:
                return None
            continue
        p = a[piv]
        ec = tuple(Fraction(0) if i == piv else -a[i] / p for i in range(n))
        ek = c / p
        subs = [(j, tuple((sc[i] + sc[piv] * ec[i]) if i != piv else Fraction(0) for i in range(n)),
                 sk + sc[piv] * ek) for j, sc, sk in subs]
        subs.append((piv, ec, ek))
        ineqs = _substitute(ineqs, piv, ec, ek)
    fixed = {j for j, _, _ in subs}
    free = [i for i in range(n) if i not in fixed]

    rows = _normalize(ineqs)
    if rows is None:
        return None
    stages = []
    for j in free:
        stages.append((j, rows))
        lower, upper, rest = [], [], []
        for r in rows:
            aj = r[0][j]
            (lower if aj > 0 else upper if aj < 0 else rest).append(r)
        combined = list(rest)
        for al, cl, sl in lower:
            for au, cu, su in upper:
                # scale so coefficients of j cancel
                fl, fu = -au[j], al[j]
                na = tuple(fl * x + fu * y for x, y in zip(al, au))
                combined.append((na, fl * cl + fu * cu, sl or su))
        rows = _normalize(combined)
        if rows is None:
            return None

    values = [Fraction(0)] * n
    for j, stage_rows in reversed(stages):
        lo, lo_strict, hi, hi_strict = None, False, None, False
        for a, c, strict in stage_rows:
            aj = a[j]
            residual = c - sum(a[i] * values[i] for i in range(n) if i != j)
            if aj == 0:
                continue
            bound = residual / aj
            if aj > 0:
                if lo is None or bound > lo or (bound == lo and strict):
                    lo, lo_strict = bound, strict
            else:
                if hi is None or bound < hi or (bound == hi and strict):
                    hi, hi_strict = bound, strict
        values[j] = _pick(lo, lo_strict, hi, hi_strict)
    for j, ec, ek in reversed(subs):
        values[j] = sum(ec[i] * values[i] for i in range(n)) + ek
    return tuple(values)


def _pick(lo, lo_strict, hi, hi_strict) -> Fraction:
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        return hi - 1 if hi_strict else hi
    if hi is None:
        return lo + 1 if lo_strict else lo
    if lo == hi:
        return lo
    return (lo + hi) / 2


def feasible(constraints: Iterable[LinearConstraint], n: int = 3) -> bool:
    return solve(constraints, n) is not None


def lex_order(xa, xb) -> int:
    """-1 if ``xa`` sorts before ``xb`` (first coordinate, then second), 0 if equal, +1 after."""
    ta, tb = tuple(xa), tuple(xb)
    return (ta > tb) - (ta < tb)


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


# -- open cones in the plane -------------------------------------------------
#
# An open cone {w : w . g > 0 for all g in G} is nonempty iff the generators G
# lie in an open half-plane; it is then described by the two angular extremes
# (lo, hi) of G, and equals {w : w . lo > 0, w . hi > 0}.

EMPTY = None


def _more_ccw(a, b) -> bool:
    """For a, b in the same open half-turn, True when b lies ccw of a."""
    return cross(a, b) > 0


def _scan_extreme(vecs, ccw: bool):
    best = vecs[0]
    for v in vecs[1:]:
        if _more_ccw(best, v) == ccw and cross(best, v) != 0:
            best = v
    return best


def extreme_generators(gx, gy, ref=None):
    """Angular extremes ``(lo, hi)`` of the nonzero vectors (gx[i], gy[i]).

    Returns ``EMPTY`` when no open half-plane contains them all (including
    when a zero vector is present). ``ref`` is a vector known to belong to
    the set; it anchors the relative angles.
    """
    gx = np.asarray(gx)
    gy = np.asarray(gy)
    if gx.size == 0:
        raise ValueError("no generators")
    if np.any((gx == 0) & (gy == 0)):
        return EMPTY
    if ref is None:
        ref = (gx[0], gy[0])
    rx, ry = ref
    c = rx * gy - ry * gx
    d = rx * gx + ry * gy
    if np.any((c == 0) & (d < 0)):
        return EMPTY
    exact_int = gx.dtype.kind == "i"
    pos = np.flatnonzero(c > 0)
    neg = np.flatnonzero(c < 0)

    def pick(idx, ccw):
        if idx.size == 0:
            return (rx, ry)
        if exact_int and idx.size > 8:
            ang = np.arctan2(c[idx].astype(float), d[idx].astype(float))
            target = ang.max() if ccw else ang.min()
            idx = idx[np.abs(ang - target) <= 1e-9]
        vecs = [(gx[i], gy[i]) for i in idx]
        return _scan_extreme(vecs, ccw)

    hi = pick(pos, True)
    lo = pick(neg, False)
    if pos.size and neg.size and cross(lo, hi) <= 0:
        return EMPTY
    return _clean(lo), _clean(hi)


def _clean(v):
    return (v[0].item() if hasattr(v[0], "item") else v[0],
            v[1].item() if hasattr(v[1], "item") else v[1])


def same_direction(a, b) -> bool:
    return cross(a, b) == 0 and a[0] * b[0] + a[1] * b[1] > 0


def line_meets_cone(dx, dy, lo, hi):
    """Whether the line {w : w . d = 0} meets the open cone with extremes lo, hi.

    Vectorized over (dx, dy). ``lo is None`` means the cone is the whole plane.
    """
    dx = np.asarray(dx)
    dy = np.asarray(dy)
    if lo is None:
        return (dx != 0) | (dy != 0)
    s1 = np.sign(dx * lo[1] - dy * lo[0])
    s2 = np.sign(dx * hi[1] - dy * hi[0])
    return (s1 == s2) & (s1 != 0)


_INT_LIMIT = 1 << 24


def coordinate_array(points) -> np.ndarray:
    """(n, 2) array: int64 for small integer coordinates, exact objects otherwise."""
    pts = [tuple(p) for p in points]
    if all(isinstance(v, (int, np.integer)) and abs(int(v)) < _INT_LIMIT for p in pts for v in p):
        return np.array(pts, dtype=np.int64).reshape(len(pts), 2)
    out = np.empty((len(pts), 2), dtype=object)
    for i, p in enumerate(pts):
        out[i, 0], out[i, 1] = _q(p[0]), _q(p[1])
    return out


def _stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.dtype != b.dtype:
        a, b = a.astype(object), b.astype(object)
    return np.concatenate([a, b])


class WedgeState:
    """Projection onto w of a 2D halfspace version space.

    For a labeled set with positives P and negatives N the set of feasible
    normals is the open cone {w : w . (p - n) > 0 for all p in P, n in N}.
    Points carry integer ids; id -1 marks pinned points that can never be
    removed. ``essential`` holds the ids contributing a generator along one
    of the two extreme directions: dropping any other examples leaves the
    cone unchanged.
    """

    __slots__ = ("pos", "pos_ids", "neg", "neg_ids", "lo", "hi", "lo_ess", "hi_ess", "empty")

    def __init__(self, pos, pos_ids, neg, neg_ids, lo, hi, lo_ess, hi_ess, empty=False):
        self.pos, self.pos_ids, self.neg, self.neg_ids = pos, pos_ids, neg, neg_ids
        self.lo, self.hi = lo, hi
        self.lo_ess, self.hi_ess = lo_ess, hi_ess
        self.empty = empty

    @classmethod
    def build(cls, pos_points, pos_ids, neg_points, neg_ids) -> "WedgeState":
        pos = coordinate_array(pos_points)
        neg = coordinate_array(neg_points)
        pos_ids = np.asarray(list(pos_ids), dtype=np.int64)
        neg_ids = np.asarray(list(neg_ids), dtype=np.int64)
        if len(pos) == 0 or len(neg) == 0:
            return cls(pos, pos_ids, neg, neg_ids, None, None, frozenset(), frozenset())
        if pos.dtype != neg.dtype:
            pos, neg = pos.astype(object), neg.astype(object)
        gx = (pos[:, None, 0] - neg[None, :, 0]).ravel()
        gy = (pos[:, None, 1] - neg[None, :, 1]).ravel()
        ext = extreme_generators(gx, gy)
        if ext is EMPTY:
            return cls(pos, pos_ids, neg, neg_ids, None, None, frozenset(), frozenset(), empty=True)
        lo, hi = ext
        pi = np.repeat(pos_ids, len(neg_ids))
        ni = np.tile(neg_ids, len(pos_ids))
        return cls(pos, pos_ids, neg, neg_ids, lo, hi,
                   _contributors(gx, gy, pi, ni, lo), _contributors(gx, gy, pi, ni, hi))

    @property
    def essential(self) -> frozenset:
        return frozenset(i for i in self.lo_ess | self.hi_ess if i >= 0)

    @property
    def key(self):
        if self.empty:
            return ("empty",)
        if self.lo is None:
            return ("plane",)
        return (_direction_key(self.lo), _direction_key(self.hi))

    def _new_generators(self, point, label):
        p = coordinate_array([point])
        if label > 0:
            other, ids = self.neg, self.neg_ids
            if other.dtype != p.dtype:
                other, p = other.astype(object), p.astype(object)
            return p[0, 0] - other[:, 0], p[0, 1] - other[:, 1], ids
        other, ids = self.pos, self.pos_ids
        if other.dtype != p.dtype:
            other, p = other.astype(object), p.astype(object)
        return other[:, 0] - p[0, 0], other[:, 1] - p[0, 1], ids

    def _combined(self, gx, gy):
        if self.lo is None:
            return extreme_generators(gx, gy)
        extra_x = np.array([self.lo[0], self.hi[0]], dtype=gx.dtype if gx.dtype.kind == "i" else object)
        extra_y = np.array([self.lo[1], self.hi[1]], dtype=extra_x.dtype)
        if gx.dtype != extra_x.dtype:
            gx, gy = gx.astype(object), gy.astype(object)
        return extreme_generators(np.concatenate([extra_x, gx]), np.concatenate([extra_y, gy]), ref=self.lo)

    def admits(self, point, label) -> bool:
        if self.empty:
            return False
        gx, gy, _ = self._new_generators(point, label)
        if gx.size == 0:
            return True
        return self._combined(gx, gy) is not EMPTY

    def extend(self, point, label, idx: int) -> "WedgeState":
        if self.empty:
            return self
        gx, gy, other_ids = self._new_generators(point, label)
        p = coordinate_array([point])
        if label > 0:
            pos, pos_ids = _stack(self.pos, p), np.append(self.pos_ids, idx)
            neg, neg_ids = self.neg, self.neg_ids
        else:
            pos, pos_ids = self.pos, self.pos_ids
            neg, neg_ids = _stack(self.neg, p), np.append(self.neg_ids, idx)
        if gx.size == 0:
            return WedgeState(pos, pos_ids, neg, neg_ids, self.lo, self.hi, self.lo_ess, self.hi_ess)
        ext = self._combined(gx, gy)
        if ext is EMPTY:
            return WedgeState(pos, pos_ids, neg, neg_ids, None, None, frozenset(), frozenset(), empty=True)
        lo, hi = ext
        own = np.full(len(other_ids), idx, dtype=np.int64)
        if label > 0:
            pi, ni = own, other_ids
        else:
            pi, ni = other_ids, own
        new_lo = _contributors(gx, gy, pi, ni, lo)
        new_hi = _contributors(gx, gy, pi, ni, hi)
        if self.lo is not None and same_direction(lo, self.lo):
            new_lo |= self.lo_ess
        if self.hi is not None and same_direction(hi, self.hi):
            new_hi |= self.hi_ess
        return WedgeState(pos, pos_ids, neg, neg_ids, lo, hi, new_lo, new_hi)

    def without(self, idx: int) -> "WedgeState":
        """Same state with example ``idx`` dropped.

        Cheap when ``idx`` is not essential (the cone is unchanged); otherwise
        the cone is rebuilt from the remaining points.
        """
        keep_p = self.pos_ids != idx
        keep_n = self.neg_ids != idx
        pos, pos_ids = self.pos[keep_p], self.pos_ids[keep_p]
        neg, neg_ids = self.neg[keep_n], self.neg_ids[keep_n]
        if idx in self.lo_ess or idx in self.hi_ess or self.empty:
            return WedgeState.build(list(map(tuple, pos)), pos_ids, list(map(tuple, neg)), neg_ids)
        return WedgeState(pos, pos_ids, neg, neg_ids, self.lo, self.hi, self.lo_ess, self.hi_ess)

    def line_meets(self, dx, dy):
        """Per direction d: whether some feasible normal is orthogonal to d."""
        if self.empty:
            return np.zeros(np.shape(dx), dtype=bool)
        return line_meets_cone(dx, dy, self.lo, self.hi)


def _contributors(gx, gy, pi, ni, direction) -> frozenset:
    c = gx * direction[1] - gy * direction[0]
    d = gx * direction[0] + gy * direction[1]
    mask = np.asarray((c == 0) & (d > 0), dtype=bool)
    return frozenset(int(i) for i in np.concatenate([pi[mask], ni[mask]]))


def _direction_key(v):
    a, b = _q(v[0]), _q(v[1])
    s = abs(a) + abs(b)
    return (a / s, b / s)
