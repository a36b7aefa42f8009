"""Reference enumeration of comparison-query transcripts: every weak order
times every cut, one feasibility call each."""

from fractions import Fraction

from injectlab import geometry
from injectlab.classes import _split
from injectlab.scores import _halfspace_constraints, weak_orders


def reference_transcripts(cls, points, rest) -> set:
    pos, neg = _split(rest)
    known = {p: 1 for p in pos}
    known.update({p: -1 for p in neg})
    base = _halfspace_constraints(pos, neg, cls.pin)
    f = [(Fraction(p[0]), Fraction(p[1]), Fraction(-1)) for p in points]
    found = set()
    for order in weak_orders(len(points)):
        chain = []
        for lower, upper in zip(order, order[1:]):
            chain.append(geometry.gt(tuple(x - y for x, y in zip(f[upper[0]], f[lower[0]]))))
        for block in order:
            for j in block[1:]:
                chain.append(geometry.eq(tuple(x - y for x, y in zip(f[block[0]], f[j]))))
        for cut in range(len(order) + 1):
            signs = {j: (1 if bi >= cut else -1) for bi, block in enumerate(order) for j in block}
            if any(known.get(points[j], signs[j]) != signs[j] for j in signs):
                continue
            cons = list(base) + chain
            for bi, block in enumerate(order):
                cons.append(geometry.ge(f[block[0]]) if bi >= cut else geometry.lt(f[block[0]]))
            if geometry.feasible(cons):
                found.add((order, tuple(signs[j] for j in range(len(points)))))
    return found
