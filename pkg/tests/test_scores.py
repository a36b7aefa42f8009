import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from _transcript_ref import reference_transcripts
from injectlab.classes import ExplicitTree, FiniteClass, Halfspace2DClass, PreconditionError, RectangleClass, TreeOrderClass, rectangle_patterns
from injectlab.core import LabeledExample as Z
from injectlab.oracle import FiniteInstance
from injectlab.scores import (
    CertificateScore, DegeneratePairError, FiniteCertificate, HalfspaceCertificateScore, RectScore, ScoreSpec,
    SegmentScore, TranscriptScore, make_score, sigma_halfspace, sigma_value_feasible, weak_orders,
)


def test_score_spec_validation():
    with pytest.raises(ValueError):
        ScoreSpec(k=3, m=2, c=1)
    with pytest.raises(ValueError):
        ScoreSpec(k=1, m=2, c=0)


def test_parameters():
    assert RectScore(RectangleClass(3)).spec == ScoreSpec(1, 7, 3)
    assert SegmentScore(TreeOrderClass(ExplicitTree.complete(2, 1))).spec == ScoreSpec(1, 3, 1)
    assert HalfspaceCertificateScore(Halfspace2DClass()).spec == ScoreSpec(2, 7, 3)
    assert TranscriptScore(Halfspace2DClass()).spec == ScoreSpec(4, 5, 1920)


# -- rectangles


def test_rect_examples():
    f = RectScore(RectangleClass(2))
    assert f([((2, 3), -1)], []) == 2
    assert f([((2, 3), -1)], [((2, 0), 1)]) == 1
    assert f([((1, 1), 1)], []) == 0


def test_rect_unrealizable_input():
    f = RectScore(RectangleClass(2))
    with pytest.raises(PreconditionError):
        f([((1, 1), -1)], [((2, 2), 1)])


def test_rect_wrong_subset_size():
    with pytest.raises(ValueError):
        RectScore(RectangleClass(1))([], [])


# -- segments


@pytest.fixture
def abc():
    return TreeOrderClass(ExplicitTree({"a": None, "b": "a", "c": "a"}))


def test_seg_examples(abc):
    f = SegmentScore(abc)
    assert f([("c", 1)], []) == 1
    assert f([("c", 1)], [("b", 1)]) == 0
    assert f([("c", 1)], [("a", 1)]) == 1


def test_seg_unrealizable_rest(abc):
    with pytest.raises(PreconditionError):
        SegmentScore(abc)([("a", 1)], [("b", 1), ("c", 1)])


# -- certificates


def test_sigma_examples():
    assert sigma_halfspace(((1, 0), 0), [(0, 0), (1, 2)]) == 2
    assert sigma_halfspace(((1, 0), 0), [(0, 1), (0, 2)]) == 1
    assert sigma_halfspace(((1, 1), 0), [(2, 0), (3, -5)]) == 0
    # order of the pair does not matter, labels are ignored
    assert sigma_halfspace(((1, 1), 0), [Z((3, -5), 1), Z((2, 0), -1)]) == 0


def test_sigma_degenerate_pair():
    with pytest.raises(DegeneratePairError):
        sigma_halfspace(((1, 0), 0), [(1, 1), (1, 1)])
    for v in range(3):
        with pytest.raises(DegeneratePairError):
            sigma_value_feasible([(2, 2), (2, 2)], [], v)


def test_sigma_value_feasible_examples():
    forcing_w2_positive = [((0, 1), 1), ((0, 0), -1)]
    assert not sigma_value_feasible([(0, 0), (0, 1)], forcing_w2_positive, 1)
    rng = random.Random(0)
    for _ in range(20):
        p, q = (rng.randint(-5, 5), rng.randint(-5, 5)), (rng.randint(-5, 5), rng.randint(-5, 5))
        if p == q:
            continue
        assert sigma_value_feasible([p, q], [], 0) and sigma_value_feasible([p, q], [], 2)


def test_cert_example_pinned():
    cls = Halfspace2DClass(pin=((1, 0), (-1, 0)))
    f = HalfspaceCertificateScore(cls)
    assert f([((0, 1), 1), ((0, 2), 1)], []) == 3
    assert CertificateScore(cls, f.certificate, 7)([((0, 1), 1), ((0, 2), 1)], []) == 3


def test_cert_collapse_scores_maximum():
    f = HalfspaceCertificateScore(Halfspace2DClass())
    assert f([((0, 1), 1), ((0, 1), 1)], []) == 3


def test_finite_certificate_singleton_and_collision():
    fc = FiniteClass(["p", "q", "r"], [[1, 1, 1], [1, -1, 1], [-1, -1, 1]])
    sigma = lambda j, pts: fc.label_of(j, pts[0])
    f = CertificateScore(fc, FiniteCertificate(fc, sigma, n=2, size=1), m=3)
    # rest pins V to a single hypothesis
    assert f([("r", 1)], [("p", 1), ("q", -1)]) == 1
    # hypotheses 0 and 1 share sigma on p
    assert f([("p", 1)], [("p", 1)]) == 1
    assert f([("p", 1)], []) == 2


def test_fast_halfspace_values_are_one_or_three():
    rng = random.Random(1)
    cls = Halfspace2DClass(pin=((0, 6), (0, -6)))
    f = HalfspaceCertificateScore(cls)
    for _ in range(60):
        rest = [Z(p, 1 if p[1] >= 0 else -1) for p in {(rng.randint(-5, 5), rng.randint(-5, 5)) for _ in range(4)}]
        U = [Z((rng.randint(-5, 5), rng.randint(-5, 5)), 1) for _ in range(2)]
        values = len(f.certificate.realizable_values([z.point for z in U], rest)) if U[0].point != U[1].point else 3
        assert f(U, rest) == values and values in (1, 3)


# -- transcripts


def test_weak_orders_are_fubini_numbers():
    assert [sum(1 for _ in weak_orders(n)) for n in range(5)] == [1, 1, 3, 13, 75]


def test_transcript_single_point():
    cls = Halfspace2DClass()
    f = TranscriptScore(cls, size=1)
    assert f.spec == ScoreSpec(1, 2, 4)
    assert f([((1, 1), 1)], []) == 2
    assert f([((1, 1), 1)], [((1, 1), 1), ((5, 5), -1)]) == 1


def test_transcript_four_points_matches_reference_and_sampling():
    cls = Halfspace2DClass()
    pts = [(0, 0), (3, 1), (1, 4), (-2, 3)]
    found = TranscriptScore(cls).transcripts(pts, [])
    assert found == reference_transcripts(cls, pts, [])
    # frozen from the reference enumeration; by hand: the differences span 4
    # directions (two parallel pairs), so 8 strict orders x 5 cuts, 28 tied
    # transcripts and 2 for w = 0
    assert len(found) == 70
    # every sampled hypothesis realizes a counted transcript
    rng = random.Random(3)
    for _ in range(2000):
        w = (Fraction(rng.randint(-50, 50), 7), Fraction(rng.randint(-50, 50), 7))
        b = Fraction(rng.randint(-80, 80), 9)
        vals = [w[0] * p[0] + w[1] * p[1] - b for p in pts]
        levels = sorted(set(vals))
        order = tuple(tuple(i for i in range(4) if vals[i] == lv) for lv in levels)
        signs = tuple(1 if v >= 0 else -1 for v in vals)
        assert (order, signs) in found


def test_transcript_registry_and_errors():
    cls = Halfspace2DClass()
    assert isinstance(make_score("transcript-halfspace", cls), TranscriptScore)
    with pytest.raises(ValueError):
        make_score("nope", cls)


# -- dependence on the version space only


def test_rect_value_depends_only_on_version_space():
    pts = [(Fraction(i, 2), Fraction(j, 2)) for i in range(1, 4) for j in range(1, 4)]
    inst = FiniteInstance(RectangleClass(2), pts, rectangle_patterns(2, pts))
    f = RectScore(inst.cls)
    by_mask: dict = {}
    rng = random.Random(7)
    for _ in range(400):
        rest = list({rng.choice(inst.labeled) for _ in range(rng.randint(0, 4))})
        if not inst.cls.realizable(rest):
            continue
        m = inst.mask(rest)
        for U in [(z,) for z in inst.labeled]:
            if not inst.cls.realizable(list(U) + rest):
                continue
            key = (U, m)
            v = f(list(U), rest)
            assert by_mask.setdefault(key, v) == v


def test_permuting_and_duplicating_rest():
    cls = Halfspace2DClass()
    f = HalfspaceCertificateScore(cls)
    rest = [Z((0, 1), 1), Z((2, -1), -1), Z((3, 3), 1)]
    U = [Z((1, 0), 1), Z((0, 5), -1)]
    base = f(U, rest)
    for perm in itertools.permutations(rest):
        assert f(U, list(perm) + [rest[0]]) == base
    seg = SegmentScore(TreeOrderClass(ExplicitTree.complete(2, 2)))
    r2 = [Z(1, 1), Z(4, -1)]
    assert seg([Z(3, 1)], r2) == seg([Z(3, 1)], r2[::-1] + r2)


# -- vectorized path


def test_eval_rows_matches_eval():
    rng = random.Random(11)
    tree = ExplicitTree.complete(2, 3)
    cases = [
        (RectScore(RectangleClass(2)), lambda: (rng.randint(0, 6), rng.randint(0, 6)),
         lambda p: 1 if p[0] <= 3 and p[1] <= 4 else -1),
        (SegmentScore(TreeOrderClass(tree)), lambda: rng.choice(tree.nodes),
         lambda v: 1 if tree.precedes(v, 9) else -1),
        (HalfspaceCertificateScore(Halfspace2DClass()), lambda: (rng.randint(-6, 6), rng.randint(-6, 6)),
         lambda p: 1 if p[0] - 2 * p[1] >= 1 else -1),
    ]
    for f, draw, lab in cases:
        for _ in range(25):
            S = list(dict.fromkeys(Z(p, lab(p)) for p in (draw() for _ in range(8))))
            store = f.new_store()
            for i, z in enumerate(S):
                store.put(i, z)
            k = f.spec.k
            rows = np.array(list(itertools.combinations(range(len(S)), k)), dtype=np.int64).reshape(-1, k)
            # each row against V of everything outside the row
            for row in rows:
                rest_ids = [i for i in range(len(S)) if i not in row]
                summary = f.summarize(store, rest_ids)
                got = int(f.eval_rows(row[None, :], summary, store)[0])
                assert got == f([S[i] for i in row], [S[i] for i in rest_ids])
