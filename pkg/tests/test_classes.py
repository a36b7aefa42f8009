import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from injectlab.classes import (
    DomainError, ExplicitTree, FiniteClass, Halfspace2DClass, HardTreePathClass, PrefixTree,
    PreconditionError, RectangleClass, StructureError, TreeOrderClass, discretize, forced_label,
    halfspace_realizable, load_class, rect_realizable, rectangle_patterns, relabel_vc1, tree_realizable,
)
from injectlab.core import LabeledExample as Z


def _labeled_sets(points, size):
    labeled = [Z(p, y) for p in points for y in (1, -1)]
    for n in range(size + 1):
        for S in itertools.combinations(labeled, n):
            if len({z.point for z in S}) == n:
                yield list(S)


# -- rectangles


def test_rect_examples():
    assert rect_realizable([((1, 1), 1), ((2, 0), -1)])
    assert not rect_realizable([((2, 2), 1), ((1, 1), -1)])
    assert rect_realizable([], d=2)


def test_rect_domain_errors():
    cls = RectangleClass(2)
    with pytest.raises(DomainError):
        cls.check_point((-1, 0))
    with pytest.raises(DomainError):
        cls.check_point((1, 2, 3))


def test_rect_forced_labels():
    cls = RectangleClass(1)
    assert cls.forced_label([((3,), -1)], (5,)) == -1
    assert cls.forced_label([], (0,)) == 1
    assert RectangleClass(3).forced_label([], (0, 0, 0)) == 1
    assert cls.forced_label([((3,), -1)], (1,)) is None
    assert cls.forced_label([((3,), 1)], (2,)) == 1


def test_forced_label_needs_realizable_set():
    with pytest.raises(PreconditionError):
        forced_label(RectangleClass(1), [((1,), -1), ((2,), 1)], (0,))


def test_rect_closed_form_matches_enumeration():
    pts = [(Fraction(i, 2), Fraction(j, 2)) for i in (0, 1, 2) for j in (0, 1, 3)]
    table = rectangle_patterns(2, pts)
    cls = RectangleClass(2)
    for S in _labeled_sets(pts[:6], 4):
        assert cls.realizable(S) == table.realizable(S), S


# -- trees


@pytest.fixture
def tree():
    # 0 -> 1, 2 ; 1 -> 3, 4 ; 2 -> 5, 6 ; 3 -> 7 ...
    return ExplicitTree.complete(2, 3)


def test_tree_examples(tree):
    a, b, c = 1, 3, 4  # b child of a, c sibling of b
    assert tree_realizable([(a, 1), (b, 1), (c, -1)], tree)
    assert not tree_realizable([(b, 1), (c, 1)], tree)
    assert tree_realizable([], tree)


def test_tree_empty_segment_flag(tree):
    root_negative = [(0, -1)]
    assert tree_realizable(root_negative, tree, includes_empty_segment=True)
    assert not tree_realizable(root_negative, tree, includes_empty_segment=False)


def test_tree_unknown_node(tree):
    with pytest.raises(DomainError):
        TreeOrderClass(tree).check_point(99)


@pytest.mark.parametrize("empty", [True, False])
def test_tree_closed_form_matches_enumeration(tree, empty):
    cls = TreeOrderClass(tree, empty)
    table = discretize(cls, tree.nodes, cls.hypotheses(tree.nodes))
    for S in _labeled_sets(tree.nodes[:6], 4):
        assert cls.realizable(S) == table.realizable(S), S


def test_tree_tracker_agrees_with_realizable(tree):
    cls = TreeOrderClass(tree)
    for S in _labeled_sets([0, 1, 3, 4, 2], 3):
        if not cls.realizable(S):
            continue
        tr = cls.tracker()
        for z in S:
            tr.add(z)
        for x in tree.nodes:
            for y in (1, -1):
                assert tr.admits(Z(x, y)) == cls.realizable(S + [Z(x, y)]), (S, x, y)


def test_prefix_tree():
    t = PrefixTree(3, max_depth=2)
    assert t.precedes((), (1, 2)) and t.precedes((1,), (1, 2)) and not t.precedes((2,), (1, 2))
    assert t.children((1,)) == [(1, 0), (1, 1), (1, 2)]
    assert not t.contains((0, 0, 0))


def test_hard_tree_path_class():
    t = PrefixTree(2, max_depth=3)
    cls = HardTreePathClass(t)
    leaves = [v for v in itertools.product(range(2), repeat=3)]
    nodes = [()] + [v for d in (1, 2, 3) for v in itertools.product(range(2), repeat=d)]
    table = discretize(cls, nodes, [lambda x, leaf=leaf: cls.label(leaf, x) for leaf in leaves])
    for S in _labeled_sets(nodes[:7], 3):
        assert cls.realizable(S) == table.realizable(S), S


# -- halfspaces


def test_halfspace_examples():
    assert halfspace_realizable([((0, 0), 1), ((1, 0), -1)])
    assert not halfspace_realizable([((0, 0), 1), ((2, 0), 1), ((1, 0), -1)])
    assert halfspace_realizable([])


def test_halfspace_sign_zero_is_positive():
    assert Halfspace2DClass.label((1, 0), 2, (2, 5)) == 1
    assert Halfspace2DClass.label((1, 0), 2, (1, 5)) == -1


def test_unpinned_empty_history_forces_nothing():
    cls = Halfspace2DClass()
    for x in [(0, 0), (3, -7), (Fraction(1, 3), 2)]:
        assert cls.forced_label([], x) is None


def test_pin_constraints():
    cls = Halfspace2DClass(pin=((0, 1), (0, -1)))
    # a point strictly between the pins along the segment can take either label
    assert cls.forced_label([], (0, 0)) is None
    # same side as s_+ beyond it on the line: convexity forces +1 only with more data
    assert cls.realizable([((0, 2), 1)])
    assert not cls.realizable([((0, 1), -1)])
    assert not cls.realizable([((0, -1), 1)])


def test_pin_points_must_differ():
    with pytest.raises(ValueError):
        Halfspace2DClass(pin=((1, 1), (1, 1)))


def test_halfspace_tracker_matches_fm():
    import random
    rng = random.Random(2)
    for pin in (None, ((0, 5), (0, -5))):
        cls = Halfspace2DClass(pin=pin)
        for _ in range(40):
            pts = list({(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(5)} - set(pin or ()))
            w, b = (rng.randint(-2, 2), 1), rng.randint(-2, 2)
            S = [Z(p, cls.label(w, b, p)) for p in pts[:-1]]
            if not cls.realizable(S):
                continue
            tr = cls.tracker()
            for z in S:
                tr.add(z)
            for y in (1, -1):
                assert tr.admits(Z(pts[-1], y)) == cls.realizable(S + [Z(pts[-1], y)])


# -- finite classes and relabeling


def test_finite_class_dedups_rows():
    fc = FiniteClass(["a", "b"], [[1, 1], [1, -1], [1, 1]])
    assert len(fc.hypotheses) == 2
    assert fc.realizable([("a", 1), ("b", -1)])
    assert not fc.realizable([("a", -1)])
    assert fc.label_of(1, "b") == -1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.sampled_from([1, -1])), max_size=5))
def test_realizability_is_monotone_under_subsets(S):
    cls = RectangleClass(1)
    S = [((x,), y) for x, y in S]
    if cls.realizable(S):
        for i in range(len(S)):
            assert cls.realizable(S[:i] + S[i + 1:])


def test_forced_label_consistency_rect():
    cls = RectangleClass(2)
    pts = [(i, j) for i in range(3) for j in range(3)]
    for S in _labeled_sets(pts[:4], 3):
        if not cls.realizable(S):
            continue
        for x in pts:
            f = cls.forced_label(S, x)
            if f is not None:
                assert cls.realizable(S + [Z(x, f)]) and not cls.realizable(S + [Z(x, -f)])


def _chain_class():
    pts = [0, 1, 2, 3, 4]
    rows = [[1 if p <= t else -1 for p in pts] for t in range(-1, 5)]
    return pts, FiniteClass(pts, rows)


def test_relabel_with_all_minus_reference_is_the_tree():
    pts, fc = _chain_class()
    tree = ExplicitTree({0: None, 1: 0, 2: 1, 3: 2, 4: 3})
    wrapped = relabel_vc1(fc, lambda x: -1, TreeOrderClass(tree))
    plain = TreeOrderClass(tree)
    for S in _labeled_sets(pts, 4):
        assert wrapped.realizable(S) == plain.realizable(S) == fc.realizable(S)


def test_relabel_reference_in_class_gives_empty_segment():
    pts, fc = _chain_class()
    r = lambda x: fc.label_of(3, x)
    tree = ExplicitTree({0: None, 1: 0, 2: 1, 3: 2, 4: 3})
    wrapped = relabel_vc1(None, r, TreeOrderClass(tree))
    assert all(wrapped.relabel(z).label == -1 for z in fc.graph(3))


def test_relabel_wrong_order_is_a_structure_error():
    pts, fc = _chain_class()
    reversed_tree = ExplicitTree({4: None, 3: 4, 2: 3, 1: 2, 0: 1})
    wrapped = relabel_vc1(fc, lambda x: -1, TreeOrderClass(reversed_tree))
    with pytest.raises(StructureError):
        for S in _labeled_sets(pts, 2):
            wrapped.realizable(S)


def test_load_class(tmp_path):
    finite = tmp_path / "f.json"
    finite.write_text(json.dumps({"points": [[0, 1], [1, 0]], "hypotheses": [[1, -1], [-1, -1]]}))
    fc = load_class(finite)
    assert fc.realizable([((0, 1), 1), ((1, 0), -1)])
    tree = load_class({"parent": {"b": "a", "c": "a"}, "root": "a", "includes_empty_segment": False})
    assert tree.realizable([("b", 1)]) and not tree.realizable([("b", 1), ("c", 1)])
    with pytest.raises(ValueError):
        load_class({"nope": 1})
