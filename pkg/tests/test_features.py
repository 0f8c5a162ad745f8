from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disck.errors import FeatureFormatError, NormalizationError
from disck.features import (
    EMPTY,
    UNIT,
    Cart,
    Feature,
    Join,
    SparseVector,
    add,
    cartesian,
    dot,
    join,
    l2_norm,
    l2_normalize,
    namespace_of,
    parse_feature,
    scale,
    serialize,
    vector,
)
from strategies import any_vectors, binary_vectors, features, sparse_vectors


def close(f: SparseVector, g: SparseVector, tol: float = 1e-12) -> bool:
    keys = set(f) | set(g)
    return all(abs(f.get(k) - g.get(k)) <= tol for k in keys)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


class TestSerialization:
    def test_atomic(self):
        assert serialize(Feature("qword", "how many")) == "qword:how many"

    def test_cartesian(self):
        f = Feature(Cart("qword", "ne-type"), ("who", "PERSON"))
        assert serialize(f) == "qword*ne-type:who|PERSON"

    def test_join(self):
        assert serialize(Feature(Join("ne-gpe", "ne-gpe"), UNIT)) == "ne-gpe~ne-gpe:1"

    def test_nested_composite_is_parenthesized(self):
        f = Feature(Cart(Cart("qword", "lat"), "ne-type"), (("who", EMPTY), "PERSON"))
        text = serialize(f)
        assert text == "(qword*lat)*ne-type:(who|∅)|PERSON"
        assert parse_feature(text) == f

    def test_nested_join_key(self):
        f = Feature(Join(Cart("type", "l3g"), Cart("type", "l3g")), UNIT)
        assert serialize(f) == "(type*l3g)~(type*l3g):1"
        assert parse_feature("(type*l3g)~(type*l3g):1") == f

    def test_delimiters_escaped(self):
        f = Feature("word", "a:b*c|d~e%f(g)")
        text = serialize(f)
        assert text == "word:a%3Ab%2Ac%7Cd%7Ee%25f%28g%29"
        assert parse_feature(text) == f

    @pytest.mark.parametrize("text", [
        "noseparator", "bad ns:x", "a*b:x", "a~b:2", "a:x|y", "(a):x", "a*b*c:x|y|z", "((a*b):x", "a:x:y",
    ])
    def test_malformed_rejected(self, text):
        with pytest.raises(FeatureFormatError):
            parse_feature(text)

    def test_join_requires_unit(self):
        with pytest.raises(FeatureFormatError):
            serialize(Feature(Join("a", "b"), "x"))

    def test_namespace_of(self):
        assert namespace_of(Cart(Cart("qword", "lat"), "word")) == "(qword*lat)*word"

    @given(features)
    def test_round_trip(self, f):
        assert parse_feature(serialize(f)) == f

    @given(features, features)
    def test_injective(self, f, g):
        if f != g:
            assert serialize(f) != serialize(g)


# ---------------------------------------------------------------------------
# sparse vectors and operators
# ---------------------------------------------------------------------------


class TestSparseVector:
    def test_zero_entries_dropped(self):
        v = vector(("a", "x", 1.0), ("a", "x", -1.0), ("b", "y", 0.0))
        assert len(v) == 0

    def test_duplicates_sum(self):
        assert vector(("a", "x", 1.0), ("a", "x", 2.0))[Feature("a", "x")] == 3.0

    @given(any_vectors)
    def test_iteration_sorted(self, v):
        texts = [serialize(f) for f in v]
        assert texts == sorted(texts)
        assert all(w != 0 for _, w in v.items())

    @given(any_vectors)
    def test_dict_round_trip(self, v):
        assert SparseVector.from_dict(v.to_dict()) == v


class TestCartesian:
    def test_worked_example(self):
        out = cartesian(vector(("qword", "who", 1)), vector(("ne-type", "PERSON", 1)))
        assert out == {Feature(Cart("qword", "ne-type"), ("who", "PERSON")): 1.0}

    def test_empty_operand(self):
        assert cartesian(SparseVector(), vector(("word", "x", 1))) == SparseVector()

    def test_weighted_left(self):
        out = cartesian(vector(("a", "u", 0.5)), vector(("b", "v", 1), ("b", "w", 1)))
        assert out == {
            Feature(Cart("a", "b"), ("u", "v")): 0.5,
            Feature(Cart("a", "b"), ("u", "w")): 0.5,
        }

    @given(sparse_vectors, sparse_vectors)
    def test_size_is_product(self, f, g):
        if all(wf * wg != 0 for wf in f.values() for wg in g.values()):
            assert len(cartesian(f, g)) == len(f) * len(g)

    @given(sparse_vectors, binary_vectors)
    def test_binary_right_keeps_left_weight(self, f, g):
        out = cartesian(f, g)
        for (key, (vi, _)), w in out.items():
            assert w == f[Feature(key.left, vi)]

    @given(sparse_vectors, sparse_vectors, sparse_vectors)
    def test_bilinear(self, f, g, h):
        assert close(cartesian(f, g + h), cartesian(f, g) + cartesian(f, h), 1e-9)
        assert close(cartesian(f + g, h), cartesian(f, h) + cartesian(g, h), 1e-9)


class TestJoin:
    def test_worked_example(self):
        out = join(vector(("ne-norp", "French", 1)), vector(("ne-language", "French", 1)))
        assert out == {Feature(Join("ne-norp", "ne-language"), UNIT): 1.0}

    def test_no_value_match(self):
        assert join(vector(("ne-gpe", "Egypt", 1)), vector(("ne-person", "Smith", 1))) == SparseVector()

    def test_weights_accumulate(self):
        out = join(vector(("word", "dog", 0.3), ("word", "cat", 0.4)), vector(("word", "dog", 1), ("word", "cat", 1)))
        assert out.keys() == {Feature(Join("word", "word"), UNIT)}
        assert out[Feature(Join("word", "word"), UNIT)] == pytest.approx(0.7, abs=1e-15)

    @given(sparse_vectors, binary_vectors)
    def test_unit_values(self, f, g):
        assert all(feat.value == UNIT for feat in join(f, g))

    @given(sparse_vectors, sparse_vectors, sparse_vectors)
    def test_bilinear(self, f, g, h):
        assert close(join(f, g + h), join(f, g) + join(f, h), 1e-9)
        assert close(join(f + g, h), join(f, h) + join(g, h), 1e-9)


class TestArithmetic:
    def test_add_examples(self):
        assert add(vector(("a", "x", 1)), vector(("b", "y", 2))) == vector(("a", "x", 1), ("b", "y", 2))
        assert add(vector(("a", "x", 1)), vector(("a", "x", -1))) == SparseVector()
        assert add(vector(("a", "x", 1)), SparseVector()) == vector(("a", "x", 1))

    def test_dot_examples(self):
        assert dot(vector(("a", "x", 2)), vector(("a", "x", 3))) == 6
        assert dot(vector(("a", "x", 2)), vector(("b", "y", 3))) == 0
        assert dot(vector(("a", "x", 1), ("b", "y", 2)), vector(("a", "x", 0.5), ("b", "y", 0.25))) == 1.0

    @given(sparse_vectors, sparse_vectors)
    def test_dot_symmetric(self, f, g):
        assert dot(f, g) == dot(g, f)

    @given(sparse_vectors, sparse_vectors, sparse_vectors, st.floats(-5, 5))
    def test_dot_linear(self, f, g, h, c):
        assert dot(f, g + h) == pytest.approx(dot(f, g) + dot(f, h), abs=1e-9)
        assert dot(scale(f, c), g) == pytest.approx(c * dot(f, g), abs=1e-9)


class TestNormalize:
    def test_examples(self):
        out = l2_normalize(vector(("w", "a", 3), ("w", "b", 4)))
        assert out[Feature("w", "a")] == pytest.approx(0.6, abs=1e-15)
        assert out[Feature("w", "b")] == pytest.approx(0.8, abs=1e-15)
        assert l2_normalize(vector(("w", "a", 1))) == vector(("w", "a", 1))

    def test_empty_raises(self):
        with pytest.raises(NormalizationError):
            l2_normalize(SparseVector())

    @given(sparse_vectors)
    @settings(max_examples=200)
    def test_unit_norm_and_idempotent(self, f):
        if not f:
            return
        once = l2_normalize(f)
        assert math.isclose(l2_norm(once), 1.0, abs_tol=1e-12)
        assert close(l2_normalize(once), once, 1e-12)
