from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from disck.coref import Mention, overall_features
from disck.features import UNIT, Cart, Feature, Join, SparseVector, cartesian, dot, join, vector
from disck.model import Model, tfidf_baseline_model
from disck.projection import build_tables, project_cartesian, project_coref_query, project_join, project_qa_query
from disck.qa import AnnotatedText, IdfTable, candidate_vector, compose_qa, extract_tfidf
from strategies import atomic_features, binary_vectors, sparse_vectors, weights

QW_NE = Cart("qword", "ne-type")


def cart_weight(left: Feature, right: Feature, w: float):
    return Feature(Cart(left.key, right.key), (left.value, right.value)), w


class TestBuildTables:
    def test_cartesian_entry(self):
        t = build_tables(Model(vector((QW_NE, ("who", "PERSON"), 2))))
        assert t.cart == {Feature("qword", "who"): ((Feature("ne-type", "PERSON"), 2.0),)}
        assert not t.joinmap

    def test_join_entry(self):
        t = build_tables(Model(vector((Join("ne-gpe", "ne-gpe"), UNIT, 1.5))))
        assert t.joinmap == {"ne-gpe": (("ne-gpe", 1.5),)}

    def test_plain_features_ignored(self):
        t = build_tables(Model(vector(("word", "x", 1), ("lat", "y", -2))))
        assert not t.cart and not t.joinmap

    def test_rebuild_identical(self):
        m = Model(vector((QW_NE, ("who", "PERSON"), 2), (QW_NE, ("who", "GPE"), -1), (Join("a", "b"), UNIT, 3)))
        assert build_tables(m) == build_tables(m)

    def test_top_m_truncates(self):
        m = Model(vector((QW_NE, ("who", "PERSON"), 2), (QW_NE, ("who", "GPE"), -3), (QW_NE, ("who", "ORG"), 1)))
        t = build_tables(m, top_m=2)
        assert {f.value for f, _ in t.cart[Feature("qword", "who")]} == {"PERSON", "GPE"}


class TestProjectCartesian:
    def test_example(self):
        t = build_tables(Model(vector((QW_NE, ("who", "PERSON"), 2))))
        assert project_cartesian(t, vector(("qword", "who", 1))) == vector(("ne-type", "PERSON", 2))

    def test_no_hits(self):
        t = build_tables(Model(vector((QW_NE, ("who", "PERSON"), 2))))
        assert project_cartesian(t, vector(("qword", "when", 1))) == SparseVector()


class TestProjectJoin:
    def test_weight_product(self):
        t = build_tables(Model(vector((Join("ne-gpe", "ne-gpe"), UNIT, 1.5))))
        assert project_join(t, vector(("ne-gpe", "Egypt", 0.8))) == vector(("ne-gpe", "Egypt", 0.8 * 1.5))

    def test_value_carried_across_namespaces(self):
        t = build_tables(Model(vector((Join("ne-norp", "ne-language"), UNIT, 1.0))))
        assert project_join(t, vector(("ne-norp", "French", 1))) == vector(("ne-language", "French", 1))

    def test_empty(self):
        t = build_tables(Model(vector((Join("ne-gpe", "ne-gpe"), UNIT, 1.5))))
        assert project_join(t, SparseVector()) == SparseVector()


cart_models = st.lists(st.tuples(atomic_features, atomic_features, weights), max_size=20).map(
    lambda triples: Model(SparseVector(cart_weight(l, r, w) for l, r, w in triples)))
join_models = st.lists(st.tuples(atomic_features, atomic_features, weights), max_size=20).map(
    lambda triples: Model(SparseVector((Feature(Join(l.key, r.key), UNIT), w) for l, r, w in triples)))


class TestIdentities:
    @given(cart_models, sparse_vectors, sparse_vectors)
    def test_cartesian_identity(self, model, f, g):
        lhs = dot(project_cartesian(build_tables(model), f), g)
        assert lhs == pytest.approx(dot(model.weights, cartesian(f, g)), abs=1e-9)

    @given(join_models, sparse_vectors, binary_vectors)
    def test_join_identity(self, model, f, g):
        lhs = dot(project_join(build_tables(model), f), g)
        assert lhs == pytest.approx(dot(model.weights, join(f, g)), abs=1e-9)

    @given(cart_models, sparse_vectors)
    def test_support_bounded_by_fan_out(self, model, f):
        t = build_tables(model)
        fan_out = sum(len(t.cart.get(feat, ())) for feat in f)
        assert len(project_cartesian(t, f)) <= fan_out


IDF = IdfTable(4, {"egypt": 2, "continent": 1, "africa": 1})


def question():
    return AnnotatedText.build("q", "What continent is Egypt on ?".split(), "WP NN VBZ NNP IN .".split(), [(3, 4, "GPE")])


def passage():
    return AnnotatedText.build("p", "Egypt is in Africa".split(), "NNP VBZ IN NNP".split(), [(0, 1, "GPE"), (3, 4, "LOC")])


class TestQueryProjection:
    def test_continent_question_namespaces(self):
        wh_lat_ne = Cart(Cart("qword", "lat"), "ne-type")
        model = Model(vector(
            (wh_lat_ne, (("what", "continent"), "LOC"), 2.0),
            (Join("ne-gpe", "ne-gpe"), UNIT, 1.0),
            (Join("word", "word"), UNIT, 0.5),
        ))
        t = project_qa_query(build_tables(model), question(), IDF)
        assert {f.key for f in t} == {"ne-type", "ne-gpe", "word"}
        assert t[Feature("ne-gpe", "Egypt")] == 1.0
        assert t[Feature("ne-type", "LOC")] == 2.0

    def test_empty_model(self):
        assert project_qa_query(build_tables(Model(SparseVector())), question(), IDF) == SparseVector()

    def test_baseline_reduces_to_tfidf(self):
        w = 0.7
        model = Model(vector((Join("word", "word"), UNIT, w)))
        t = project_qa_query(build_tables(model), question(), IDF)
        tfidf = extract_tfidf(question(), IDF)
        assert t == SparseVector((f, w * x) for f, x in tfidf.items())
        assert project_qa_query(build_tables(tfidf_baseline_model()), question(), IDF) == tfidf

    def test_qa_equivalence_on_example(self):
        model = Model(vector(
            (Cart(Cart("qword", "lat"), "ne-type"), (("what", "continent"), "LOC"), 2.0),
            (Cart(Cart("qword", "lat"), "word"), (("what", "continent"), "africa"), -0.25),
            (Join("ne-gpe", "ne-gpe"), UNIT, 1.0),
            (Join("word", "word"), UNIT, 0.5),
        ))
        lhs = dot(project_qa_query(build_tables(model), question(), IDF), candidate_vector(passage()))
        assert lhs == pytest.approx(dot(model.weights, compose_qa(question(), passage(), IDF)), abs=1e-12)


class TestCorefProjection:
    tehran = Mention("m", "Tehran", "GPE")

    def test_identity_model(self):
        f = overall_features(self.tehran)
        keys = {feat.key for feat in f}
        model = Model(SparseVector.unit(Feature(Join(k, k), UNIT) for k in keys))
        assert project_coref_query(build_tables(model), self.tehran) == f

    def test_empty_model(self):
        assert project_coref_query(build_tables(Model(SparseVector())), self.tehran) == SparseVector()

    def test_trigram_only_model(self):
        tl = Cart("type", "l3g")
        model = Model(vector((Join(tl, tl), UNIT, 2.0)))
        out = project_coref_query(build_tables(model), self.tehran)
        assert out == SparseVector(
            (Feature(tl, ("GPE", g)), 2.0) for g in ("teh", "ehr", "hra", "ran"))
