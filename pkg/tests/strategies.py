"""Shared hypothesis strategies and random generators for the test suite."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from disck.features import UNIT, Cart, Feature, Join, SparseVector

NAMESPACES = ("word", "ne-gpe", "ne-person", "qword", "lat", "ne-type", "l3g")
# values include the delimiter characters so escaping is always exercised
VALUES = ("dog", "cat", "Egypt", "how many", "a:b", "x*y", "p|q", "t~u", "50%", "(paren)", "∅")

namespaces = st.sampled_from(NAMESPACES)
values = st.sampled_from(VALUES)
weights = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False).filter(lambda w: w != 0)

atomic_features = st.builds(Feature, namespaces, values)


def _composite(children):
    def cart(pair):
        (k1, v1), (k2, v2) = pair
        return Feature(Cart(k1, k2), (v1, v2))

    def join(pair):
        (k1, _), (k2, _) = pair
        return Feature(Join(k1, k2), UNIT)

    pairs = st.tuples(children, children)
    return pairs.map(cart) | pairs.map(join)


features = st.recursive(atomic_features, _composite, max_leaves=4)

sparse_vectors = st.dictionaries(atomic_features, weights, max_size=8).map(SparseVector)
binary_vectors = st.lists(atomic_features, max_size=8).map(SparseVector.unit)
any_vectors = st.dictionaries(features, weights, max_size=8).map(SparseVector)


def random_atomic(rng: random.Random, pool: int = 30) -> Feature:
    return Feature(rng.choice(NAMESPACES), f"v{rng.randrange(pool)}")


def random_sparse(rng: random.Random, max_size: int = 50, pool: int = 30) -> SparseVector:
    return SparseVector((random_atomic(rng, pool), rng.uniform(-2, 2)) for _ in range(rng.randint(0, max_size)))


def random_binary(rng: random.Random, max_size: int = 50, pool: int = 30) -> SparseVector:
    return SparseVector.unit(random_atomic(rng, pool) for _ in range(rng.randint(0, max_size)))
