"""Model containers, marginals, joints, and the JSON descriptor formats."""

import itertools
import math

import numpy as np
import pytest

from specdec import (
    CondDist,
    Dist,
    FullModel,
    MarkovModel,
    ModelPair,
    joint_distribution,
    joint_probability,
    markov_to_full,
    model_from_descriptor,
    model_to_descriptor,
    pair_from_descriptor,
    random_markov_model,
    random_model_pair,
    target_marginals,
)
from specdec.models import trajectory_index

from helpers import random_full_pair


def brute_force_marginal(model: MarkovModel, n: int) -> np.ndarray:
    """Oracle: P(x_n = x) by summing over every path x_0..x_n explicitly."""
    v = model.vocab_size
    out = np.zeros(v)
    for path in itertools.product(range(v), repeat=n + 1):
        mass = model.prompt[path[0]]
        for k in range(1, n + 1):
            mass *= float(model.step(k, path[:k])[path[k]])
        out[path[-1]] += mass
    return out


class TestCondDist:
    def test_rows_are_renormalized_dists(self):
        c = CondDist([[0.5, 0.5], [0.2, 0.8]])
        np.testing.assert_allclose(c.rows.sum(axis=1), [1.0, 1.0])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            CondDist([[0.5, 0.5]])

    def test_rejects_bad_row(self):
        with pytest.raises(ValueError):
            CondDist([[0.9, 0.3], [0.5, 0.5]])

    def test_rows_immutable(self):
        c = CondDist([[0.5, 0.5], [0.2, 0.8]])
        with pytest.raises(ValueError):
            c.rows[0, 0] = 1.0


class TestMarkovModel:
    def test_step_conditions_on_last_token(self):
        model = random_markov_model(3, 2, seed=0)
        row = model.step(2, (0, 1))
        np.testing.assert_array_equal(row, model.steps[1].row(1))

    def test_vocab_mismatch_rejected(self):
        with pytest.raises(ValueError, match="vocabulary"):
            MarkovModel(Dist.uniform(3), [CondDist(np.eye(2))])

    def test_requires_a_step(self):
        with pytest.raises(ValueError, match="horizon"):
            MarkovModel(Dist.uniform(2), [])


class TestTargetMarginals:
    def test_length_is_horizon(self):
        model = random_markov_model(3, 5, seed=1)
        assert len(target_marginals(model)) == 5

    def test_doubly_stochastic_keeps_uniform(self):
        rows = np.array([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2], [0.3, 0.2, 0.5]])
        model = MarkovModel(Dist.uniform(3), [CondDist(rows)] * 4)
        for mu in target_marginals(model):
            np.testing.assert_allclose(mu.probs, [1 / 3] * 3, atol=1e-14)

    def test_matches_brute_force_enumeration(self):
        model = random_markov_model(3, 3, seed=12)
        marginals = target_marginals(model)
        for n in (1, 2, 3):
            np.testing.assert_allclose(
                marginals[n - 1].probs, brute_force_marginal(model, n), atol=1e-13
            )

    def test_rejects_full_model(self):
        with pytest.raises(TypeError):
            target_marginals(markov_to_full(random_markov_model(2, 2, seed=0)))


class TestJointLaw:
    def test_joint_distribution_sums_to_one(self):
        model = random_markov_model(3, 4, seed=2)
        assert joint_distribution(model).sum() == pytest.approx(1.0, abs=1e-12)

    def test_joint_probability_matches_flat_law(self):
        model = random_markov_model(2, 3, seed=3)
        law = joint_distribution(model)
        for tokens in itertools.product(range(2), repeat=3):
            idx = trajectory_index(tokens, 2)
            assert joint_probability(model, tokens) == pytest.approx(law[idx], abs=1e-15)

    def test_trajectory_length_checked(self):
        model = random_markov_model(2, 3, seed=3)
        with pytest.raises(ValueError, match="length"):
            joint_probability(model, (0, 1))

    def test_enumeration_cap(self):
        model = random_markov_model(4, 11, seed=4)  # 4**11 > 1e6
        with pytest.raises(ValueError, match="cap"):
            joint_distribution(model)


class TestFullModel:
    def test_markov_expansion_preserves_law(self):
        model = random_markov_model(3, 3, seed=5)
        full = markov_to_full(model)
        np.testing.assert_allclose(
            joint_distribution(full), joint_distribution(model), atol=1e-14
        )

    def test_expansion_preserves_conditionals(self):
        model = random_markov_model(2, 3, seed=6)
        full = markov_to_full(model)
        for history in [(0,), (1, 0), (0, 1, 1)]:
            np.testing.assert_array_equal(
                full.step(len(history), history), model.step(len(history), history)
            )

    def test_missing_history_rejected(self):
        with pytest.raises(ValueError, match="every history"):
            FullModel(Dist.uniform(2), 2, {(0,): [0.5, 0.5]})

    def test_size_cap_enforced(self):
        with pytest.raises(ValueError, match="cap"):
            FullModel.from_function(Dist.uniform(10), 7, lambda n, h: np.full(10, 0.1))

    def test_histories_enumeration(self):
        full = markov_to_full(random_markov_model(2, 2, seed=7))
        assert list(full.histories(1)) == [(0,), (1,)]
        assert len(list(full.histories(2))) == 4

    def test_non_markov_pair_buildable(self):
        pair = random_full_pair(2, 3, seed=8)
        assert joint_distribution(pair.q).sum() == pytest.approx(1.0, abs=1e-12)


class TestModelPair:
    def test_requires_shared_shapes(self):
        with pytest.raises(ValueError, match="vocabulary"):
            ModelPair(random_markov_model(2, 2, seed=0), random_markov_model(3, 2, seed=0))
        with pytest.raises(ValueError, match="horizon"):
            ModelPair(random_markov_model(2, 2, seed=0), random_markov_model(2, 3, seed=0))

    def test_requires_shared_prompt(self):
        steps = [CondDist([[0.5, 0.5], [0.4, 0.6]])]
        a = MarkovModel(Dist([0.5, 0.5]), steps)
        b = MarkovModel(Dist([0.9, 0.1]), steps)
        with pytest.raises(ValueError, match="prompt"):
            ModelPair(a, b)

    def test_random_pair_is_deterministic(self):
        one = random_model_pair(3, 4, seed=99)
        two = random_model_pair(3, 4, seed=99)
        for n in range(1, 5):
            np.testing.assert_array_equal(one.p.steps[n - 1].rows, two.p.steps[n - 1].rows)
            np.testing.assert_array_equal(one.q.steps[n - 1].rows, two.q.steps[n - 1].rows)
        assert not np.array_equal(one.p.steps[0].rows, one.q.steps[0].rows)


class TestDescriptors:
    def test_explicit_roundtrip(self):
        model = random_markov_model(3, 2, seed=13)
        rebuilt = model_from_descriptor(model_to_descriptor(model))
        np.testing.assert_array_equal(rebuilt.prompt.probs, model.prompt.probs)
        for n in range(2):
            # rebuild renormalizes each row, so allow one ulp of drift
            np.testing.assert_allclose(
                rebuilt.steps[n].rows, model.steps[n].rows, rtol=0.0, atol=1e-15
            )

    def test_generator_form_matches_library_call(self):
        desc = {"generator": "random", "seed": 10, "vocab_size": 7, "horizon": 3}
        built = model_from_descriptor(desc)
        direct = random_markov_model(7, 3, seed=10)
        np.testing.assert_array_equal(built.steps[2].rows, direct.steps[2].rows)
        np.testing.assert_allclose(built.prompt.probs, np.full(7, 1 / 7))

    def test_generator_requires_seed(self):
        with pytest.raises(ValueError, match="seed"):
            model_from_descriptor({"generator": "random", "vocab_size": 2, "horizon": 2})

    def test_unknown_generator_rejected(self):
        with pytest.raises(ValueError, match="unknown generator"):
            model_from_descriptor(
                {"generator": "markov", "seed": 1, "vocab_size": 2, "horizon": 2}
            )

    def test_shape_mismatches_rejected(self):
        desc = model_to_descriptor(random_markov_model(2, 2, seed=1))
        bad = dict(desc, vocab_size=3)
        with pytest.raises(ValueError, match="prompt length"):
            model_from_descriptor(bad)
        bad = dict(desc, horizon=5)
        with pytest.raises(ValueError, match="steps"):
            model_from_descriptor(bad)

    def test_pair_descriptor_explicit_and_generator(self):
        explicit = pair_from_descriptor(
            {
                "p": model_to_descriptor(random_markov_model(2, 2, seed=1)),
                "q": model_to_descriptor(random_markov_model(2, 2, seed=2)),
            }
        )
        assert explicit.vocab_size == 2
        generated = pair_from_descriptor(
            {"generator": "random", "seed": 5, "vocab_size": 3, "horizon": 4}
        )
        direct = random_model_pair(3, 4, seed=5)
        np.testing.assert_array_equal(
            generated.p.steps[0].rows, direct.p.steps[0].rows
        )

    def test_pair_descriptor_requires_both_models(self):
        with pytest.raises(ValueError, match='"p" and "q"'):
            pair_from_descriptor({"p": {"generator": "random", "seed": 1}})

    def test_descriptor_values_survive_json(self):
        import json

        desc = model_to_descriptor(random_markov_model(2, 2, seed=21))
        rebuilt = model_from_descriptor(json.loads(json.dumps(desc)))
        np.testing.assert_array_equal(
            rebuilt.steps[0].rows, model_from_descriptor(desc).steps[0].rows
        )
