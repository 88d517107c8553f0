import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmorl.network import (AdamState, TrainBatch, TrainingDiverged, forward,
                              greedy_action, init_network, load_params,
                              network_inputs, nll_and_grads, sample_action,
                              save_params, train_batch)


def random_inputs(params, n, rng):
    x = rng.normal(size=(n, params.input_dim))
    labels = rng.integers(params.n_actions, size=n)
    return x, labels


def finite_difference_grads(params, x, labels, h=1e-6):
    """Central differences over every parameter entry."""
    def loss_at():
        loss, _, _ = nll_and_grads(params, x, labels)
        return loss

    fd_w, fd_b = [], []
    for arrs, out in ((params.weights, fd_w), (params.biases, fd_b)):
        for arr in arrs:
            grad = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                up = loss_at()
                arr[idx] = orig - h
                down = loss_at()
                arr[idx] = orig
                grad[idx] = (up - down) / (2 * h)
                it.iternext()
            out.append(grad)
    return fd_w, fd_b


def relative_gap(analytic, numeric):
    flat_a = np.concatenate([g.ravel() for g in analytic])
    flat_n = np.concatenate([g.ravel() for g in numeric])
    return np.linalg.norm(flat_a - flat_n) / max(np.linalg.norm(flat_a), 1e-12)


class TestInit:
    def test_same_seed_same_parameters(self):
        a = init_network(4, 2, 3, [8], seed=7)
        b = init_network(4, 2, 3, [8], seed=7)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))

    def test_different_seeds_differ(self):
        a = init_network(4, 2, 3, [8], seed=7)
        b = init_network(4, 2, 3, [8], seed=8)
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_shapes(self):
        params = init_network(5, 3, 4, [64], seed=0)
        assert params.weights[0].shape == (5 + 1 + 3, 64)
        assert params.weights[1].shape == (64, 4)
        assert params.biases[1].shape == (4,)

    def test_bad_dims_rejected(self):
        with pytest.raises(ValueError):
            init_network(0, 2, 3, [8], seed=0)


class TestForward:
    def test_distribution_sums_to_one(self, rng):
        params = init_network(4, 2, 5, [16], seed=1)
        probs = forward(params, rng.normal(size=4), 0.5, rng.normal(size=2))
        assert probs.shape == (5,)
        assert np.all(probs >= 0)
        assert abs(probs.sum() - 1.0) < 1e-6

    def test_deterministic(self, rng):
        params = init_network(4, 2, 5, [16], seed=1)
        obs, ret = rng.normal(size=4), rng.normal(size=2)
        assert np.array_equal(forward(params, obs, 0.5, ret),
                              forward(params, obs, 0.5, ret))

    def test_logit_shift_invariance(self, rng):
        params = init_network(4, 2, 5, [16], seed=1)
        obs, ret = rng.normal(size=4), rng.normal(size=2)
        before = forward(params, obs, 0.5, ret)
        params.biases[-1] += 3.7
        after = forward(params, obs, 0.5, ret)
        assert np.allclose(before, after, atol=1e-12)

    def test_shape_mismatch_rejected(self, rng):
        params = init_network(4, 2, 5, [16], seed=1)
        with pytest.raises(ValueError):
            forward(params, rng.normal(size=3), 0.5, rng.normal(size=2))


class TestTrainBatch:
    def test_initial_loss_near_log_n_actions(self, rng):
        params = init_network(6, 2, 4, [32], seed=3)
        x, labels = random_inputs(params, 128, rng)
        loss, _, _ = nll_and_grads(params, x, labels)
        assert abs(loss - np.log(4)) < 0.3

    def test_overfits_one_batch(self, rng):
        params = init_network(4, 2, 3, [32], seed=3)
        batch = TrainBatch(observations=rng.normal(size=(8, 4)),
                           horizons=rng.uniform(size=8),
                           desired_returns=rng.normal(size=(8, 2)),
                           actions=rng.integers(3, size=8))
        losses = [train_batch(params, batch, learning_rate=0.5)
                  for _ in range(800)]
        assert losses[-1] < 0.05
        assert losses[-1] < losses[0]

    def test_adam_also_converges(self, rng):
        params = init_network(4, 2, 3, [32], seed=3)
        adam = AdamState.for_params(params)
        batch = TrainBatch(observations=rng.normal(size=(8, 4)),
                           horizons=rng.uniform(size=8),
                           desired_returns=rng.normal(size=(8, 2)),
                           actions=rng.integers(3, size=8))
        losses = [train_batch(params, batch, 0.01, adam=adam) for _ in range(400)]
        assert losses[-1] < 0.05

    def test_divergence_detected(self, rng):
        params = init_network(4, 2, 3, [8], seed=3)
        params.weights[0][0, 0] = np.nan
        batch = TrainBatch(observations=rng.normal(size=(4, 4)),
                           horizons=rng.uniform(size=4),
                           desired_returns=rng.normal(size=(4, 2)),
                           actions=rng.integers(3, size=4))
        with pytest.raises(TrainingDiverged):
            train_batch(params, batch, 0.1)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            TrainBatch(observations=np.zeros((0, 4)), horizons=np.zeros(0),
                       desired_returns=np.zeros((0, 2)), actions=np.zeros(0, int))

    def test_gradients_match_finite_differences(self, rng):
        for shape in ([4], [8, 8], [16], [6, 4]):
            params = init_network(3, 2, 3, shape, seed=11)
            x, labels = random_inputs(params, 5, rng)
            _, grad_w, grad_b = nll_and_grads(params, x, labels)
            fd_w, fd_b = finite_difference_grads(params, x, labels)
            assert relative_gap(grad_w + grad_b, fd_w + fd_b) < 1e-4


class TestActionSelection:
    def test_single_unmasked_action_always_chosen(self, rng):
        dist = np.array([0.2, 0.3, 0.5])
        mask = np.array([False, True, False])
        assert all(sample_action(dist, rng, mask) == 1 for _ in range(20))

    def test_sampling_frequencies_match_probabilities(self):
        rng = np.random.default_rng(0)
        p = np.array([0.2, 0.5, 0.3])
        n = 100_000
        counts = np.bincount([sample_action(p, rng) for _ in range(n)], minlength=3)
        sigma = np.sqrt(p * (1 - p) * n)
        assert np.all(np.abs(counts - p * n) < 3 * sigma)

    def test_greedy_argmax(self):
        assert greedy_action([0.1, 0.7, 0.2]) == 1

    def test_greedy_tie_breaks_low(self):
        assert greedy_action([0.4, 0.4, 0.2]) == 0

    def test_greedy_respects_mask(self):
        assert greedy_action([0.1, 0.7, 0.2], mask=[True, False, True]) == 2

    def test_all_masked_rejected(self, rng):
        with pytest.raises(ValueError):
            sample_action([0.5, 0.5], rng, mask=[False, False])
        with pytest.raises(ValueError):
            greedy_action([0.5, 0.5], mask=[False, False])

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=40)
    def test_masked_actions_never_sampled(self, seed):
        rng = np.random.default_rng(seed)
        dist = rng.dirichlet(np.ones(6))
        mask = rng.uniform(size=6) < 0.5
        if not mask.any():
            mask[0] = True
        action = sample_action(dist, rng, mask)
        assert mask[action]


class TestCheckpoint:
    def test_roundtrip(self, tmp_path, rng):
        params = init_network(4, 2, 5, [16, 8], seed=9)
        save_params(params, tmp_path / "ckpt.npz")
        loaded = load_params(tmp_path / "ckpt.npz")
        assert loaded.hidden_dims == (16, 8)
        assert loaded.obs_dim == 4 and loaded.n_actions == 5
        obs, ret = rng.normal(size=4), rng.normal(size=2)
        assert np.array_equal(forward(params, obs, 0.3, ret),
                              forward(loaded, obs, 0.3, ret))


def test_network_inputs_concatenation():
    x = network_inputs([1.0, 2.0], 0.5, [3.0, 4.0])
    assert x.tolist() == [1.0, 2.0, 0.5, 3.0, 4.0]
