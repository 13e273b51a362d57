"""
Tests for optimizers, schedules, the memory accountant and the training loops.
"""

import math

import numpy as np
import pytest

from local_learning.components.blocks.layers import Linear, ReLU
from local_learning.components.blocks.model_file import mlp_description
from local_learning.components.blocks.network import build_network
from local_learning.components.cost.verify import verify_against_model
from local_learning.components.data.dataset import Dataset
from local_learning.components.tensor import Tensor
from local_learning.components.trainer.loop import (
    METRIC_COLUMNS,
    activation_trace,
    check_divergence,
    evaluate,
    final_state,
    fit,
    metrics_frame,
    write_metrics_csv,
)
from local_learning.components.trainer.memory import MemoryAccountant
from local_learning.components.trainer.optim import (
    Optimizer,
    OptimizerState,
    ParamGroup,
    adam_step,
    sgd_nesterov_step,
)
from local_learning.components.trainer.schedule import cosine_lr, epoch_lr
from local_learning.components.trainer.tools import learning_rate_schedule, read_metrics
from local_learning.config import TrainConfig
from local_learning.errors import ConfigurationError, DivergenceError, InternalError
from local_learning.seeding import RandomStreams


def square_network(width, K, seed=0):
    """Eight linear + relu pairs of one width; the class count equals the width."""
    rng = np.random.default_rng(seed)
    layers = []
    for _ in range(8):
        layers += [Linear(width, width, rng), ReLU()]
    return build_network(layers, K, width, TrainConfig(), RandomStreams(seed), (width,))


# =============================================================================
# Optimizers
# =============================================================================

class TestOptimizers:
    def test_nesterov_without_momentum_is_plain_sgd(self, rng):
        param, grad = rng.standard_normal(5), rng.standard_normal(5)
        state = OptimizerState()
        first = sgd_nesterov_step(param, grad, state, 0.1, momentum=0.0, weight_decay=0.0)
        np.testing.assert_array_equal(first, param - 0.1 * grad)
        second = sgd_nesterov_step(first, grad, state, 0.1, momentum=0.0, weight_decay=0.0)
        np.testing.assert_array_equal(second, first - 0.1 * grad)

    def test_nesterov_momentum_hand_values(self):
        state = OptimizerState()
        p = sgd_nesterov_step(np.array([1.0]), np.array([1.0]), state, 0.1, momentum=0.5, weight_decay=0.0)
        assert p[0] == pytest.approx(1.0 - 0.1 * 1.5)
        p = sgd_nesterov_step(p, np.array([1.0]), state, 0.1, momentum=0.5, weight_decay=0.0)
        assert state.velocity[0] == pytest.approx(1.5)
        assert p[0] == pytest.approx(0.85 - 0.1 * 1.75)

    def test_adam_first_step_moves_by_rate(self):
        state = OptimizerState()
        p = adam_step(np.array([1.0, 1.0]), np.array([0.3, -2.0]), state, 0.01,
                      beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0)
        np.testing.assert_allclose(p, [0.99, 1.01], atol=1e-9)
        assert state.step == 1

    def test_weight_decay_with_zero_gradient(self):
        state = OptimizerState()
        p = sgd_nesterov_step(np.array([2.0]), np.array([0.0]), state, 0.1, momentum=0.9, weight_decay=0.5)
        assert p[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)

    def test_buffer_shape_mismatch(self):
        state = OptimizerState(velocity=np.zeros(3))
        with pytest.raises(InternalError):
            sgd_nesterov_step(np.zeros(2), np.zeros(2), state, 0.1, 0.9, 0.0)

    def test_groups_with_own_rates(self):
        a = Tensor(np.array([1.0]), requires_grad=True)
        b = Tensor(np.array([1.0]), requires_grad=True)
        skipped = Tensor(np.array([1.0]), requires_grad=True)
        a.grad, b.grad = np.array([1.0]), np.array([1.0])
        Optimizer(momentum=0.0, weight_decay=0.0).step(
            [ParamGroup("a", [a], 0.1), ParamGroup("b", [b, skipped], 0.3)]
        )
        assert a.data[0] == pytest.approx(0.9)
        assert b.data[0] == pytest.approx(0.7)
        assert skipped.data[0] == 1.0

    def test_group_weight_decay_override(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        p.grad = np.array([0.0])
        Optimizer(momentum=0.0, weight_decay=0.5).step([ParamGroup("scale", [p], 0.1, weight_decay=0.0)])
        assert p.data[0] == 1.0


# =============================================================================
# Schedules
# =============================================================================

class TestSchedule:
    def test_endpoints(self):
        assert cosine_lr(0, 10, 0.05) == 0.05
        assert cosine_lr(10, 10, 0.05) == pytest.approx(0.0, abs=1e-18)

    def test_midpoint(self):
        assert cosine_lr(5, 10, 0.05) == pytest.approx(0.025, abs=1e-15)

    def test_zero_horizon(self):
        with pytest.raises(ConfigurationError):
            cosine_lr(0, 0, 0.05)

    def test_step_outside_horizon(self):
        with pytest.raises(ConfigurationError):
            cosine_lr(11, 10, 0.05)

    def test_constant_schedule(self):
        assert [epoch_lr("constant", t, 4, 0.1) for t in range(4)] == [0.1] * 4

    def test_schedule_tool(self):
        result = learning_rate_schedule(0.1, 4)
        assert result["status"] == "success"
        assert result["rates"][0] == 0.1
        assert all(a > b for a, b in zip(result["rates"], result["rates"][1:]))


# =============================================================================
# Memory accounting
# =============================================================================

class TestMemoryAccountant:
    def test_conservation(self):
        accountant = MemoryAccountant()
        accountant.account("block0", 5)
        accountant.account("head0", 3)
        accountant.account("projection", 7)
        accountant.release_all()
        assert accountant.live_scalars == 0
        assert accountant.peak == 8
        assert accountant.surplus_peak == 7

    def test_over_release(self):
        accountant = MemoryAccountant()
        accountant.account("block0", 2)
        with pytest.raises(InternalError):
            accountant.account("block0", -3)

    def test_reset_peak(self):
        accountant = MemoryAccountant()
        accountant.account("block0", 4)
        accountant.release_phase("block0")
        accountant.reset_peak()
        assert accountant.peak == 0

    @pytest.mark.parametrize("K", [2, 4])
    def test_memory_law(self, K):
        width, n = 16, 10
        network = square_network(width, K)
        x = np.random.default_rng(1).standard_normal((n, width))
        A = n * width
        local = activation_trace(network, x, mode="local")
        e2e = activation_trace(network, x, mode="e2e")
        assert e2e.peak == 8 * A
        assert local.peak == (8 // K) * A + A + width
        assert local.peak / e2e.peak == pytest.approx(1.0 / K + (1.0 + width / A) / 8, rel=1e-12)

    def test_memory_law_in_cost_check(self):
        network = square_network(16, 4)
        x = np.random.default_rng(1).standard_normal((10, 16))
        report = verify_against_model(network, x)
        assert report.measured["mem_ratio"] == pytest.approx(report.measured["mem_ratio_formula"], rel=1e-12)


# =============================================================================
# Training loops
# =============================================================================

class TestTraining:
    def run(self, toy_data, mode="sequential", seed=4):
        train = TrainConfig(eta_l=0.05, epochs=2, batch_size=8, seed=seed)
        description = mlp_description([3, 8, 8, 2], K=3)
        streams = RandomStreams(seed)
        layers = description.build_layers(streams.generator("model-init"))
        network = build_network(layers, 3, 2, train, streams, (3,))
        result = fit(network, toy_data(n=40), toy_data(n=16, seed=8), train, streams, mode=mode, timing=False)
        return network, result

    def test_repeat_runs_are_identical(self, toy_data):
        first_net, first = self.run(toy_data)
        second_net, second = self.run(toy_data)
        assert first.to_frame().equals(second.to_frame())
        assert first.test_acc == second.test_acc
        a, b = final_state(first_net), final_state(second_net)
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_rows_per_epoch_and_block(self, toy_data):
        _, result = self.run(toy_data)
        frame = result.to_frame()
        assert list(frame.columns) == METRIC_COLUMNS
        assert frame[["epoch", "block"]].values.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]
        assert (frame["wall_ms"] == 0.0).all()
        assert (frame["peak_scalars"] > 0).all()

    def test_end_to_end_rows(self, toy_data):
        _, result = self.run(toy_data, mode="e2e")
        frame = result.to_frame()
        assert frame["block"].tolist() == [0, 0]
        assert 0.0 <= result.test_acc <= 1.0

    def test_metrics_csv(self, toy_data, tmp_path):
        _, result = self.run(toy_data)
        path = str(tmp_path / "metrics.csv")
        write_metrics_csv(result.rows, path)
        loaded = read_metrics(path)
        assert loaded["status"] == "success"
        assert loaded["epochs"] == 2
        assert len(loaded["final"]) == 3

    def test_read_metrics_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("epoch,loss\n0,1.0\n")
        assert read_metrics(str(path))["status"] == "error"

    def test_empty_frame_keeps_columns(self):
        assert list(metrics_frame([]).columns) == METRIC_COLUMNS

    def test_evaluate_empty_split(self, mlp_network):
        network = mlp_network([3, 8, 2])
        empty = Dataset(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), 2)
        assert evaluate(network, empty) is None

    @pytest.mark.parametrize("loss", [math.nan, math.inf, 2e6])
    def test_divergence(self, loss):
        with pytest.raises(DivergenceError):
            check_divergence(loss, 1, 3)

    def test_ordinary_loss_passes(self):
        check_divergence(0.7, 0, 0)

    def test_huge_rate_diverges(self, mlp_network, toy_data, streams):
        train = TrainConfig(eta_l=1e8, epochs=3, batch_size=4)
        network = mlp_network([3, 8, 8, 2], train=train)
        with np.errstate(all="ignore"), pytest.raises(DivergenceError):
            fit(network, toy_data(n=40), None, train, streams, timing=False)
