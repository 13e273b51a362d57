"""
Tests for linear CKA, exact counting and the gradient probes.
"""

import numpy as np
import pytest

from local_learning.components.analysis.cka import linear_cka
from local_learning.components.analysis.counting import count_flops, count_params
from local_learning.components.analysis.probes import (
    end_to_end_gradients,
    gradient_bias_probe,
    isolation_probe,
    local_gradients,
)
from local_learning.components.analysis.similarity import layerwise_cka
from local_learning.components.analysis.tools import model_counts, probe_gradients, similarity_score
from local_learning.components.blocks.heads import build_aux_head
from local_learning.components.blocks.layers import Linear, ReLU
from local_learning.components.blocks.network import Network
from local_learning.components.blocks.partition import BlockPartition
from local_learning.config import CouplingConfig, TrainConfig
from local_learning.errors import InputError, ShapeError, UndefinedScoreError


def random_orthogonal(rng, d):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q


# =============================================================================
# Linear CKA
# =============================================================================

class TestLinearCka:
    def test_self_similarity(self, rng):
        X = rng.standard_normal((20, 5))
        assert linear_cka(X, X) == pytest.approx(1.0, abs=1e-12)

    def test_invariant_to_rotation_scale_and_shift(self, rng):
        X = rng.standard_normal((30, 6))
        Z = rng.standard_normal((30, 4))
        moved = 3.7 * X @ random_orthogonal(rng, 6) + rng.standard_normal(6)
        assert linear_cka(moved, Z) == pytest.approx(linear_cka(X, Z), abs=1e-10)

    def test_symmetric(self, rng):
        X, Y = rng.standard_normal((15, 3)), rng.standard_normal((15, 7))
        assert linear_cka(X, Y) == pytest.approx(linear_cka(Y, X), abs=1e-12)

    def test_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            score = linear_cka(rng.standard_normal((n, int(rng.integers(1, 6)))),
                               rng.standard_normal((n, int(rng.integers(1, 6)))))
            assert -1e-12 <= score <= 1.0 + 1e-12

    def test_orthogonal_features(self):
        X = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        Y = np.array([[1.0], [1.0], [-1.0], [-1.0]])
        assert linear_cka(X, Y) == pytest.approx(0.0, abs=1e-15)

    def test_zero_variance(self):
        with pytest.raises(UndefinedScoreError):
            linear_cka(np.ones((5, 3)), np.arange(10.0).reshape(5, 2))

    def test_row_mismatch(self, rng):
        with pytest.raises(ShapeError):
            linear_cka(rng.standard_normal((5, 2)), rng.standard_normal((6, 2)))

    def test_single_example(self):
        with pytest.raises(InputError):
            linear_cka(np.ones((1, 3)), np.ones((1, 3)))

    def test_image_features_are_flattened(self, rng):
        X = rng.standard_normal((6, 2, 3, 3))
        assert linear_cka(X, X.reshape(6, -1)) == pytest.approx(1.0, abs=1e-12)

    def test_layerwise_self_similarity(self, mlp_network, rng):
        network = mlp_network([3, 8, 8, 2])
        frame = layerwise_cka(network, network, rng.standard_normal((16, 3)))
        assert list(frame.columns) == ["layer", "cka"]
        assert frame["layer"].tolist() == [1, 3, 4]
        np.testing.assert_allclose(frame["cka"], 1.0, atol=1e-12)

    def test_score_tool(self):
        assert similarity_score([[1.0], [2.0], [3.0]], [[2.0], [4.0], [6.0]])["cka"] == pytest.approx(1.0)
        result = similarity_score(np.ones((3, 2)), np.ones((3, 2)))
        assert result["status"] == "error"
        assert result["error_type"] == "UndefinedScoreError"


# =============================================================================
# Counting
# =============================================================================

class TestCounting:
    def test_linear_layer(self):
        assert Linear(3, 2).param_count() == 8

    def test_network_counts(self, mlp_network):
        network = mlp_network([3, 8, 2])
        counts = count_params(network.part, network.heads)
        assert counts.block_params == [3 * 8 + 8, 8 * 2 + 2]
        assert counts.mirror_params == [8 * 2 + 2]
        assert counts.bias_params == [2]
        assert counts.projection_params == [2 * 2 + 2]
        assert counts.total == sum(p.size for p in network.backbone_parameters())
        assert counts.profile == [32, 18]

    def test_identical_blocks(self, mlp_network):
        network = mlp_network([4, 4, 4, 4, 4])
        counts = count_params(network.part, network.heads)
        assert len(set(counts.block_params)) == 1
        assert len(set(counts.mirror_params)) == 1

    def test_matmul_flops(self, mlp_network):
        network = mlp_network([3, 8, 2])
        flops = count_flops(network.part, (5, 3), network.heads)
        assert flops.layers[0]["matmul"] == 2 * 5 * 3 * 8
        assert flops.layers[2]["matmul"] == 2 * 5 * 8 * 2
        assert flops.mirror[0]["matmul"] == 2 * 5 * 8 * 2
        assert flops.projection[0]["matmul"] == 2 * 5 * 2 * 2

    def test_counts_tool(self, mlp_network):
        result = model_counts(mlp_network([3, 8, 2]), [5, 3])
        assert result["status"] == "success"
        assert result["total_params"] == 50
        assert result["flops_by_op"]["matmul"] == 2 * 5 * (3 * 8 + 8 * 2 + 8 * 2 + 2 * 2)


# =============================================================================
# Gradient probes
# =============================================================================

class TestProbes:
    def test_single_block_has_no_bias(self, mlp_network, toy_data):
        data = toy_data(n=16)
        assert gradient_bias_probe(mlp_network([3, 2]), data.x, data.y) == [0.0]

    def test_interior_blocks_differ_from_global(self, mlp_network, toy_data):
        data = toy_data(n=16)
        values = gradient_bias_probe(mlp_network([3, 8, 8, 8, 2]), data.x, data.y)
        assert len(values) == 4
        assert values[-1] == 0.0
        assert all(v > 0.0 for v in values[:-1])

    def test_deterministic(self, mlp_network, toy_data):
        data = toy_data(n=16)
        network = mlp_network([3, 8, 8, 2])
        assert gradient_bias_probe(network, data.x, data.y) == gradient_bias_probe(network, data.x, data.y)

    def test_head_equal_to_rest_of_network(self, rng, toy_data):
        """A head that reproduces the remaining layers sees exactly the global gradient."""
        layers = [Linear(3, 5, rng), ReLU(), Linear(5, 4, rng), Linear(4, 6, rng), ReLU(), Linear(6, 2, rng)]
        part = BlockPartition(layers=layers, boundaries=[0, 3, 6])
        head = build_aux_head(part, 0, 2, CouplingConfig(), rng)
        head.projection.weight.data = layers[5].weight.data.copy()
        head.projection.bias.data = layers[5].bias.data.copy()
        network = Network(part, [head], 2, TrainConfig())
        data = toy_data(n=16)
        values = gradient_bias_probe(network, data.x, data.y)
        assert values[0] < 1e-10
        assert values[1] == 0.0

    def test_isolation(self, mlp_network, toy_data):
        data = toy_data(n=8)
        assert isolation_probe(mlp_network([3, 8, 8, 2]), data.x, data.y) == {0: [], 1: [], 2: []}

    def test_probe_tool(self, mlp_network, toy_data):
        data = toy_data(n=8)
        result = probe_gradients(mlp_network([3, 8, 2]), data.x, data.y)
        assert result["status"] == "success"
        assert len(result["bias"]) == 2

    def test_last_block_gradients_agree_exactly(self, mlp_network, toy_data):
        data = toy_data(n=16)
        network = mlp_network([3, 8, 8, 2])
        local = local_gradients(network, data.x, data.y)
        e2e = end_to_end_gradients(network, data.x, data.y)
        np.testing.assert_array_equal(local[-1], e2e[-1])
        assert not np.array_equal(local[0], e2e[0])

    def test_two_block_value_matches_numpy(self, mlp_network, toy_data):
        """Block 0 of a 2-block MLP against a hand-written numpy backward pass."""
        data = toy_data(n=12, seed=3)
        network = mlp_network([3, 6, 2], seed=5)
        first, last = network.part.layers[0], network.part.layers[2]
        head = network.heads[0]
        x, y = data.x, data.y

        def logit_grad(z):
            p = np.exp(z - z.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            p[np.arange(len(y)), y] -= 1.0
            return p / len(y)

        def block0_grad(dh):
            dpre = dh * (pre > 0)
            return np.concatenate([(dpre.T @ x).reshape(-1), dpre.sum(axis=0)])

        pre = x @ first.weight.data.T + first.bias.data
        h = np.maximum(pre, 0.0)
        global_dz = logit_grad(h @ last.weight.data.T + last.bias.data)
        e2e = block0_grad(global_dz @ last.weight.data)

        mirrored = h @ head.mirror.weight.data.T + head.mirror.bias.data + head.scale.data * head.bias.data
        local_dz = logit_grad(np.maximum(mirrored, 0.0) @ head.projection.weight.data.T + head.projection.bias.data)
        local = block0_grad(((local_dz @ head.projection.weight.data) * (mirrored > 0)) @ head.mirror.weight.data)

        expected = np.linalg.norm(local - e2e) / np.linalg.norm(e2e)
        values = gradient_bias_probe(network, x, y)
        assert values[0] == pytest.approx(expected, rel=1e-10)
        assert values[0] > 0.0
        assert values[1] == 0.0
