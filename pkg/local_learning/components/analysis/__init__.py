"""Representation similarity, gradient probes and exact counts."""

from .cka import feature_matrix, linear_cka
from .counting import FlopCounts, ParamCounts, count_flops, count_params
from .probes import end_to_end_gradients, gradient_bias_probe, isolation_probe, local_gradients
from .similarity import layerwise_cka, unit_features
