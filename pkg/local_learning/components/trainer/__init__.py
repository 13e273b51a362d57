"""Optimizers, schedules and activation accounting for the trainers."""

from .memory import MemoryAccountant
from .optim import Optimizer, OptimizerState, ParamGroup, adam_step, sgd_nesterov_step
from .schedule import cosine_lr, epoch_lr
