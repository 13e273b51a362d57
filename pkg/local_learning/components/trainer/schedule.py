"""Learning-rate schedules."""

import math

from ...errors import ConfigurationError


def cosine_lr(t: float, T: float, eta0: float) -> float:
    """0.5 * eta0 * (1 + cos(pi * t / T)) for 0 <= t <= T."""
    if T == 0:
        raise ConfigurationError("cosine schedule needs a positive horizon T")
    if not 0 <= t <= T:
        raise ConfigurationError(f"schedule step {t} outside [0, {T}]")
    return 0.5 * eta0 * (1.0 + math.cos(math.pi * t / T))


def epoch_lr(schedule: str, epoch: int, epochs: int, eta0: float) -> float:
    """Rate used for a whole epoch; the cosine horizon is the epoch count."""
    if schedule == "constant":
        return eta0
    return cosine_lr(epoch, epochs, eta0)
