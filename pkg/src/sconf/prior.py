"""Class-prior estimation from the sample mean of similarity confidence.

Over pairs drawn from the product marginal, E[s] = pi+^2 + pi-^2. Writing
that quantity pi_s and assuming pi+ > pi-, inversion gives
pi+ = (sqrt(2 pi_s - 1) + 1) / 2. A sample mean below 1/2 is impossible in
expectation but can occur in finite or noisy samples; it is clamped to the
boundary and flagged rather than rejected.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PriorEstimate:
    pi_s_hat: float
    pi_plus_hat: float
    n: int
    clamped: bool


def invert_pair_mean(pi_s):
    """pi+ from pi_s = pi+^2 + pi-^2, taking the pi+ >= 1/2 root."""
    return (np.sqrt(max(2.0 * pi_s - 1.0, 0.0)) + 1.0) / 2.0


def estimate_prior(ds):
    """Estimate the positive-class prior from a confidence-annotated dataset."""
    if len(ds) == 0:
        raise ConfigError("cannot estimate a prior from an empty dataset")
    pi_s_hat = float(np.mean(ds.s))
    clamped = pi_s_hat < 0.5
    return PriorEstimate(
        pi_s_hat=pi_s_hat,
        pi_plus_hat=float(invert_pair_mean(pi_s_hat)),
        n=len(ds),
        clamped=clamped,
    )
