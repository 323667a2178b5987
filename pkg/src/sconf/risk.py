"""Risk estimators over unlabeled pairs with similarity confidence.

Writing l+_i = l(z_i, +1) + l(z'_i, +1) and l-_i = l(z_i, -1) + l(z'_i, -1)
for the summed pair losses, the two partial risks over an n-pair batch are

    r+ = sum_i (s_i - pi-) l+_i / (2 n (pi+ - pi-))
    r- = sum_i (pi+ - s_i) l-_i / (2 n (pi+ - pi-))

Their sum is an unbiased estimate of the supervised classification risk, but
either partial can go negative in a finite sample. The corrected estimators
wrap each partial with f(x) = x for x >= 0 and k|x| for x < 0:

    nn           k -> 0 limit, implemented as max(0, x)
    abs          k = 1, |x|
    corrected(k) any k > 0

The one-sided estimators apply to pair sets conditioned on being similar
(resp. dissimilar); they reweight each pair by 1/s_i (resp. 1/(1 - s_i)) with
a leading factor pi+^2 + pi-^2 (resp. 2 pi+ pi-). They are unbiased too, but
when the confidences are skewed past the prior their empirical minimizer
collapses to a one-class solution, which is the failure mode the paired
estimators exist to avoid.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BalancedPriorError, ConfigError
from .losses import LOSS_KINDS, loss_value

PAIR_KINDS = ("unbiased", "nn", "abs", "corrected", "similar_only", "dissimilar_only")
RISK_KINDS = PAIR_KINDS + ("supervised",)

# Coefficients blow up as pi+ -> pi-; refuse to construct a spec there.
PRIOR_GUARD = 1e-3


@dataclass(frozen=True)
class RiskSpec:
    """Estimator kind, class prior, and loss choice for one training run."""

    kind: str
    pi_plus: float
    loss: str = "logistic"
    k: float | None = None

    def __post_init__(self):
        if self.kind not in RISK_KINDS:
            raise ConfigError(f"unknown risk kind {self.kind!r}; choose from {RISK_KINDS}")
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if not 0.0 < self.pi_plus < 1.0:
            raise ConfigError(f"pi_plus must lie in (0, 1), got {self.pi_plus}")
        if self.kind in PAIR_KINDS and abs(self.pi_plus - 0.5) < PRIOR_GUARD:
            raise BalancedPriorError(
                f"pi_plus={self.pi_plus} is within {PRIOR_GUARD} of 1/2; the pair "
                "estimator denominators (pi+ - pi-) are unusable this close to balance"
            )
        if self.kind == "corrected":
            if self.k is None or not self.k > 0:
                raise ConfigError("corrected risk needs k > 0")
        elif self.k is not None:
            raise ConfigError(f"k applies only to the corrected kind, not {self.kind!r}")

    @property
    def pi_minus(self):
        return 1.0 - self.pi_plus


@dataclass(frozen=True)
class PartialRisks:
    """Positive and negative partial risks; either may be negative."""

    r_plus: float
    r_minus: float


def _pair_coefficients(s, spec):
    # per-pair multipliers of the summed +1 and -1 pair losses
    n = len(s)
    denom = 2.0 * n * (spec.pi_plus - spec.pi_minus)
    return (s - spec.pi_minus) / denom, (spec.pi_plus - s) / denom


def _check_pair_batch(z, z_prime, s, spec, kinds):
    if spec.kind not in kinds:
        raise ConfigError(f"risk kind {spec.kind!r} not valid here; expected one of {kinds}")
    z = np.asarray(z, dtype=float)
    z_prime = np.asarray(z_prime, dtype=float)
    s = np.asarray(s, dtype=float)
    if not (z.shape == z_prime.shape == s.shape) or z.ndim != 1:
        raise ConfigError("scores and confidences must be equal-length 1-d arrays")
    if len(s) == 0:
        raise ConfigError("empty pair batch")
    return z, z_prime, s


def partial_risks(z, z_prime, s, spec):
    """The two partial risks of a pair batch under the given spec.

    z and z_prime are the scores of the first and second pair members.
    Summation is numpy pairwise summation, which keeps the accumulation error
    well under the 1e-12 oracle tolerance for batches in the thousands.
    """
    corrected_kinds = ("unbiased", "nn", "abs", "corrected")
    z, z_prime, s = _check_pair_batch(z, z_prime, s, spec, corrected_kinds)
    cp, cm = _pair_coefficients(s, spec)
    lp = loss_value(spec.loss, z, 1) + loss_value(spec.loss, z_prime, 1)
    lm = loss_value(spec.loss, z, -1) + loss_value(spec.loss, z_prime, -1)
    return PartialRisks(float(np.sum(cp * lp)), float(np.sum(cm * lm)))


def correction_value(x, spec):
    """The correction f applied to one partial risk."""
    if spec.kind == "unbiased" or x >= 0.0:
        return float(x)
    if spec.kind == "nn":
        return 0.0
    if spec.kind == "abs":
        return float(-x)
    if spec.kind == "corrected":
        return float(spec.k * -x)
    raise ConfigError(f"no correction for kind {spec.kind!r}")


def correction_slope(x, spec):
    """f'(x) with the kink convention f'(0) = 1 (identity branch)."""
    if spec.kind == "unbiased" or x >= 0.0:
        return 1.0
    if spec.kind == "nn":
        return 0.0
    if spec.kind == "abs":
        return -1.0
    if spec.kind == "corrected":
        return -spec.k
    raise ConfigError(f"no correction for kind {spec.kind!r}")


def total_risk(pr, spec):
    """f(r+) + f(r-) for the spec's correction; plain sum when unbiased."""
    return correction_value(pr.r_plus, spec) + correction_value(pr.r_minus, spec)


def risk_gradient_weights(s, pr, spec):
    """Per-pair weights (w+, w-) so that d total / d z_i decomposes as

        w+_i * dl(z_i, +1)/dz + w-_i * dl(z_i, -1)/dz

    and identically for z'_i. For the corrected kinds the outer chain factor
    f'(r+/-) multiplies the raw pair coefficients; for the one-sided kinds
    (pr unused, may be None) the weights carry the 1/s or 1/(1-s) reweighting.
    """
    s = np.asarray(s, dtype=float)
    if len(s) == 0:
        raise ConfigError("empty pair batch")
    if spec.kind in ("unbiased", "nn", "abs", "corrected"):
        cp, cm = _pair_coefficients(s, spec)
        return (correction_slope(pr.r_plus, spec) * cp,
                correction_slope(pr.r_minus, spec) * cm)
    if spec.kind in ("similar_only", "dissimilar_only"):
        lead, div = _one_sided_factors(s, spec)
        cp, cm = _pair_coefficients(s, spec)
        return lead * cp / div, lead * cm / div
    raise ConfigError(f"risk kind {spec.kind!r} has no pair gradient weights")


def _one_sided_factors(s, spec):
    if spec.kind == "similar_only":
        if np.any(s <= 0.0):
            bad = int(np.argmax(s <= 0.0))
            raise ConfigError(f"similar-only risk needs s > 0 for every pair; pair {bad} has s=0")
        return spec.pi_plus**2 + spec.pi_minus**2, s
    if np.any(s >= 1.0):
        bad = int(np.argmax(s >= 1.0))
        raise ConfigError(f"dissimilar-only risk needs s < 1 for every pair; pair {bad} has s=1")
    return 2.0 * spec.pi_plus * spec.pi_minus, 1.0 - s


def one_sided_risk(z, z_prime, s, spec):
    """Risk estimate from similar-only or dissimilar-only pair data."""
    z, z_prime, s = _check_pair_batch(z, z_prime, s, spec,
                                      ("similar_only", "dissimilar_only"))
    lead, div = _one_sided_factors(s, spec)
    cp, cm = _pair_coefficients(s, spec)
    lp = loss_value(spec.loss, z, 1) + loss_value(spec.loss, z_prime, 1)
    lm = loss_value(spec.loss, z, -1) + loss_value(spec.loss, z_prime, -1)
    return float(np.sum(lead * (cp * lp + cm * lm) / div))


def supervised_risk(z, y, loss="logistic"):
    """Mean loss of scores against known labels; the oracle the pair
    estimators are unbiased for."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y)
    if z.shape != y.shape or z.ndim != 1:
        raise ConfigError("scores and labels must be equal-length 1-d arrays")
    if len(z) == 0:
        raise ConfigError("empty batch")
    return float(np.mean(loss_value(loss, z, y)))


def pair_risk(z, z_prime, s, spec):
    """Total risk of a pair batch for any pair kind (corrected or one-sided)."""
    if spec.kind in ("similar_only", "dissimilar_only"):
        return one_sided_risk(z, z_prime, s, spec)
    return total_risk(partial_risks(z, z_prime, s, spec), spec)
