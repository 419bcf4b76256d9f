"""Log-normal shadowing channel model and the RSS-based range estimator.

Received power decays linearly in log-distance around a reference
measurement and carries a zero-mean normal perturbation in dB (shadowing).
Inverting the deterministic part of the model maps one RSS reading to a
distance estimate; the shadowing term makes that estimate lognormally
distributed around the true distance.

RSS observations are plain floats in dBm throughout this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LN10 = math.log(10.0)


def gaussian_tail(x):
    """Upper tail P(Z > x) of the standard normal, accurate to ~1e-15 relative."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class ChannelParams:
    """Parameters of the log-normal shadowing channel.

    Attributes
    ----------
    p_ref_dbm : mean received power at the reference distance, dBm.
    alpha : path loss exponent, > 0.
    sigma_db : shadowing standard deviation in dB, >= 0.
    rss_threshold_dbm : minimum power for a link to exist, dBm; must be
        below p_ref_dbm so the pseudo transmission range exceeds d0.
    d0 : reference distance in meters, > 0 (defaults to 1 m).
    """

    p_ref_dbm: float
    alpha: float
    sigma_db: float
    rss_threshold_dbm: float
    d0: float = 1.0

    def __post_init__(self):
        for name in ("p_ref_dbm", "alpha", "sigma_db", "rss_threshold_dbm", "d0"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.d0 <= 0:
            raise ValueError(f"d0 must be > 0, got {self.d0!r}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha!r}")
        if self.sigma_db < 0:
            raise ValueError(f"sigma_db must be >= 0, got {self.sigma_db!r}")
        if self.rss_threshold_dbm >= self.p_ref_dbm:
            raise ValueError(
                "rss_threshold_dbm must be below p_ref_dbm "
                f"(got threshold {self.rss_threshold_dbm!r} vs reference "
                f"{self.p_ref_dbm!r}); the link range would fall inside d0"
            )

    @property
    def sigma_r(self) -> float:
        """Standard deviation of log10(estimated/true distance)."""
        return self.sigma_db / (10.0 * self.alpha)


def _positive_distances(d, name="d"):
    arr = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"{name} must be positive and finite, got {d!r}")
    return arr


def _like_input(value):
    return value if value.ndim else float(value)


def mean_rss(params: ChannelParams, d):
    """Mean received power in dBm at distance d, shadowing set to zero."""
    d = _positive_distances(d)
    out = params.p_ref_dbm - 10.0 * params.alpha * np.log10(d / params.d0)
    return _like_input(out)


def sample_rss(params: ChannelParams, d, rng: np.random.Generator):
    """Draw received power at distance d: mean_rss plus normal shadowing.

    Vectorizes over d; one independent draw per element. Deterministic for
    a seeded generator.
    """
    d = _positive_distances(d)
    mean = params.p_ref_dbm - 10.0 * params.alpha * np.log10(d / params.d0)
    out = mean + rng.normal(0.0, params.sigma_db, size=d.shape)
    return _like_input(out)


def estimate_distance_rss(params: ChannelParams, obs):
    """Distance estimate from one RSS reading; always positive.

    Whether the reading is above the link threshold is the caller's
    concern; any finite value maps to a distance.
    """
    obs = np.asarray(obs, dtype=float)
    if not np.all(np.isfinite(obs)):
        raise ValueError(f"RSS observation must be finite, got {obs!r}")
    out = params.d0 * 10.0 ** ((params.p_ref_dbm - obs) / (10.0 * params.alpha))
    return _like_input(out)


def pseudo_range(params: ChannelParams) -> float:
    """Distance at which the mean RSS equals the link threshold."""
    return params.d0 * 10.0 ** (
        (params.p_ref_dbm - params.rss_threshold_dbm) / (10.0 * params.alpha)
    )


def link_probability(params: ChannelParams, d):
    """Probability that a link exists at distance d.

    Equals the upper Gaussian tail of the shadowing needed to lift the mean
    power above the threshold, so it is 1/2 exactly at the pseudo range and
    nonincreasing in d. With sigma_db = 0 it degenerates to the unit step
    at the pseudo range.
    """
    d = _positive_distances(d)
    r = pseudo_range(params)
    if params.sigma_db == 0.0:
        out = np.where(d <= r, 1.0, 0.0)
    else:
        out = gaussian_tail(10.0 * params.alpha * np.log10(d / r) / params.sigma_db)
    return _like_input(out)


def rss_estimate_pdf(params: ChannelParams, d_true, x):
    """Density of the RSS-based distance estimate at x for true distance d_true.

    log10(estimate/d_true) is normal with scale sigma_r, so the density is
    the corresponding lognormal-in-base-10 law. Requires sigma_db > 0.
    """
    if params.sigma_db == 0.0:
        raise ValueError("rss_estimate_pdf is degenerate for sigma_db = 0")
    d_true = _positive_distances(d_true, "d_true")
    x = _positive_distances(x, "x")
    sr = params.sigma_r
    t = np.log10(x / d_true)
    out = (
        np.exp(-(t * t) / (2.0 * sr * sr))
        / (math.sqrt(2.0 * math.pi) * sr * x * LN10)
    )
    return _like_input(out)
