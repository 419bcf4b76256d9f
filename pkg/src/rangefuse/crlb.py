"""Fisher information and the variance lower bound for fused ranging.

The pair observation consists of the three neighbor counts (Poisson with
means driven by f(d) and S) and one RSS reading (normal in dB around the
log-distance path loss). Distance d and node intensity are estimated
jointly, so the bound on d is the (d, d) entry of the inverse of the 2x2
Fisher information matrix. f and its slope are taken from the tabulated
piecewise-linear model; knots resolve to the left segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import LN10, ChannelParams
from .connectivity import FdModel, eval_fd, fd_slope


@dataclass(frozen=True)
class FisherInfo:
    """Entries of the symmetric 2x2 information matrix over (distance, intensity)."""

    i_dd: float
    i_dl: float
    i_ll: float

    def __post_init__(self):
        if not self.i_dd > 0.0:
            raise ValueError(f"i_dd must be positive, got {self.i_dd!r}")
        if not self.i_ll > 0.0:
            raise ValueError(f"i_ll must be positive, got {self.i_ll!r}")
        if not self.i_dd * self.i_ll - self.i_dl**2 > 0.0:
            raise ValueError("information matrix must be positive definite")


def rss_fisher_scale(params: ChannelParams) -> float:
    """Information about distance carried by one RSS reading, times d^2."""
    if params.sigma_db == 0.0:
        raise ValueError("RSS information diverges for sigma_db = 0")
    return (10.0 * params.alpha / (params.sigma_db * LN10)) ** 2


def _check_point(model: FdModel, intensity: float, d: float) -> tuple[float, float]:
    if not intensity > 0.0:
        raise ValueError(f"intensity must be positive, got {intensity!r}")
    if not 0.0 < d < model.d_th:
        raise ValueError(f"d must lie strictly inside (0, d_th), got {d!r}")
    f_val = eval_fd(model, d)
    if f_val <= 0.0 or f_val >= model.s_mass:
        raise ValueError(
            f"f(d)={f_val!r} touches 0 or the mass {model.s_mass!r}; "
            "the information matrix is singular there"
        )
    return f_val, fd_slope(model, d)


def fim(params: ChannelParams, model: FdModel, intensity: float, d) -> FisherInfo:
    """Fisher information matrix at distance d and the given node intensity."""
    d = float(d)
    f_val, slope = _check_point(model, intensity, d)
    scale = rss_fisher_scale(params)
    s = model.s_mass
    i_dd = intensity * slope * slope * (1.0 / f_val + 2.0 / (s - f_val)) + scale / (d * d)
    return FisherInfo(i_dd=i_dd, i_dl=-slope, i_ll=(2.0 * s - f_val) / intensity)


def crlb_distance(params: ChannelParams, model: FdModel, intensity: float, d) -> float:
    """Lower bound on the variance of any unbiased distance estimate.

    Closed form of the (d, d) entry of the inverse information matrix;
    reduces to d^2 over the RSS information scale when the tabulated slope
    vanishes.
    """
    d = float(d)
    f_val, slope = _check_point(model, intensity, d)
    scale = rss_fisher_scale(params)
    s = model.s_mass
    conn_info = (
        2.0 * intensity * s * s * slope * slope
        / (f_val * (2.0 * s - f_val) * (s - f_val))
    )
    return 1.0 / (conn_info + scale / (d * d))
