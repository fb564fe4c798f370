"""Moving volatility and GARCH parameters across sampling frequencies.

Two routes:

* square-root-of-time scaling (variances and covariances grow linearly in
  the horizon, standard deviations with its square root) and the more general
  power law ``sd(h) = sd(1) * h**D``;
* Drost-Nijman temporal aggregation of a weak GARCH(1,1), which maps
  base-frequency (omega, alpha, beta) and the base-return kurtosis to the
  parameters of the h-period aggregate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ReturnSeries, aggregate
from .errors import InvalidKappa, InvalidParams, NoRealRoot
from .garch import EQUATIONS, UniGarchParams, VechGarchParams


def sqrt_scale_sd(sd: float, h: int) -> float:
    if sd < 0:
        raise ValueError("standard deviation must be non-negative")
    return sd * math.sqrt(h)


def scale_variance_cov(v: float, h: int) -> float:
    """Scale a variance or a covariance to horizon ``h`` (both grow linearly)."""
    return v * h


@dataclass(frozen=True)
class ScalingLaw:
    c: float
    D: float = 0.5
    p: float = 2.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("scaling constant c must be positive")
        if not self.p > 0:
            raise ValueError("moment order p must be positive")


def scaling_law(sd_base: float, dt_ratio: float, law: ScalingLaw) -> float:
    """Volatility at ``dt_ratio`` times the base interval under ``law``.

    The constant is re-calibrated so that ``dt_ratio == 1`` returns ``sd_base``;
    with D = 0.5 this is exactly :func:`sqrt_scale_sd`.
    """
    if not dt_ratio > 0:
        raise ValueError("dt_ratio must be positive")
    if law.D == 0.5:
        return sqrt_scale_sd(sd_base, dt_ratio)
    return sd_base * dt_ratio ** law.D


def fit_scaling_law(r: ReturnSeries, horizons=(1, 2, 5, 10, 20), p: float = 2.0) -> ScalingLaw:
    """Log-log regression of the p-th root of E|r|^p on the aggregation horizon."""
    hs, levels = [], []
    for h in horizons:
        x = aggregate(r, h).returns
        if len(x) < 2:
            continue
        hs.append(h)
        levels.append(np.mean(np.abs(x) ** p) ** (1.0 / p))
    if len(hs) < 2:
        raise ValueError("need at least two usable horizons")
    slope, intercept = np.polyfit(np.log(hs), np.log(levels), 1)
    return ScalingLaw(c=float(math.exp(intercept)), D=float(slope), p=p)


# ---------------------------------------------------------------------------
# Drost-Nijman aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DnOutput:
    omega_h: float
    alpha_h: float
    beta_h: float
    h: int = 1
    kappa: float = math.nan
    a: float = math.nan
    b: float = math.nan
    r: float = math.nan

    @property
    def persistence(self) -> float:
        return self.alpha_h + self.beta_h

    @property
    def unconditional_variance(self) -> float:
        return self.omega_h / (1.0 - self.persistence)


def dn_coefficients(alpha: float, beta: float, kappa: float, h: int) -> tuple[float, float, float]:
    """The (a, b) terms of the aggregation formulas and the quadratic's right-hand side r."""
    s = alpha + beta
    sh = s ** h
    one_m_s2 = 1.0 - s * s
    a = (h * (1.0 - beta) ** 2
         + 2.0 * h * (h - 1) * (1.0 - s) ** 2 * (1.0 - beta * beta - 2.0 * beta * alpha)
         / ((kappa - 1.0) * one_m_s2)
         + 4.0 * (h - 1 - h * s + sh) * (alpha - beta * alpha * s) / one_m_s2)
    b = (alpha - beta * alpha * s) * (1.0 - s ** (2 * h)) / one_m_s2
    r = (a * sh - b) / (a * (1.0 + s ** (2 * h)) - 2.0 * b)
    return a, b, r


def _small_root(r: float) -> float:
    """Root of r x^2 - x + r = 0 with |x| < 1, i.e. x / (1 + x^2) = r."""
    if r == 0.0:
        return 0.0
    # 2r / (1 + sqrt(1 - 4r^2)) == (1 - sqrt(1 - 4r^2)) / (2r) without cancellation
    return 2.0 * r / (1.0 + math.sqrt(1.0 - 4.0 * r * r))


def dn_aggregate(params, kappa: float, h: int) -> DnOutput:
    """Weak GARCH(1,1) parameters of the h-period aggregate.

    ``params`` is a :class:`UniGarchParams` or any (omega, alpha, beta) triple;
    ``kappa`` is the (raw, non-excess) kurtosis of the base-frequency returns.

    Raises :class:`NoRealRoot` when the quadratic for beta_h has no real
    solution (|r| > 1/2) and :class:`InvalidKappa` when kappa <= 1.
    """
    if isinstance(params, UniGarchParams):
        omega, alpha, beta = params.omega, params.alpha, params.beta
    else:
        omega, alpha, beta = (float(v) for v in params)
    h = int(h)
    if h < 1:
        raise ValueError("h must be a positive integer")
    if not kappa > 1 or not math.isfinite(kappa):
        raise InvalidKappa(f"kurtosis must be finite and > 1, got {kappa}")
    if alpha < 0 or beta < 0 or not alpha + beta < 1:
        raise InvalidParams(f"need alpha, beta >= 0 and alpha + beta < 1; got {alpha}, {beta}")
    if h == 1:
        return DnOutput(omega, alpha, beta, 1, kappa)

    s = alpha + beta
    sh = s ** h
    omega_h = h * omega * (1.0 - sh) / (1.0 - s)
    a, b, r = dn_coefficients(alpha, beta, kappa, h)
    if not abs(r) <= 0.5:
        raise NoRealRoot(r, a, b, h)
    beta_h = _small_root(r)
    return DnOutput(omega_h, sh - beta_h, beta_h, h, kappa, a, b, r)


def dn_aggregate_vech(p: VechGarchParams, kappas, h: int) -> VechGarchParams:
    """Apply :func:`dn_aggregate` to each of the s, sf, f equations.

    ``kappas`` is (kappa_cash, kappa_futures); the covariance equation uses
    their mean. Means are aggregated linearly (h * mu).
    """
    k_s, k_f = (float(k) for k in kappas)
    kap = {"s": k_s, "f": k_f, "sf": 0.5 * (k_s + k_f)}
    out = []
    for eq in EQUATIONS:
        try:
            res = dn_aggregate(p.triple(eq), kap[eq], h)
        except NoRealRoot as exc:
            exc.args = (f"equation {eq}: {exc.args[0]}",)
            raise
        out.extend([res.omega_h, res.alpha_h, res.beta_h])
    return VechGarchParams.from_vector(out, h * p.mu_s, h * p.mu_f)


def implied_kappa(params, h: int, target_beta_h: float, lo: float = 1.0 + 1e-9,
                  hi: float = 1e6) -> float:
    """Kurtosis at which :func:`dn_aggregate` yields ``target_beta_h``.

    Useful for backing out the kurtosis behind published aggregated
    parameters. Raises ``ValueError`` if the target is not bracketed.
    """
    from scipy.optimize import brentq

    def f(k):
        return dn_aggregate(params, k, h).beta_h - target_beta_h

    return float(brentq(f, lo, hi, xtol=1e-12))
