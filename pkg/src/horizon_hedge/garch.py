r"""Diagonal VECH GARCH(1,1) for a cash/futures pair, plus the univariate case.

Each element of the conditional covariance matrix follows its own scalar
recursion

.. math::
    H_{i,t} = \omega_i + \alpha_i x_{i,t-1} + \beta_i H_{i,t-1},
    \qquad x_s = \varepsilon_s^2,\; x_f = \varepsilon_f^2,\; x_{sf} = \varepsilon_s\varepsilon_f

with Gaussian (quasi) likelihood. Because every recursion is linear in its
own past, both the paths and their parameter derivatives are computed with
``scipy.signal.lfilter``; the log-likelihood gradient is analytic.

Positive definiteness is not implied by the diagonal restriction. The
covariance recursion runs on its raw values, and the *reported* covariance is
clamped to ``+-(1 - 1e-8) sqrt(H_s H_f)``; clamped steps pay a quadratic
likelihood penalty in the excess correlation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import optimize
from scipy.signal import lfilter

from .data import AlignedPair, ReturnSeries
from .errors import DegenerateData, InvalidParams, NonPDMatrix, TooShort

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
PD_SHRINK = 1.0 - 1e-8
PD_PENALTY = 1e4
GRAD_TOL = 1e-6
MIN_OBS = 100
EQUATIONS = ("s", "sf", "f")
PARAM_NAMES = tuple(f"{kind}_{eq}" for eq in EQUATIONS for kind in ("omega", "alpha", "beta"))


# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniGarchParams:
    omega: float
    alpha: float
    beta: float
    mu: float = 0.0

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)

    def validate(self) -> "UniGarchParams":
        vals = (self.omega, self.alpha, self.beta, self.mu)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParams(f"non-finite GARCH parameters: {self}")
        if not self.omega > 0:
            raise InvalidParams(f"omega must be > 0, got {self.omega}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParams(f"alpha and beta must be >= 0: {self}")
        if not self.persistence < 1:
            raise InvalidParams(f"alpha + beta must be < 1, got {self.persistence}")
        return self


@dataclass(frozen=True)
class VechGarchParams:
    """Nine covariance parameters (equations s, sf, f) plus the two mean terms."""

    omega_s: float
    alpha_s: float
    beta_s: float
    omega_sf: float
    alpha_sf: float
    beta_sf: float
    omega_f: float
    alpha_f: float
    beta_f: float
    mu_s: float = 0.0
    mu_f: float = 0.0

    def triple(self, eq: str) -> tuple[float, float, float]:
        if eq not in EQUATIONS:
            raise KeyError(eq)
        return (getattr(self, f"omega_{eq}"), getattr(self, f"alpha_{eq}"),
                getattr(self, f"beta_{eq}"))

    def persistence(self, eq: str) -> float:
        _, a, b = self.triple(eq)
        return a + b

    def unconditional(self, eq: str) -> float:
        w, a, b = self.triple(eq)
        return w / (1.0 - a - b)

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_vector(cls, v, mu_s: float = 0.0, mu_f: float = 0.0) -> "VechGarchParams":
        v = [float(x) for x in v]
        return cls(**dict(zip(PARAM_NAMES, v)), mu_s=float(mu_s), mu_f=float(mu_f))

    @classmethod
    def from_triples(cls, s, sf, f, mu_s: float = 0.0, mu_f: float = 0.0) -> "VechGarchParams":
        return cls.from_vector([*s, *sf, *f], mu_s, mu_f)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def validate(self) -> "VechGarchParams":
        if not all(math.isfinite(v) for v in self.as_dict().values()):
            raise InvalidParams("non-finite VECH parameters")
        if not (self.omega_s > 0 and self.omega_f > 0):
            raise InvalidParams("omega_s and omega_f must be > 0")
        for eq in EQUATIONS:
            _, a, b = self.triple(eq)
            if a < 0 or b < 0:
                raise InvalidParams(f"alpha_{eq} and beta_{eq} must be >= 0")
            if not a + b < 1:
                raise InvalidParams(f"alpha_{eq} + beta_{eq} must be < 1, got {a + b}")
        return self


@dataclass(frozen=True, eq=False)
class CovariancePath:
    dates: np.ndarray
    H_s: np.ndarray
    H_f: np.ndarray
    H_sf: np.ndarray
    eps_s: np.ndarray
    eps_f: np.ndarray
    H_sf_raw: np.ndarray
    clamped: np.ndarray
    frequency_h: int = 1

    def __len__(self) -> int:
        return len(self.H_s)

    @property
    def correlation(self) -> np.ndarray:
        return self.H_sf / np.sqrt(self.H_s * self.H_f)

    def state(self) -> tuple[float, float, float]:
        """Last raw (H_s, H_f, H_sf) values; the recursion state."""
        return float(self.H_s[-1]), float(self.H_f[-1]), float(self.H_sf_raw[-1])


@dataclass
class EstimationResult:
    params: VechGarchParams | UniGarchParams
    loglik: float
    std_errors: dict[str, float]
    robust_std_errors: dict[str, float]
    converged: bool
    iterations: int
    gradient_norm: float = math.nan
    message: str = ""
    n_obs: int = 0
    init_loglik: float = math.nan
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, float, float, float]]:
        """(parameter, estimate, plain SE, robust SE) rows."""
        out = []
        for name, se in self.std_errors.items():
            out.append((name, float(getattr(self.params, name)), se,
                        self.robust_std_errors.get(name, math.nan)))
        return out

    def to_text(self) -> str:
        lines = ["parameter,estimate,se,robust_se"]
        for name, est, se, rse in self.rows():
            lines.append(f"{name},{est!r},{se!r},{rse!r}")
        lines.append(f"loglik,{self.loglik!r},,")
        lines.append(f"converged,{int(self.converged)},,")
        lines.append(f"iterations,{self.iterations},,")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Recursions
# ---------------------------------------------------------------------------


def _recursion(x: np.ndarray, omega: float, alpha: float, beta: float, seed: float) -> np.ndarray:
    """H[0] = seed; H[t] = omega + alpha x[t-1] + beta H[t-1]."""
    v = np.empty(len(x))
    v[0] = seed
    v[1:] = omega + alpha * x[:-1]
    return lfilter([1.0], [1.0, -beta], v)


def _lagged(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    out[0] = 0.0
    out[1:] = x[:-1]
    return out


def _recursion_derivatives(x: np.ndarray, H: np.ndarray, beta: float) -> np.ndarray:
    """dH/d(omega, alpha, beta) with a parameter-free seed; shape (T, 3)."""
    ones = np.ones_like(x)
    ones[0] = 0.0
    inputs = np.column_stack([ones, _lagged(x), _lagged(H)])
    return lfilter([1.0], [1.0, -beta], inputs, axis=0)


def filter_univariate(r, p: UniGarchParams, seed: str | float = "unconditional") -> np.ndarray:
    """Conditional variance path of a univariate GARCH(1,1).

    ``seed`` is ``"unconditional"`` (omega / (1 - alpha - beta)), ``"sample"``
    (mean squared residual) or an explicit starting variance.
    """
    p.validate()
    y = (r.returns if isinstance(r, ReturnSeries) else np.asarray(r, dtype=float)) - p.mu
    if len(y) == 0:
        return np.empty(0)
    if seed == "unconditional":
        s0 = p.unconditional_variance
    elif seed == "sample":
        s0 = float(np.mean(y * y))
    else:
        s0 = float(seed)
    sig2 = _recursion(y * y, p.omega, p.alpha, p.beta, s0)
    if np.any(sig2 <= 0):
        raise InvalidParams("non-positive conditional variance")
    return sig2


def sample_seed(eps_s: np.ndarray, eps_f: np.ndarray) -> tuple[float, float, float]:
    """Maximum-likelihood (1/T) sample moments used to start the recursions."""
    return (float(np.mean(eps_s * eps_s)), float(np.mean(eps_f * eps_f)),
            float(np.mean(eps_s * eps_f)))


def _guard(H_s, H_f, H_sf_raw):
    bound = PD_SHRINK * np.sqrt(H_s * H_f)
    clamped = np.abs(H_sf_raw) > bound
    H_sf = np.where(clamped, np.sign(H_sf_raw) * bound, H_sf_raw)
    return H_sf, clamped


def filter_vech(pair: AlignedPair, p: VechGarchParams, seed=None,
                guard: bool = True) -> CovariancePath:
    """Run the three covariance recursions in lockstep.

    ``seed`` is the (H_s, H_f, H_sf) triple at the first date; by default the
    sample (co)variances of the residuals over ``pair``.
    """
    p.validate()
    es = pair.cash.returns - p.mu_s
    ef = pair.futures.returns - p.mu_f
    if len(es) == 0:
        raise TooShort("empty pair")
    s0 = sample_seed(es, ef) if seed is None else tuple(float(v) for v in seed)
    H_s = _recursion(es * es, p.omega_s, p.alpha_s, p.beta_s, s0[0])
    H_f = _recursion(ef * ef, p.omega_f, p.alpha_f, p.beta_f, s0[1])
    H_sf_raw = _recursion(es * ef, p.omega_sf, p.alpha_sf, p.beta_sf, s0[2])
    if np.any(H_s <= 0) or np.any(H_f <= 0):
        raise InvalidParams("non-positive conditional variance (check seed)")
    if guard:
        H_sf, clamped = _guard(H_s, H_f, H_sf_raw)
    else:
        H_sf, clamped = H_sf_raw.copy(), np.zeros(len(H_s), dtype=bool)
    return CovariancePath(pair.dates, H_s, H_f, H_sf, es, ef, H_sf_raw, clamped,
                          pair.frequency_h)


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------


def bivariate_normal_loglik(eps_s, eps_f, H_s, H_f, H_sf) -> np.ndarray:
    """Per-observation bivariate normal log density."""
    eps_s, eps_f = np.asarray(eps_s, float), np.asarray(eps_f, float)
    H_s, H_f, H_sf = np.asarray(H_s, float), np.asarray(H_f, float), np.asarray(H_sf, float)
    det = H_s * H_f - H_sf * H_sf
    if np.any(det <= 0):
        raise NonPDMatrix("conditional covariance matrix is not positive definite")
    quad = (H_f * eps_s ** 2 - 2.0 * H_sf * eps_s * eps_f + H_s * eps_f ** 2) / det
    return -LOG_2PI - 0.5 * np.log(det) - 0.5 * quad


def _pd_penalty(path: CovariancePath) -> np.ndarray:
    rho = np.abs(path.H_sf_raw) / np.sqrt(path.H_s * path.H_f)
    excess = np.where(path.clamped, rho - PD_SHRINK, 0.0)
    return PD_PENALTY * excess * excess


def loglik_terms(path: CovariancePath, guard: bool = True) -> np.ndarray:
    ll = bivariate_normal_loglik(path.eps_s, path.eps_f, path.H_s, path.H_f, path.H_sf)
    if guard:
        ll = ll - _pd_penalty(path)
    return ll


def loglik(pair: AlignedPair, p: VechGarchParams, seed=None, guard: bool = True) -> float:
    path = filter_vech(pair, p, seed=seed, guard=guard)
    return float(np.sum(loglik_terms(path, guard)))


def _vech_score_terms(es, ef, theta, seed):
    """Per-observation log-likelihood and its analytic gradient in the nine
    covariance parameters (order ``PARAM_NAMES``), seed held fixed.

    No validity checks; the caller keeps variances positive.
    """
    ws, as_, bs, wsf, asf, bsf, wf, af, bf = theta
    xs, xf, xsf = es * es, ef * ef, es * ef
    Hs = _recursion(xs, ws, as_, bs, seed[0])
    Hf = _recursion(xf, wf, af, bf, seed[1])
    Hsf_raw = _recursion(xsf, wsf, asf, bsf, seed[2])
    if np.any(Hs <= 0) or np.any(Hf <= 0) or not np.all(np.isfinite(Hsf_raw)):
        return None
    root = np.sqrt(Hs * Hf)
    rho_raw = Hsf_raw / root
    clamped = np.abs(rho_raw) > PD_SHRINK
    sgn = np.sign(rho_raw)
    Hsf = np.where(clamped, sgn * PD_SHRINK * root, Hsf_raw)

    D = Hs * Hf - Hsf * Hsf
    N = Hf * xs - 2.0 * Hsf * xsf + Hs * xf
    ll = -LOG_2PI - 0.5 * np.log(D) - 0.5 * N / D
    g_s = -0.5 * Hf / D - 0.5 * xf / D + 0.5 * N * Hf / D ** 2
    g_f = -0.5 * Hs / D - 0.5 * xs / D + 0.5 * N * Hs / D ** 2
    g_sf = Hsf / D + xsf / D - N * Hsf / D ** 2

    # clamped steps: Hsf = sgn * c * sqrt(Hs Hf) depends on Hs, Hf only
    g_s = np.where(clamped, g_s + g_sf * Hsf / (2.0 * Hs), g_s)
    g_f = np.where(clamped, g_f + g_sf * Hsf / (2.0 * Hf), g_f)
    g_sf = np.where(clamped, 0.0, g_sf)
    excess = np.where(clamped, np.abs(rho_raw) - PD_SHRINK, 0.0)
    if np.any(clamped):
        ll = ll - PD_PENALTY * excess * excess
        g_sf = g_sf - 2.0 * PD_PENALTY * excess * sgn / root
        g_s = g_s + PD_PENALTY * excess * np.abs(rho_raw) / Hs
        g_f = g_f + PD_PENALTY * excess * np.abs(rho_raw) / Hf

    dHs = _recursion_derivatives(xs, Hs, bs)
    dHsf = _recursion_derivatives(xsf, Hsf_raw, bsf)
    dHf = _recursion_derivatives(xf, Hf, bf)
    scores = np.hstack([g_s[:, None] * dHs, g_sf[:, None] * dHsf, g_f[:, None] * dHf])
    return ll, scores


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _logit(p):
    return math.log(p / (1.0 - p))


def _triple_to_u(w, a, b, log_omega=True):
    pers = min(max(a + b, 1e-6), 1 - 1e-6)
    share = min(max(a / pers if pers > 0 else 0.5, 1e-6), 1 - 1e-6)
    return [math.log(w) if log_omega else w, _logit(pers), _logit(share)]


def _u_to_triple(u, log_omega=True):
    """Map unconstrained coordinates to (omega, alpha, beta) and the Jacobian diagonal blocks."""
    w = math.exp(u[0]) if log_omega else u[0]
    dw = w if log_omega else 1.0
    pers, share = _sigmoid(u[1]), _sigmoid(u[2])
    a, b = pers * share, pers * (1.0 - share)
    dp, ds = pers * (1.0 - pers), share * (1.0 - share)
    # rows: (omega, alpha, beta); cols: (u0, u1, u2)
    J = np.array([[dw, 0.0, 0.0],
                  [0.0, dp * share, pers * ds],
                  [0.0, dp * (1.0 - share), -pers * ds]])
    return (w, a, b), J


def _vech_from_u(u):
    theta = np.empty(9)
    J = np.zeros((9, 9))
    for k, eq in enumerate(EQUATIONS):
        sl = slice(3 * k, 3 * k + 3)
        trip, Jk = _u_to_triple(u[sl], log_omega=(eq != "sf"))
        theta[sl] = trip
        J[sl, sl] = Jk
    return theta, J


def _vech_to_u(theta):
    u = []
    for k, eq in enumerate(EQUATIONS):
        u.extend(_triple_to_u(*theta[3 * k:3 * k + 3], log_omega=(eq != "sf")))
    return np.array(u)


def _numeric_hessian(grad, x, rel_step=1e-5):
    n = len(x)
    H = np.empty((n, n))
    for i in range(n):
        h = rel_step * max(abs(x[i]), 1e-3)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        gp, gm = grad(xp), grad(xm)
        if gp is None or gm is None:
            return np.full((n, n), np.nan)
        H[:, i] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)


def _sandwich(hess, scores):
    """Plain (inverse information) and robust (QMLE sandwich) covariance."""
    n = hess.shape[0]
    if not np.all(np.isfinite(hess)):
        return np.full((n, n), np.nan), np.full((n, n), np.nan)
    try:
        Hinv = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        return np.full((n, n), np.nan), np.full((n, n), np.nan)
    J = scores.T @ scores
    return Hinv, Hinv @ J @ Hinv


def _se(cov):
    d = np.diag(cov)
    return np.where(d > 0, np.sqrt(np.abs(d)), np.nan)


def _minimize_with_fallbacks(fun, u0, rng, n_starts=3):
    """Quasi-Newton (BFGS) with a simplex fallback and jittered restarts.

    ``fun`` returns (value, gradient) of the objective to minimise, or
    (inf, None) outside the admissible region.
    """

    def f_only(u):
        return fun(u)[0]

    def wrapped(u):
        v, g = fun(u)
        if g is None:
            return np.inf, np.zeros_like(u)
        return v, g

    best = None
    total_iter = 0
    starts = [np.asarray(u0, float)]
    for attempt in range(n_starts + 1):
        u_start = starts[-1]
        res = optimize.minimize(wrapped, u_start, jac=True, method="BFGS",
                                options={"gtol": GRAD_TOL, "maxiter": 2000})
        total_iter += int(res.nit)
        if not res.success:
            nm = optimize.minimize(f_only, res.x, method="Nelder-Mead",
                                   options={"maxiter": 4000, "xatol": 1e-8, "fatol": 1e-12})
            total_iter += int(nm.nit)
            res = optimize.minimize(wrapped, nm.x, jac=True, method="BFGS",
                                    options={"gtol": GRAD_TOL, "maxiter": 2000})
            total_iter += int(res.nit)
        value, grad = fun(res.x)
        gnorm = float(np.max(np.abs(grad))) if grad is not None else math.inf
        if best is None or value < best[1]:
            best = (res.x, value, gnorm, str(res.message))
        if gnorm < GRAD_TOL:
            break
        starts.append(best[0] + rng.normal(scale=0.1, size=len(u0)))
    return best[0], best[1], best[2], best[3], total_iter


def _as_vech(init, es, ef) -> VechGarchParams:
    if init is not None:
        return init
    vs, vf = float(np.var(es)), float(np.var(ef))
    rho = float(np.mean(es * ef)) / math.sqrt(vs * vf)
    return VechGarchParams(0.05 * vs, 0.05, 0.90, 0.05 * rho * math.sqrt(vs * vf), 0.05, 0.90,
                           0.05 * vf, 0.05, 0.90)


def estimate(pair: AlignedPair, init: VechGarchParams | None = None, *,
             joint_mean: bool = False, min_obs: int = MIN_OBS, seed: int = 0,
             raise_on_failure: bool = False) -> EstimationResult:
    """Gaussian (Q)ML estimation of the diagonal VECH GARCH(1,1).

    Means are the sample means held fixed (two-step) unless ``joint_mean``.
    Optimisation runs on unconstrained coordinates (log omega for the
    variances; logistic persistence and ARCH share per equation, which keeps
    alpha, beta >= 0 and alpha + beta < 1). The data are standardised per leg
    internally; estimates are reported in the original units. ``converged``
    requires the sup-norm of the gradient of the mean negative log-likelihood
    in those coordinates to fall below 1e-6.
    """
    n = len(pair)
    if n < min_obs:
        raise TooShort(f"VECH estimation needs at least {min_obs} observations, got {n}")
    rs, rf = pair.cash.returns, pair.futures.returns
    if np.ptp(rs) == 0 or np.ptp(rf) == 0:
        raise DegenerateData("a leg is constant; covariance dynamics are unidentified")
    if joint_mean:
        return _estimate_joint_mean(pair, init, seed, raise_on_failure)

    mu_s, mu_f = float(rs.mean()), float(rf.mean())
    es, ef = rs - mu_s, rf - mu_f
    sd_s, sd_f = float(np.std(es)), float(np.std(ef))
    zs, zf = es / sd_s, ef / sd_f
    scale = np.array([sd_s ** 2, 1, 1, sd_s * sd_f, 1, 1, sd_f ** 2, 1, 1])
    seed3 = sample_seed(zs, zf)

    start = _as_vech(init, es, ef)
    theta0 = start.to_vector() / scale
    if init is not None:
        start.validate()

    def objective(u):
        theta, J = _vech_from_u(u)
        out = _vech_score_terms(zs, zf, theta, seed3)
        if out is None:
            return np.inf, None
        ll, sc = out
        total = float(ll.sum())
        if not math.isfinite(total):
            return np.inf, None
        return -total / n, -(sc.sum(axis=0) @ J) / n

    u0 = _vech_to_u(theta0)
    init_value = objective(u0)[0]
    rng = np.random.default_rng(seed)
    u_hat, value, gnorm, message, nit = _minimize_with_fallbacks(objective, u0, rng)
    if init is not None and init_value < value:
        u_hat, value = u0, init_value
        gnorm = float(np.max(np.abs(objective(u0)[1])))
    theta_hat, _ = _vech_from_u(u_hat)

    def grad_natural(theta):
        out = _vech_score_terms(zs, zf, theta, seed3)
        return None if out is None else out[1].sum(axis=0)

    hess = _numeric_hessian(grad_natural, theta_hat)
    scores = _vech_score_terms(zs, zf, theta_hat, seed3)[1]
    cov_plain, cov_robust = _sandwich(hess, scores)
    se = _se(cov_plain) * scale
    rse = _se(cov_robust) * scale

    const = n * math.log(sd_s * sd_f)
    params = VechGarchParams.from_vector(theta_hat * scale, mu_s, mu_f)
    converged = bool(gnorm < GRAD_TOL)
    result = EstimationResult(
        params=params,
        loglik=-value * n - const,
        std_errors=dict(zip(PARAM_NAMES, se.tolist())),
        robust_std_errors=dict(zip(PARAM_NAMES, rse.tolist())),
        converged=converged,
        iterations=nit,
        gradient_norm=gnorm,
        message=message,
        n_obs=n,
        init_loglik=-init_value * n - const,
        extra={"clamped_steps": int(filter_vech(pair, params).clamped.sum())},
    )
    if not converged:
        logger.warning("VECH estimation did not converge (|grad|=%.3g): %s", gnorm, message)
        if raise_on_failure:
            from .errors import NonConvergence
            raise NonConvergence(f"gradient norm {gnorm:.3g} >= {GRAD_TOL}")
    return result


def _numeric_gradient(f, x, rel_step=1e-6):
    g = np.empty_like(x)
    for i in range(len(x)):
        h = rel_step * max(abs(x[i]), 1e-2)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def _estimate_joint_mean(pair, init, seed, raise_on_failure):
    rs, rf = pair.cash.returns, pair.futures.returns
    n = len(rs)
    sd_s, sd_f = float(np.std(rs)), float(np.std(rf))
    zs_raw, zf_raw = rs / sd_s, rf / sd_f
    scale = np.array([sd_s ** 2, 1, 1, sd_s * sd_f, 1, 1, sd_f ** 2, 1, 1])
    start = _as_vech(init, rs - rs.mean(), rf - rf.mean())
    mu0 = np.array([start.mu_s if init is not None else rs.mean(),
                    start.mu_f if init is not None else rf.mean()])
    u0 = np.concatenate([_vech_to_u(start.to_vector() / scale), mu0 / [sd_s, sd_f]])

    def terms(u):
        theta, _ = _vech_from_u(u[:9])
        zs, zf = zs_raw - u[9], zf_raw - u[10]
        out = _vech_score_terms(zs, zf, theta, sample_seed(zs, zf))
        return None if out is None else out[0]

    def f(u):
        ll = terms(u)
        return np.inf if ll is None else -float(ll.sum()) / n

    def fun(u):
        v = f(u)
        if not math.isfinite(v):
            return np.inf, None
        return v, _numeric_gradient(f, u)

    rng = np.random.default_rng(seed)
    u_hat, value, gnorm, message, nit = _minimize_with_fallbacks(fun, u0, rng)
    theta_hat, _ = _vech_from_u(u_hat[:9])
    nat = np.concatenate([theta_hat, u_hat[9:]])

    def terms_nat(x):
        zs, zf = zs_raw - x[9], zf_raw - x[10]
        out = _vech_score_terms(zs, zf, x[:9], sample_seed(zs, zf))
        return None if out is None else out[0]

    def grad_nat(x):
        return _numeric_gradient(lambda y: float(np.sum(terms_nat(y))), x)

    hess = _numeric_hessian(grad_nat, nat, rel_step=1e-4)
    scores = np.empty((n, 11))
    for i in range(11):
        h = 1e-6 * max(abs(nat[i]), 1e-2)
        xp, xm = nat.copy(), nat.copy()
        xp[i] += h
        xm[i] -= h
        scores[:, i] = (terms_nat(xp) - terms_nat(xm)) / (2 * h)
    cov_plain, cov_robust = _sandwich(hess, scores)
    full_scale = np.concatenate([scale, [sd_s, sd_f]])
    names = PARAM_NAMES + ("mu_s", "mu_f")
    params = VechGarchParams.from_vector(theta_hat * scale, u_hat[9] * sd_s, u_hat[10] * sd_f)
    converged = bool(gnorm < GRAD_TOL)
    if not converged and raise_on_failure:
        from .errors import NonConvergence
        raise NonConvergence(f"gradient norm {gnorm:.3g} >= {GRAD_TOL}")
    return EstimationResult(
        params=params,
        loglik=-value * n - n * math.log(sd_s * sd_f),
        std_errors=dict(zip(names, (_se(cov_plain) * full_scale).tolist())),
        robust_std_errors=dict(zip(names, (_se(cov_robust) * full_scale).tolist())),
        converged=converged, iterations=nit, gradient_norm=gnorm, message=message, n_obs=n,
        init_loglik=-f(u0) * n - n * math.log(sd_s * sd_f),
    )


def _uni_score_terms(e, theta, seed):
    w, a, b = theta
    x = e * e
    s2 = _recursion(x, w, a, b, seed)
    if np.any(s2 <= 0):
        return None
    ll = -0.5 * (LOG_2PI + np.log(s2) + x / s2)
    g = -0.5 / s2 + 0.5 * x / s2 ** 2
    return ll, g[:, None] * _recursion_derivatives(x, s2, b)


def estimate_univariate(r, init: UniGarchParams | None = None, *, min_obs: int = MIN_OBS,
                        seed: int = 0) -> EstimationResult:
    """Gaussian (Q)ML for a univariate GARCH(1,1) with the sample mean held fixed.

    The variance recursion starts at the sample variance of the residuals.
    """
    y = r.returns if isinstance(r, ReturnSeries) else np.asarray(r, dtype=float)
    n = len(y)
    if n < min_obs:
        raise TooShort(f"GARCH estimation needs at least {min_obs} observations, got {n}")
    if np.ptp(y) == 0:
        raise DegenerateData("constant series")
    mu = float(y.mean())
    e = y - mu
    sd = float(np.std(e))
    z = e / sd
    scale = np.array([sd * sd, 1.0, 1.0])
    s0 = float(np.mean(z * z))
    start = init if init is not None else UniGarchParams(0.05 * sd * sd, 0.05, 0.90, mu)
    u0 = np.array(_triple_to_u(start.omega / scale[0], start.alpha, start.beta))

    def objective(u):
        theta, J = _u_to_triple(u)
        out = _uni_score_terms(z, theta, s0)
        if out is None:
            return np.inf, None
        ll, sc = out
        return -float(ll.sum()) / n, -(sc.sum(axis=0) @ J) / n

    rng = np.random.default_rng(seed)
    u_hat, value, gnorm, message, nit = _minimize_with_fallbacks(objective, u0, rng)
    theta_hat = np.array(_u_to_triple(u_hat)[0])

    def grad_natural(theta):
        out = _uni_score_terms(z, theta, s0)
        return None if out is None else out[1].sum(axis=0)

    hess = _numeric_hessian(grad_natural, theta_hat)
    cov_plain, cov_robust = _sandwich(hess, _uni_score_terms(z, theta_hat, s0)[1])
    names = ("omega", "alpha", "beta")
    w, a, b = theta_hat * scale
    return EstimationResult(
        params=UniGarchParams(float(w), float(a), float(b), mu),
        loglik=-value * n - n * math.log(sd),
        std_errors=dict(zip(names, (_se(cov_plain) * scale).tolist())),
        robust_std_errors=dict(zip(names, (_se(cov_robust) * scale).tolist())),
        converged=bool(gnorm < GRAD_TOL), iterations=nit, gradient_norm=gnorm,
        message=message, n_obs=n,
        init_loglik=-objective(u0)[0] * n - n * math.log(sd),
    )


# ---------------------------------------------------------------------------
# Forecasting
# ---------------------------------------------------------------------------


def next_state(path: CovariancePath, p: VechGarchParams) -> tuple[float, float, float]:
    """Raw (H_s, H_f, H_sf) one step past the end of ``path``."""
    if len(path) == 0:
        raise TooShort("empty covariance path")
    es, ef = path.eps_s[-1], path.eps_f[-1]
    hs, hf, hsf = path.state()
    return (p.omega_s + p.alpha_s * (es * es) + p.beta_s * hs,
            p.omega_f + p.alpha_f * (ef * ef) + p.beta_f * hf,
            p.omega_sf + p.alpha_sf * (es * ef) + p.beta_sf * hsf)


def forecast_one_step(path: CovariancePath, p: VechGarchParams) -> tuple[float, float, float]:
    """One-step-ahead (H_s, H_f, H_sf), with the covariance PD-guarded."""
    hs, hf, hsf = next_state(path, p)
    bound = PD_SHRINK * math.sqrt(hs * hf)
    if abs(hsf) > bound:
        hsf = math.copysign(bound, hsf)
    return hs, hf, hsf


def forecast_multi_step(path: CovariancePath, p: VechGarchParams, steps: int) -> np.ndarray:
    """Forecasts for 1..steps ahead without new data; shape (steps, 3) as (H_s, H_f, H_sf)."""
    out = np.empty((steps, 3))
    h = np.array(next_state(path, p))
    pers = np.array([p.persistence("s"), p.persistence("f"), p.persistence("sf")])
    omega = np.array([p.omega_s, p.omega_f, p.omega_sf])
    for k in range(steps):
        out[k] = h
        h = omega + pers * h
    return out


def forecast_path(estimation_path: CovariancePath, holdout: AlignedPair,
                  p: VechGarchParams) -> CovariancePath:
    """Covariance path over ``holdout`` with parameters fixed at ``p``.

    The first holdout value is the one-step forecast formed at the end of the
    estimation sample; each later value uses data through the previous date.
    """
    return filter_vech(holdout, p, seed=next_state(estimation_path, p))


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def business_dates(n: int, start: str = "2000-01-03") -> np.ndarray:
    return np.busday_offset(np.datetime64(start, "D"), np.arange(n), roll="forward")


def simulate(p: VechGarchParams, T: int, seed: int, burn: int = 500,
             start_date: str = "2000-01-03", labels=("cash", "futures")) -> AlignedPair:
    """Draw a pair from the diagonal VECH with Gaussian shocks.

    Recursions start at the unconditional moments; the first ``burn`` steps
    are discarded. Output is deterministic in (p, T, seed, burn).
    """
    p.validate()
    T, burn = int(T), int(burn)
    n = T + burn
    z = np.random.default_rng(seed).standard_normal((n, 2))
    hs, hf, hsf = p.unconditional("s"), p.unconditional("f"), p.unconditional("sf")
    es_out = np.empty(n)
    ef_out = np.empty(n)
    ws, as_, bs = p.triple("s")
    wf, af, bf = p.triple("f")
    wsf, asf, bsf = p.triple("sf")
    for t in range(n):
        bound = PD_SHRINK * math.sqrt(hs * hf)
        c = hsf if abs(hsf) <= bound else math.copysign(bound, hsf)
        l11 = math.sqrt(hs)
        l21 = c / l11
        l22 = math.sqrt(max(hf - l21 * l21, 0.0))
        z1, z2 = z[t]
        es = l11 * z1
        ef = l21 * z1 + l22 * z2
        es_out[t], ef_out[t] = es, ef
        hs = ws + as_ * es * es + bs * hs
        hf = wf + af * ef * ef + bf * hf
        hsf = wsf + asf * es * ef + bsf * hsf
    dates = business_dates(T, start_date)
    cash = ReturnSeries(dates, p.mu_s + es_out[burn:], 1, labels[0])
    fut = ReturnSeries(dates, p.mu_f + ef_out[burn:], 1, labels[1])
    return AlignedPair(cash, fut)


def simulate_univariate(p: UniGarchParams, T: int, seed: int, burn: int = 500,
                        start_date: str = "2000-01-03") -> ReturnSeries:
    p.validate()
    n = int(T) + int(burn)
    z = np.random.default_rng(seed).standard_normal(n)
    out = np.empty(n)
    s2 = p.unconditional_variance
    w, a, b = p.omega, p.alpha, p.beta
    for t in range(n):
        e = math.sqrt(s2) * z[t]
        out[t] = e
        s2 = w + a * e * e + b * s2
    return ReturnSeries(business_dates(int(T), start_date), p.mu + out[burn:], 1)


def garch_kurtosis(alpha: float, beta: float) -> float:
    """Population kurtosis of a Gaussian GARCH(1,1); inf when the 4th moment does not exist."""
    pers = alpha + beta
    denom = 1.0 - pers ** 2 - 2.0 * alpha ** 2
    if denom <= 0:
        return math.inf
    return 3.0 * (1.0 - pers ** 2) / denom


def with_means(p: VechGarchParams, mu_s: float, mu_f: float) -> VechGarchParams:
    return replace(p, mu_s=mu_s, mu_f=mu_f)
