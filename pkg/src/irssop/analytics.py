"""Closed-form SNR statistics and secrecy outage probabilities.

Bob's SNR is moment-matched to a Gamma law, Eve's SNR is exponential. Three SOP
evaluators are provided:

* `sop_exact`: adaptive quadrature of the defining integral.
* `sop_series_meijerg`: the Meijer-G series, evaluated term by term with a
  Mellin-Barnes contour integral. Used as a cross-check.
* `sop_lower_bound`: the closed-form bound obtained from the SNR ratio.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy import integrate, special

from irssop.constants import (
    SERIES_DEFAULT_P_MAX,
    SERIES_DEFAULT_TOL,
    SERIES_VALIDITY_TOL,
    SOP_QUAD_EPSABS,
    SOP_QUAD_LIMIT,
    SOP_QUAD_UPPER,
    CsiKind,
    MomentRoute,
    Probability,
    SopMethod,
)
from irssop.errors import MeijerGError, NumericalError, SeriesConvergenceError
from irssop.specfun import (
    rayleigh_pdf,
    regularized_lower_gamma,
    upper_incomplete_gamma,
)

if TYPE_CHECKING:
    from irssop.config import SystemParams
    from irssop.transceiver import Scenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GammaParams:
    """Gamma law with shape kappa and scale omega.

    Scale 0 is the point mass at 0, the SNR of a receiver detecting with
    completely outdated CSI (rho = 0).
    """

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.shape) and self.shape > 0):
            raise ValueError(f"Gamma shape must be > 0, got {self.shape}.")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ValueError(f"Gamma scale must be >= 0, got {self.scale}.")

    @property
    def is_point_mass(self) -> bool:
        return self.scale == 0

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2

    def cdf(self, x: float | np.ndarray) -> float | np.ndarray:
        if self.is_point_mass:
            return np.where(np.asarray(x) >= 0, 1.0, 0.0)
        return special.gammainc(self.shape, np.maximum(x, 0.0) / self.scale)


@dataclass(frozen=True)
class ExpParams:
    """Exponential law with the given mean. Mean 0 is the point mass at 0."""

    mean: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and self.mean >= 0):
            raise ValueError(f"Exponential mean must be >= 0, got {self.mean}.")

    @property
    def is_point_mass(self) -> bool:
        return self.mean == 0

    def cdf(self, x: float | np.ndarray) -> float | np.ndarray:
        if self.is_point_mass:
            return np.where(np.asarray(x) >= 0, 1.0, 0.0)
        return -np.expm1(-np.maximum(x, 0.0) / self.mean)


@dataclass(frozen=True)
class OrderStats:
    """Statistics of the magnitudes kept by selecting the K strongest of N elements.

    Attributes:
        mu_bar: Mean magnitude of the selected elements.
        beta_bar: Asymptotic variance attached to `mu_bar`.
        threshold: Magnitude of the weakest selected element.
    """

    mu_bar: float
    beta_bar: float
    threshold: float


@dataclass(frozen=True)
class AppendixMoments:
    """Mean of the in-phase part and variances of both parts of the coherent sum.

    The squared magnitude of a complex Gaussian with these moments has mean
    `second_moment` and variance `fourth_central`.
    """

    m_u: float
    delta_u2: float
    delta_v2: float

    @property
    def second_moment(self) -> float:
        return self.m_u**2 + self.delta_u2 + self.delta_v2

    @property
    def fourth_central(self) -> float:
        return 2 * (
            2 * self.m_u**2 * self.delta_u2 + self.delta_u2**2 + self.delta_v2**2
        )


def ess_order_stats(N: int, K: int, beta_B: float) -> OrderStats:
    """Mean and variance of the K largest of N Rayleigh magnitudes with E|h|^2 = beta_B.

    The mean is that of a Rayleigh variable truncated at the (N-K)/N quantile,
    sqrt(beta) Gamma(3/2, t^2/beta) / (K/N). The variance is the asymptotic
    variance of a sample quantile at level p = F(mu_bar).
    """
    if not 1 <= K <= N:
        raise ValueError(f"`K` must lie in [1, {N}], got {K}.")
    if beta_B <= 0:
        raise ValueError(f"`beta_B` must be > 0, got {beta_B}.")
    keep = K / N
    threshold = math.sqrt(-beta_B * math.log(keep))
    mu_bar = (
        math.sqrt(beta_B)
        * float(upper_incomplete_gamma(1.5, threshold**2 / beta_B))
        / keep
    )
    p = -math.expm1(-(mu_bar**2) / beta_B)
    density = float(rayleigh_pdf(mu_bar, beta_B))
    beta_bar = p * (1 - p) / (N * density**2)
    return OrderStats(mu_bar=mu_bar, beta_bar=beta_bar, threshold=threshold)


def bob_appendix_moments(
    params: SystemParams,
    count: int,
    mu_stats: OrderStats | None = None,
    bob_csi: CsiKind = "outdated",
) -> AppendixMoments:
    """Moments of the coherent sum at Bob over `count` active elements.

    Args:
        params: System parameters, for beta_B, rho and the phase-error law.
        count: Number of active elements, N without selection or K with it.
        mu_stats: Order statistics of the selected magnitudes. `None` means all
            elements are on and the magnitudes are plain Rayleigh.
        bob_csi: Whether Bob detects with the outdated or the current channel.
    """
    beta = params.beta_B
    mu1, mu2 = params.mu1, params.mu2
    half = count / 2
    if mu_stats is None:
        m_u = half * math.sqrt(math.pi * beta) * mu1
        delta_u2 = half * beta * (1 + mu2 - math.pi / 2 * mu1**2)
        delta_v2 = half * beta * (1 - mu2)
    else:
        s2 = mu_stats.mu_bar**2 + mu_stats.beta_bar
        m_u = count * mu_stats.mu_bar * mu1
        delta_u2 = (
            half * s2 * (1 + mu2 - 2 * mu1**2)
            + count**2 * mu_stats.beta_bar * mu1**2
        )
        delta_v2 = half * s2 * (1 - mu2)

    if bob_csi == "perfect":
        rho2 = params.rho**2
        ageing = half * (1 - rho2) * beta
        return AppendixMoments(
            m_u=params.rho * m_u,
            delta_u2=rho2 * delta_u2 + ageing,
            delta_v2=rho2 * delta_v2 + ageing,
        )
    return AppendixMoments(m_u=m_u, delta_u2=delta_u2, delta_v2=delta_v2)


def _bob_prefactor(params: SystemParams, count: int, bob_csi: CsiKind) -> float:
    gain = params.P * params.M * params.beta_H
    if bob_csi == "outdated":
        rho2 = params.rho**2
        effective_noise = params.sigma2_B + gain * count * (1 - rho2) * params.beta_B
        return gain * rho2 / effective_noise
    return gain / params.sigma2_B


def bob_snr_params(
    params: SystemParams,
    bob_csi: CsiKind,
    ess_K: int | None = None,
    *,
    moments: MomentRoute = "auto",
) -> GammaParams:
    """Gamma law of Bob's SNR, with or without selecting the K strongest elements.

    Args:
        params: System parameters.
        bob_csi: CSI Bob uses for detection.
        ess_K: Number of selected elements. `None` switches every element on.
        moments: How the moments are obtained.
            - "full_array": exact moments of the sum over all N elements, shape
              E^2/V. Only valid when every element is on.
            - "order_statistics": the selected magnitudes are summarized by their
              truncated mean and asymptotic variance, shape m_u^2 / (4 delta_u^2).
            - "auto": "full_array" when all N elements are on, otherwise
              "order_statistics".
    """
    N = params.N
    K = N if ess_K is None else ess_K
    if not 1 <= K <= N:
        raise ValueError(f"`ess_K` must lie in [1, {N}], got {ess_K}.")
    if moments not in ("auto", "full_array", "order_statistics"):
        raise ValueError(f"Unknown moment route {moments!r}.")
    if moments == "auto":
        moments = "full_array" if K == N else "order_statistics"
    if moments == "full_array" and K != N:
        raise ValueError(
            f"The full-array moments need all {N} elements on, got ess_K={K}."
        )

    c = _bob_prefactor(params, K, bob_csi)
    if moments == "full_array":
        am = bob_appendix_moments(params, N, None, bob_csi)
        # E^2/V and V/E with the prefactor c factored out, so c = 0 gives scale 0.
        return GammaParams(
            shape=am.second_moment**2 / am.fourth_central,
            scale=c * am.fourth_central / am.second_moment,
        )

    stats = ess_order_stats(N, K, params.beta_B)
    am = bob_appendix_moments(params, K, stats, bob_csi)
    mean = c * am.second_moment
    if am.m_u > 0:
        shape = am.m_u**2 / (4 * am.delta_u2)
    else:
        # Phases aligned on an uncorrelated channel (rho = 0, perfect CSI): the
        # sum is zero-mean complex Gaussian and E^2/V gives its exponential law.
        shape = am.second_moment**2 / am.fourth_central
    if K == N:
        exact_mean = c * bob_appendix_moments(params, N, None, bob_csi).second_moment
        if abs(mean - exact_mean) > 0.02 * exact_mean:
            warnings.warn(
                f"Order-statistics mean {mean:.4g} differs from the exact "
                f"full-array mean {exact_mean:.4g} by more than 2% at K=N={N}.",
                stacklevel=2,
            )
    return GammaParams(shape=shape, scale=mean / shape)


def eve_snr_params(
    params: SystemParams,
    eve_csi: CsiKind,
    ess_K: int | None = None,
) -> ExpParams:
    """Exponential law of Eve's SNR; selection only changes the active count."""
    N = params.N
    K = N if ess_K is None else ess_K
    if not 1 <= K <= N:
        raise ValueError(f"`ess_K` must lie in [1, {N}], got {ess_K}.")
    gain = params.P * params.M * params.beta_H
    if eve_csi == "outdated":
        rho2 = params.rho**2
        effective_noise = params.sigma2_E + gain * K * (1 - rho2) * params.beta_E
        return ExpParams(mean=gain * rho2 * K * params.beta_E / effective_noise)
    return ExpParams(mean=gain * K * params.beta_E / params.sigma2_E)


def _check_rate(Rs: float) -> None:
    if not (math.isfinite(Rs) and Rs >= 0):
        raise ValueError(f"Secrecy rate `Rs` must be >= 0, got {Rs}.")


def sop_exact(bob: GammaParams, eve: ExpParams, Rs: float) -> Probability:
    """P(C_s <= Rs) by quadrature of E_eve[F_bob(2^Rs (1 + gamma_E) - 1)].

    With u = gamma_E / lambda the integrand is F_bob(.) e^-u on [0, 50]; the
    truncated tail is below e^-50.

    Raises:
        NumericalError: If the quadrature does not reach its tolerance.
    """
    _check_rate(Rs)
    kappa, omega, lam = bob.shape, bob.scale, eve.mean
    B = 2.0**Rs
    if bob.is_point_mass:
        # C_s = 0 <= Rs on every realization.
        return 1.0
    if eve.is_point_mass:
        return float(bob.cdf(B - 1))

    def integrand(u: float) -> float:
        x = (B * (1 + lam * u) - 1) / omega
        return float(special.gammainc(kappa, max(x, 0.0))) * math.exp(-u)

    # Bulk of the Gamma law mapped to u, so quad resolves the CDF step.
    spread = math.sqrt(kappa) * omega
    points = [
        ((kappa * omega + j * spread + 1) / B - 1) / lam for j in range(-4, 5)
    ]
    points = sorted(p for p in points if 0 < p < SOP_QUAD_UPPER)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(
                integrand,
                0.0,
                SOP_QUAD_UPPER,
                points=points or None,
                epsabs=SOP_QUAD_EPSABS,
                epsrel=SOP_QUAD_EPSABS,
                limit=SOP_QUAD_LIMIT,
            )
        except integrate.IntegrationWarning as e:
            raise NumericalError(
                f"SOP quadrature failed for kappa={kappa}, omega={omega}, "
                f"lambda={lam}, Rs={Rs}: {e}"
            ) from e
    logger.debug(f"sop_exact={value:.6g} (abserr={abserr:.2g})")
    return min(max(value, 0.0), 1.0)


def sop_rayleigh_closed_form(omega: float, lam: float, Rs: float) -> Probability:
    """SOP when Bob's SNR is exponential too (kappa = 1)."""
    _check_rate(Rs)
    B = 2.0**Rs
    return 1 - omega / (omega + B * lam) * math.exp(-(B - 1) / omega)


def sop_lower_bound(bob: GammaParams, eve: ExpParams, Rs: float) -> Probability:
    """(lambda / (2^-Rs omega + lambda))^kappa = P(gamma_E >= 2^-Rs gamma_B).

    The event gamma_E >= 2^-Rs gamma_B implies an outage, hence the bound.
    """
    _check_rate(Rs)
    if bob.is_point_mass:
        return 1.0
    if eve.is_point_mass:
        return 0.0
    lam = eve.mean
    return float((lam / (2.0 ** (-Rs) * bob.scale + lam)) ** bob.shape)


def meijer_g_term(kappa: float, z: float, p: int) -> float:
    """G^{2,2}_{3,3}[z | 1, 1+p-kappa, 1+p; 1, p, 1+p] / Gamma(kappa).

    The Gamma ratios of the Mellin-Barnes integrand cancel down to
    Gamma(-s) Gamma(kappa+s) for p = 0 and to
    -Gamma(1-s) Gamma(kappa-p+s) (s-p+1)_{p-1} for p >= 1, whose only poles are
    s >= p on the right and s <= p - kappa on the left. The vertical contour
    Re s = p - min(kappa, 1)/2 separates them for any kappa > 0, integer or not,
    and the integrand is evaluated in the log domain.

    Raises:
        MeijerGError: If the contour integral does not converge.
    """
    if kappa <= 0 or z <= 0 or p < 0:
        raise MeijerGError(f"Invalid arguments kappa={kappa}, z={z}, p={p}.")
    c = p - min(kappa, 1.0) / 2
    log_z = math.log(z)
    log_norm = special.gammaln(kappa)

    def log_integrand(t: float) -> complex:
        s = complex(c, t)
        if p == 0:
            value = special.loggamma(-s) + special.loggamma(kappa + s)
        else:
            value = (
                special.loggamma(1 - s)
                + special.loggamma(kappa - p + s)
                + special.loggamma(s)
                - special.loggamma(s - p + 1)
            )
        return complex(value + s * log_z - log_norm)

    sign = 1.0 if p == 0 else -1.0

    def integrand(t: float) -> float:
        return sign * np.exp(log_integrand(t)).real

    # The integrand decays like exp(-pi |t|); stop where it is 1e-18 of its peak.
    peak = log_integrand(0.0).real
    upper = 8.0
    while log_integrand(upper).real > peak - 41.0:
        upper *= 2
        if upper > 1e5:
            raise MeijerGError(f"Integrand does not decay for kappa={kappa}, p={p}.")

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(
                integrand, 0.0, upper, epsabs=1e-13, epsrel=1e-11, limit=500
            )
        except integrate.IntegrationWarning as e:
            raise MeijerGError(
                f"Contour integral failed for kappa={kappa}, z={z}, p={p}: {e}"
            ) from e
    if not math.isfinite(value) or abserr > 1e-8 * max(1.0, abs(value)):
        raise MeijerGError(
            f"Contour integral inaccurate for kappa={kappa}, z={z}, p={p}: "
            f"{value} +- {abserr}"
        )
    return value / math.pi


def sop_series_meijerg(
    bob: GammaParams,
    eve: ExpParams,
    Rs: float,
    p_max: int = SERIES_DEFAULT_P_MAX,
    tol: float = SERIES_DEFAULT_TOL,
    validity_tol: float = SERIES_VALIDITY_TOL,
) -> Probability:
    """SOP from the Meijer-G series.

    The series sums to E[exp(-(gamma_B - (2^Rs - 1)) / (2^Rs lambda))], which is
    the SOP only when Bob's SNR has negligible mass below 2^Rs - 1. The gap is at
    most F_bob(2^Rs - 1) (exp((2^Rs - 1)/(2^Rs lambda)) - 1), and the series is
    refused when that bound exceeds `validity_tol`.

    Raises:
        SeriesConvergenceError: If either SNR law is a point mass, if the bound
            exceeds `validity_tol`, or if a term is still >= `tol` at `p_max`.
        MeijerGError: If a G-function evaluation fails.
    """
    _check_rate(Rs)
    if p_max < 1:
        raise ValueError(f"`p_max` must be >= 1, got {p_max}.")
    if bob.is_point_mass or eve.is_point_mass:
        raise SeriesConvergenceError(
            "Series is undefined for a point-mass SNR law "
            f"(omega={bob.scale:.4g}, lambda={eve.mean:.4g})."
        )
    kappa, omega, lam = bob.shape, bob.scale, eve.mean
    B = 2.0**Rs
    A = B - 1
    mass_below = float(regularized_lower_gamma(kappa, A / omega))
    gap = 0.0
    if mass_below > 0:
        gap = mass_below * math.expm1(min(A / (B * lam), 700.0))
    if gap > validity_tol:
        raise SeriesConvergenceError(
            f"Series is outside its validity region: error bound {gap:.3g} > "
            f"{validity_tol:.3g} (kappa={kappa:.4g}, omega={omega:.4g}, "
            f"lambda={lam:.4g}, Rs={Rs})."
        )
    z = omega / (lam * B)

    total = 0.0
    for p in range(p_max + 1):
        if p > 0 and A == 0:
            break
        if p == 0:
            coeff = 1.0
        else:
            log_coeff = p * math.log(A / omega) - special.gammaln(p + 1)
            if log_coeff > 700:
                raise SeriesConvergenceError(
                    f"Series coefficient overflows at p={p} (A/omega={A / omega:.3g})."
                )
            coeff = (-1) ** p * math.exp(log_coeff)
        term = coeff * meijer_g_term(kappa, z, p)
        total += term
        logger.debug(f"series term p={p}: {term:.3e}")
        if p > 0 and abs(term) < tol:
            break
    else:
        raise SeriesConvergenceError(
            f"Series did not converge within p_max={p_max} terms "
            f"(last term {term:.3e} >= tol={tol:.1e})."
        )
    return min(max(total, 0.0), 1.0)


SopFunctional = Callable[[GammaParams, ExpParams, float], Probability]

SOP_FUNCTIONALS: dict[SopMethod, SopFunctional] = {
    "exact": sop_exact,
    "lower_bound": sop_lower_bound,
    "series": sop_series_meijerg,
}


def sop_analytic(
    params: SystemParams,
    scenario: Scenario,
    ess_K: int | None = None,
    method: SopMethod = "exact",
    *,
    moments: MomentRoute = "auto",
) -> Probability:
    """SOP of a scenario with `ess_K` selected elements (all when `None`)."""
    bob = bob_snr_params(params, scenario.bob_csi, ess_K, moments=moments)
    eve = eve_snr_params(params, scenario.eve_csi, ess_K)
    return SOP_FUNCTIONALS[method](bob, eve, params.Rs)


def sop_curve(
    params: SystemParams,
    scenario: Scenario,
    k_grid: list[int] | tuple[int, ...] | np.ndarray,
    method: SopMethod = "exact",
) -> np.ndarray:
    """`sop_analytic` over a grid of selection sizes."""
    return np.array(
        [sop_analytic(params, scenario, int(K), method) for K in k_grid],
    )


def optimal_k(
    params: SystemParams,
    scenario: Scenario,
    method: SopMethod = "exact",
) -> tuple[int, Probability]:
    """Exhaustive search of the selection size minimizing the SOP.

    Returns:
        The minimizing K (the smallest one on ties) and the SOP there, evaluated
        with `method`.
    """
    ks = np.arange(1, params.N + 1)
    curve = sop_curve(params, scenario, ks, method)
    best = int(np.argmin(curve))
    logger.debug(
        f"optimal_k({method}) scenario={scenario.label}: K={ks[best]}, "
        f"sop={curve[best]:.6g}"
    )
    return int(ks[best]), float(curve[best])
