"""Channel models of the IRS-assisted downlink.

The BS-IRS channel is the rank-1 line-of-sight matrix sqrt(beta_H) a b^H and is
kept in factored form. IRS-user channels are i.i.d. Rayleigh; the BS only knows
an outdated copy related to the current one by h = rho h_hat + e.

Sampling functions take an explicit `np.random.Generator` and an optional
`size`, a leading batch shape, so that whole blocks of trials are drawn at once.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from irssop.constants import FIRST_J0_ZERO_FD_TD
from irssop.specfun import bessel_j0
from irssop.utils import infer_random_state

if TYPE_CHECKING:
    from irssop.config import SystemParams

logger = logging.getLogger(__name__)

Shape = tuple[int, ...]


def path_loss(C: float, d: float, alpha: float) -> float:
    """Distance-dependent path loss C d^-alpha."""
    if C <= 0:
        raise ValueError(f"Path-loss intercept `C` must be > 0, got {C}.")
    if d <= 0:
        raise ValueError(f"Distance `d` must be > 0, got {d}.")
    return float(C * d ** (-alpha))


def steering_bs(params: SystemParams) -> np.ndarray:
    """Uniform linear array response of the BS, shape (M,)."""
    m = np.arange(params.M)
    phase = (
        2 * np.pi * params.spacing_bs * m * np.sin(params.phi1) * np.sin(params.theta1)
    )
    return np.exp(1j * phase)


def irs_element_indices(N_H: int, N_V: int) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal and vertical grid indices (k, l) of each element, row by row."""
    n = np.arange(N_H * N_V)
    return n % N_H, n // N_H


def steering_irs(params: SystemParams) -> np.ndarray:
    """Uniform planar array response of the IRS, shape (N,)."""
    k, l = irs_element_indices(params.N_H, params.N_V)
    phase = (
        2
        * np.pi
        * (
            k * params.spacing_h * np.cos(params.theta2) * np.sin(params.phi2)
            + l * params.spacing_v * np.sin(params.theta2)
        )
    )
    return np.exp(1j * phase)


def _complex_normal(
    rng: np.random.Generator,
    variance: float,
    shape: Shape,
) -> np.ndarray:
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_user_channel(
    N: int,
    beta: float,
    rng: np.random.Generator,
    size: Shape = (),
) -> np.ndarray:
    """Draw an IRS-user channel with i.i.d. CN(0, beta) entries, shape (*size, N)."""
    if beta <= 0:
        raise ValueError(f"Path loss `beta` must be > 0, got {beta}.")
    return _complex_normal(rng, beta, (*size, N))


def evolve_channel(
    h_hat: np.ndarray,
    rho: float,
    beta: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Current channel rho h_hat + e with e ~ CN(0, (1 - rho^2) beta).

    The error is always drawn, also for rho = 1 where it is multiplied by zero,
    so that the stream position does not depend on rho.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"Correlation `rho` must lie in [0, 1], got {rho}.")
    if beta <= 0:
        raise ValueError(f"Path loss `beta` must be > 0, got {beta}.")
    e = _complex_normal(rng, 1.0, h_hat.shape)
    return rho * h_hat + np.sqrt((1.0 - rho**2) * beta) * e


def rho_from_doppler(fd_Td: float) -> float:
    """Jakes correlation J0(2 pi fd Td) between channel snapshots Td apart.

    J0 turns negative past its first zero (fd_Td ~ 0.383). The sign is dropped
    there: the value is clamped to 0 with a warning.
    """
    if fd_Td < 0:
        raise ValueError(f"Normalized Doppler `fd_Td` must be >= 0, got {fd_Td}.")
    rho = float(bessel_j0(2 * np.pi * fd_Td))
    if rho < 0:
        warnings.warn(
            f"fd_Td={fd_Td} lies beyond the first zero of J0 "
            f"(fd_Td={FIRST_J0_ZERO_FD_TD:.4f}); J0 = {rho:.4f} is clamped to 0.",
            stacklevel=2,
        )
    rho = min(max(rho, 0.0), 1.0)
    logger.debug(f"fd_Td={fd_Td} gives rho={rho:.6f}")
    return rho


def sample_phase_errors(
    N: int,
    L: int,
    rng: np.random.Generator,
    size: Shape = (),
) -> np.ndarray:
    """Uniform phase errors on [-pi/L, pi/L], shape (*size, N)."""
    if L < 1:
        raise ValueError(f"`L` must be >= 1, got {L}.")
    bound = np.pi / L
    return rng.uniform(-bound, bound, size=(*size, N))


@dataclass(frozen=True)
class ChannelRealization:
    """One draw (or a batch of draws) of every random quantity of the link.

    User channels and phase errors have shape (*batch, N); the steering vectors
    are deterministic and shared by the whole batch.
    """

    a: np.ndarray
    b: np.ndarray
    beta_H: float
    beta_B: float
    beta_E: float
    h_B_hat: np.ndarray
    h_B: np.ndarray
    h_E_hat: np.ndarray
    h_E: np.ndarray
    delta_phi: np.ndarray

    @property
    def M(self) -> int:
        return int(self.a.shape[-1])

    @property
    def N(self) -> int:
        return int(self.b.shape[-1])

    @property
    def batch_shape(self) -> Shape:
        return tuple(self.h_B.shape[:-1])

    def bs_irs_channel(self) -> np.ndarray:
        """The dense M x N BS-IRS matrix sqrt(beta_H) a b^H."""
        return np.sqrt(self.beta_H) * np.outer(self.a, np.conj(self.b))

    def __getitem__(self, index: int) -> ChannelRealization:
        """The `index`-th realization of a batch."""
        return ChannelRealization(
            a=self.a,
            b=self.b,
            beta_H=self.beta_H,
            beta_B=self.beta_B,
            beta_E=self.beta_E,
            h_B_hat=self.h_B_hat[index],
            h_B=self.h_B[index],
            h_E_hat=self.h_E_hat[index],
            h_E=self.h_E[index],
            delta_phi=self.delta_phi[index],
        )


def sample_realization(
    params: SystemParams,
    rng: int | np.random.Generator | None,
    size: Shape = (),
) -> ChannelRealization:
    """Draw a full channel realization.

    Draw order is fixed: h_B_hat, h_E_hat, e_B, e_E, then the phase errors.
    """
    _, rng = infer_random_state(rng)
    N = params.N
    beta_B, beta_E = params.beta_B, params.beta_E
    h_B_hat = sample_user_channel(N, beta_B, rng, size)
    h_E_hat = sample_user_channel(N, beta_E, rng, size)
    h_B = evolve_channel(h_B_hat, params.rho, beta_B, rng)
    h_E = evolve_channel(h_E_hat, params.rho, beta_E, rng)
    delta_phi = sample_phase_errors(N, params.L, rng, size)
    return ChannelRealization(
        a=steering_bs(params),
        b=steering_irs(params),
        beta_H=params.beta_H,
        beta_B=beta_B,
        beta_E=beta_E,
        h_B_hat=h_B_hat,
        h_B=h_B,
        h_E_hat=h_E_hat,
        h_E=h_E,
        delta_phi=delta_phi,
    )
