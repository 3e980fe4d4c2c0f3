"""Per-realization signal processing: IRS phases, element selection, MRT and SNRs.

All functions accept a leading batch axis on the channel vectors: `h` of shape
(*batch, N) with matching phases and selections of shape (*batch, K).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from irssop.constants import CsiKind, CsiKindValues
from irssop.errors import DegenerateChannelError

if TYPE_CHECKING:
    from irssop.channel import ChannelRealization
    from irssop.config import SystemParams


@dataclass(frozen=True)
class Scenario:
    """Which channel knowledge Bob and Eve use for coherent detection."""

    bob_csi: CsiKind
    eve_csi: CsiKind

    def __post_init__(self) -> None:
        for side, csi in (("bob_csi", self.bob_csi), ("eve_csi", self.eve_csi)):
            if csi not in CsiKindValues:
                raise ValueError(f"`{side}` must be one of {CsiKindValues}, got {csi!r}.")

    @property
    def label(self) -> str:
        for scenario_id, scenario in SCENARIOS.items():
            if scenario == self:
                return str(scenario_id)
        return f"{self.bob_csi}/{self.eve_csi}"


SCENARIOS: dict[int, Scenario] = {
    1: Scenario(bob_csi="outdated", eve_csi="outdated"),
    2: Scenario(bob_csi="perfect", eve_csi="perfect"),
    # Worst case for secrecy
    3: Scenario(bob_csi="outdated", eve_csi="perfect"),
}


def scenario_from_id(scenario_id: int) -> Scenario:
    """Look up one of the three named scenarios."""
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise ValueError(
            f"Unknown scenario {scenario_id}, expected one of {sorted(SCENARIOS)}."
        ) from None


@dataclass(frozen=True)
class IrsConfig:
    """Phase settings of all elements plus the indices of the elements switched on.

    Attributes:
        phases: Precise phase shifts phi_n, shape (*batch, N).
        selection: 0-based indices of the active elements, shape (*batch, K).
    """

    phases: np.ndarray
    selection: np.ndarray

    def __post_init__(self) -> None:
        N = self.phases.shape[-1]
        if self.selection.size and (
            self.selection.min() < 0 or self.selection.max() >= N
        ):
            raise ValueError(f"Selected indices must lie in [0, {N}).")

    @property
    def K(self) -> int:
        return int(self.selection.shape[-1])


def irs_optimal_phases(h_B_hat: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Phases arg(conj(h_n) b_n) that co-phase every reflected path at Bob.

    Entries with h_n = 0 get arg(b_n).
    """
    aligned = np.conj(h_B_hat) * b
    return np.where(h_B_hat == 0, np.angle(b), np.angle(aligned))


def ess_select(h_B_hat: np.ndarray, K: int) -> np.ndarray:
    """Indices of the K strongest elements of the outdated Bob channel.

    Sorted by decreasing magnitude, ties going to the lower index.
    """
    N = h_B_hat.shape[-1]
    if not 1 <= K <= N:
        raise ValueError(f"`K` must lie in [1, {N}], got {K}.")
    order = np.argsort(-np.abs(h_B_hat), axis=-1, kind="stable")
    return order[..., :K]


def random_select(
    N: int,
    K: int,
    rng: np.random.Generator,
    size: tuple[int, ...] = (),
) -> np.ndarray:
    """Uniformly random K-subsets of the N elements, shape (*size, K)."""
    if not 1 <= K <= N:
        raise ValueError(f"`K` must lie in [1, {N}], got {K}.")
    keys = rng.random((*size, N))
    return np.argsort(keys, axis=-1)[..., :K]


def full_selection(N: int, size: tuple[int, ...] = ()) -> np.ndarray:
    """Every element switched on."""
    return np.broadcast_to(np.arange(N), (*size, N))


def coherent_sum(
    h: np.ndarray,
    b: np.ndarray,
    rx_phases: np.ndarray,
    selection: np.ndarray,
) -> np.ndarray:
    """sum_{n in S} conj(h_n) exp(-j phi_n) b_n over the active elements."""
    terms = np.conj(h) * np.exp(-1j * rx_phases) * b
    return np.take_along_axis(terms, selection, axis=-1).sum(axis=-1)


def _snr(
    *,
    h_hat: np.ndarray,
    h: np.ndarray,
    realization: ChannelRealization,
    irs: IrsConfig,
    params: SystemParams,
    csi: CsiKind,
    sigma2: float,
    beta: float,
) -> np.ndarray:
    rx_phases = irs.phases + realization.delta_phi
    gain = params.P * params.M * realization.beta_H
    if csi == "outdated":
        # The ageing error seen through the K active elements acts as extra noise.
        rho2 = params.rho**2
        effective_noise = sigma2 + gain * irs.K * (1.0 - rho2) * beta
        s = coherent_sum(h_hat, realization.b, rx_phases, irs.selection)
        return gain * rho2 / effective_noise * np.abs(s) ** 2
    s = coherent_sum(h, realization.b, rx_phases, irs.selection)
    return gain / sigma2 * np.abs(s) ** 2


def instant_snr_bob(
    realization: ChannelRealization,
    irs: IrsConfig,
    params: SystemParams,
    bob_csi: CsiKind,
) -> np.ndarray:
    """Instantaneous SNR at Bob under outdated or perfect receiver CSI."""
    return _snr(
        h_hat=realization.h_B_hat,
        h=realization.h_B,
        realization=realization,
        irs=irs,
        params=params,
        csi=bob_csi,
        sigma2=params.sigma2_B,
        beta=realization.beta_B,
    )


def instant_snr_eve(
    realization: ChannelRealization,
    irs: IrsConfig,
    params: SystemParams,
    eve_csi: CsiKind,
) -> np.ndarray:
    """Instantaneous SNR at Eve. The IRS is configured for Bob, not for her."""
    return _snr(
        h_hat=realization.h_E_hat,
        h=realization.h_E,
        realization=realization,
        irs=irs,
        params=params,
        csi=eve_csi,
        sigma2=params.sigma2_E,
        beta=realization.beta_E,
    )


def secrecy_capacity(gamma_B: np.ndarray, gamma_E: np.ndarray) -> np.ndarray:
    """max(0, log2(1 + gamma_B) - log2(1 + gamma_E))."""
    diff = (np.log1p(gamma_B) - np.log1p(gamma_E)) / np.log(2)
    return np.maximum(diff, 0.0)


# ---------------------------------------------------------------- dense chain


def _selection_diagonal(phases: np.ndarray, selection: np.ndarray) -> np.ndarray:
    diag = np.zeros(phases.shape[-1], dtype=np.complex128)
    diag[selection] = np.exp(1j * phases[selection])
    return diag


def mrt_beamformer(realization: ChannelRealization, irs: IrsConfig) -> np.ndarray:
    """Unit-norm MRT beamformer H Phi_S h_B_hat / ||H Phi_S h_B_hat||.

    Works on a single realization. Elements outside the selection reflect nothing.

    Raises:
        DegenerateChannelError: If the projected channel is exactly zero, e.g. for
            an empty selection.
    """
    H = realization.bs_irs_channel()
    g = H @ (_selection_diagonal(irs.phases, irs.selection) * realization.h_B_hat)
    norm = np.linalg.norm(g)
    if norm == 0:
        raise DegenerateChannelError(
            f"Projected channel is zero over the {irs.K} selected elements."
        )
    return g / norm


def _signal_chain_snr(
    *,
    h_hat: np.ndarray,
    h: np.ndarray,
    realization: ChannelRealization,
    irs: IrsConfig,
    params: SystemParams,
    csi: CsiKind,
    sigma2: float,
    beta: float,
) -> float:
    H = realization.bs_irs_channel()
    w = mrt_beamformer(realization, irs)
    # Reception sees the erroneous phases, the beamformer the precise ones.
    phi_rx = _selection_diagonal(irs.phases + realization.delta_phi, irs.selection)
    if csi == "outdated":
        signal = np.vdot(H @ (phi_rx * h_hat), w)
        leak = np.conj(phi_rx) * (H.conj().T @ w)
        effective_noise = sigma2 + params.P * (1 - params.rho**2) * beta * np.vdot(
            leak, leak
        ).real
        return float(params.P * params.rho**2 * np.abs(signal) ** 2 / effective_noise)
    signal = np.vdot(H @ (phi_rx * h), w)
    return float(params.P * np.abs(signal) ** 2 / sigma2)


def signal_chain_snr_bob(
    realization: ChannelRealization,
    irs: IrsConfig,
    params: SystemParams,
    bob_csi: CsiKind,
) -> float:
    """Bob's SNR evaluated on the dense model y = sqrt(P) (H Phi h)^H w x + n.

    Used to check `instant_snr_bob`, which relies on the rank-1 structure of H.
    """
    return _signal_chain_snr(
        h_hat=realization.h_B_hat,
        h=realization.h_B,
        realization=realization,
        irs=irs,
        params=params,
        csi=bob_csi,
        sigma2=params.sigma2_B,
        beta=realization.beta_B,
    )


def signal_chain_snr_eve(
    realization: ChannelRealization,
    irs: IrsConfig,
    params: SystemParams,
    eve_csi: CsiKind,
) -> float:
    """Eve's SNR on the dense model, see `signal_chain_snr_bob`."""
    return _signal_chain_snr(
        h_hat=realization.h_E_hat,
        h=realization.h_E,
        realization=realization,
        irs=irs,
        params=params,
        csi=eve_csi,
        sigma2=params.sigma2_E,
        beta=realization.beta_E,
    )
