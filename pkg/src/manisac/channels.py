"""Near-field channel synthesis under the uniform spherical wave model.

Every channel entry has a fixed amplitude (the path-loss coefficient) and a
phase set by the exact Euclidean distance between antenna and node, so the
wavefront curvature is captured without per-antenna gain variation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import AntennaLayout, Scenario


def usw_path_loss(distance: float, wavelength: float) -> float:
    """Free-space field amplitude lambda / (4 pi d) at the given distance."""
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    return wavelength / (4.0 * np.pi * distance)


def response_vector(positions: np.ndarray, q: np.ndarray, wavelength: float) -> np.ndarray:
    """Unit-modulus response vector exp(+j 2pi/lambda * ||p_i - q||) per antenna."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("positions must be nonempty")
    d = np.linalg.norm(pts - np.asarray(q, dtype=float)[None, :], axis=1)
    return np.exp(1j * (2.0 * np.pi / wavelength) * d)


def si_channel(
    transmit: np.ndarray, receive: np.ndarray, rho_si: float, wavelength: float
) -> np.ndarray:
    """(M, N) self-interference channel between the two arrays."""
    t = np.atleast_2d(np.asarray(transmit, dtype=float))
    r = np.atleast_2d(np.asarray(receive, dtype=float))
    d = np.linalg.norm(r[:, None, :] - t[None, :, :], axis=-1)
    return rho_si * np.exp(1j * (2.0 * np.pi / wavelength) * d)


def comm_channels(
    layout: AntennaLayout,
    q_dl: np.ndarray,
    rho_dl: np.ndarray,
    q_ul: np.ndarray,
    rho_ul: np.ndarray,
    wavelength: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Downlink channels h (K, N) from the transmit array and uplink channels
    f (J, M) into the receive array."""
    K = np.asarray(q_dl).shape[0] if np.asarray(q_dl).size else 0
    J = np.asarray(q_ul).shape[0] if np.asarray(q_ul).size else 0
    h = np.zeros((K, layout.n_transmit), dtype=complex)
    for k in range(K):
        h[k] = rho_dl[k] * response_vector(layout.transmit, q_dl[k], wavelength)
    f = np.zeros((J, layout.n_receive), dtype=complex)
    for j in range(J):
        f[j] = rho_ul[j] * response_vector(layout.receive, q_ul[j], wavelength)
    return h, f


def sensing_channels(
    layout: AntennaLayout,
    q_targets: np.ndarray,
    rho_targets: np.ndarray,
    wavelength: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-one round-trip channels G_l = rho_l * g_r g_t^H with the transmit
    and receive response vectors, stacked as (L, M, N), (L, N), (L, M)."""
    L = np.asarray(q_targets).shape[0] if np.asarray(q_targets).size else 0
    N, M = layout.n_transmit, layout.n_receive
    G = np.zeros((L, M, N), dtype=complex)
    g_t = np.zeros((L, N), dtype=complex)
    g_r = np.zeros((L, M), dtype=complex)
    for l in range(L):
        g_t[l] = response_vector(layout.transmit, q_targets[l], wavelength)
        g_r[l] = response_vector(layout.receive, q_targets[l], wavelength)
        G[l] = rho_targets[l] * np.outer(g_r[l], g_t[l].conj())
    return G, g_t, g_r


@dataclass(frozen=True)
class ChannelSet:
    """All channels of one scenario realization, derived from the layout."""

    H_si: np.ndarray  # (M, N)
    h: np.ndarray  # (K, N) downlink
    f: np.ndarray  # (J, M) uplink
    G: np.ndarray  # (L, M, N) sensing
    g_t: np.ndarray  # (L, N)
    g_r: np.ndarray  # (L, M)

    @property
    def n_transmit(self) -> int:
        return self.H_si.shape[1]

    @property
    def n_receive(self) -> int:
        return self.H_si.shape[0]

    def interference_matrix(self, exclude_target: int | None = None) -> np.ndarray:
        """Sum of sensing channels (optionally without one target) plus the SI
        channel; the reflected-plus-leaked path seen by the receive array."""
        A = self.H_si.copy()
        for i in range(self.G.shape[0]):
            if i != exclude_target:
                A = A + self.G[i]
        return A


def build_channels(scenario: Scenario, layout: AntennaLayout | None = None) -> ChannelSet:
    """Synthesize the full channel set for a scenario (or an override layout)."""
    lay = layout if layout is not None else scenario.layout
    lam = scenario.wavelength
    H_si = si_channel(lay.transmit, lay.receive, scenario.rho_si, lam)
    h, f = comm_channels(
        lay, scenario.q_dl, scenario.rho_dl, scenario.q_ul, scenario.rho_ul, lam
    )
    G, g_t, g_r = sensing_channels(lay, scenario.q_targets, scenario.rho_targets, lam)
    return ChannelSet(H_si=H_si, h=h, f=f, G=G, g_t=g_t, g_r=g_r)
