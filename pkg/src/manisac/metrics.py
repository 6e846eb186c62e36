"""SINRs, rates, and the weighted sum rate.

These are the exact covariance-level expressions: the sensing SINR sees the
full reflected-plus-leaked interference quadratic form, the uplink SINR the
same plus other uplink users, and the downlink SINR the usual multi-user plus
sensing-signal terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .geometry import Scenario


@dataclass
class DesignVariables:
    """One point of the design space the inner optimizer works over.

    ``w`` is the physical beamformer; ``W`` is its lifted matrix iterate kept
    alongside so the relaxed subproblem and the extracted vectors never get
    conflated.  Shapes: u (L, M), b (J, M), w (K, N), W (K, N, N), S (L, N, N),
    p (J,).
    """

    u: np.ndarray
    b: np.ndarray
    w: np.ndarray
    S: np.ndarray
    p: np.ndarray
    W: np.ndarray | None = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.b = np.asarray(self.b, dtype=complex)
        self.w = np.asarray(self.w, dtype=complex)
        self.S = np.asarray(self.S, dtype=complex)
        self.p = np.asarray(self.p, dtype=float)
        if self.W is None:
            self.W = lift(self.w)
        else:
            self.W = np.asarray(self.W, dtype=complex)

    @property
    def n_targets(self) -> int:
        return self.S.shape[0]

    @property
    def n_ul(self) -> int:
        return self.p.shape[0]

    @property
    def n_dl(self) -> int:
        return self.w.shape[0]

    def copy(self) -> "DesignVariables":
        return DesignVariables(
            u=self.u.copy(), b=self.b.copy(), w=self.w.copy(),
            S=self.S.copy(), p=self.p.copy(), W=self.W.copy(),
        )


def lift(w: np.ndarray) -> np.ndarray:
    """Rank-one lifted matrices w_k w_k^H stacked as (K, N, N)."""
    w = np.asarray(w, dtype=complex)
    if w.ndim != 2:
        raise ValueError("w must be (K, N)")
    return np.einsum("ki,kj->kij", w, w.conj())


def transmit_covariance(S: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Covariance of the transmitted signal: sum of sensing covariances plus
    the rank-one beamformer outer products."""
    S = np.asarray(S, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if S.ndim == 3:
        n = S.shape[-1]
    elif w.ndim == 2:
        n = w.shape[-1]
    else:
        raise ValueError("need S as (L, N, N) or w as (K, N)")
    R = np.zeros((n, n), dtype=complex)
    if S.ndim == 3 and S.shape[0] > 0:
        R += S.sum(axis=0)
    if w.ndim == 2 and w.shape[0] > 0:
        R += np.einsum("ki,kj->ij", w, w.conj())
    return 0.5 * (R + R.conj().T)


def _quad(v: np.ndarray, M: np.ndarray) -> float:
    """Real value of v^H M v."""
    return float(np.real(np.vdot(v, M @ v)))


def _rx_noise_interference(
    dv: DesignVariables, ch: ChannelSet, noise_bs: float,
    exclude_target: int | None, exclude_ul: int | None,
) -> np.ndarray:
    """Interference-plus-noise covariance at the receive array."""
    M = ch.n_receive
    Q = noise_bs * np.eye(M, dtype=complex)
    for j in range(dv.n_ul):
        if j != exclude_ul:
            Q += dv.p[j] * np.outer(ch.f[j], ch.f[j].conj())
    A = ch.interference_matrix(exclude_target=exclude_target)
    R = transmit_covariance(dv.S, dv.w)
    Q += A @ R @ A.conj().T
    return 0.5 * (Q + Q.conj().T)


def sensing_sinr(l: int, dv: DesignVariables, ch: ChannelSet, noise_bs: float) -> float:
    """Output SINR of the receive beamformer pointed at target l."""
    u = dv.u[l]
    R = transmit_covariance(dv.S, dv.w)
    G = ch.G[l]
    signal = _quad(u, G @ R @ G.conj().T)
    Q = _rx_noise_interference(dv, ch, noise_bs, exclude_target=l, exclude_ul=None)
    return max(signal, 0.0) / _quad(u, Q)


def ul_sinr(j: int, dv: DesignVariables, ch: ChannelSet, noise_bs: float) -> float:
    """Receive SINR of uplink user j after its receive beamformer."""
    b = dv.b[j]
    signal = dv.p[j] * abs(np.vdot(b, ch.f[j])) ** 2
    Q = _rx_noise_interference(dv, ch, noise_bs, exclude_target=None, exclude_ul=j)
    return max(signal, 0.0) / _quad(b, Q)


def dl_sinr(k: int, dv: DesignVariables, ch: ChannelSet, noise_k: float) -> float:
    """SINR at downlink user k."""
    h = ch.h[k]
    signal = abs(np.vdot(h, dv.w[k])) ** 2
    den = noise_k
    for i in range(dv.n_dl):
        if i != k:
            den += abs(np.vdot(h, dv.w[i])) ** 2
    for l in range(dv.n_targets):
        den += max(_quad(h, dv.S[l]), 0.0)
    return max(signal, 0.0) / den


@dataclass(frozen=True)
class RateReport:
    """Per-stream SINRs and rates plus the scalar objective."""

    gamma_targets: np.ndarray
    gamma_ul: np.ndarray
    gamma_dl: np.ndarray
    rate_targets: np.ndarray
    rate_ul: np.ndarray
    rate_dl: np.ndarray
    wsr: float


def wsr(dv: DesignVariables, ch: ChannelSet, scenario: Scenario) -> RateReport:
    """Weighted sum of sensing, uplink, and downlink rates."""
    g_s = np.array([sensing_sinr(l, dv, ch, scenario.noise_bs)
                    for l in range(dv.n_targets)])
    g_u = np.array([ul_sinr(j, dv, ch, scenario.noise_bs)
                    for j in range(dv.n_ul)])
    g_d = np.array([dl_sinr(k, dv, ch, scenario.noise_dl[k])
                    for k in range(dv.n_dl)])
    r_s = np.log2(1.0 + g_s)
    r_u = np.log2(1.0 + g_u)
    r_d = np.log2(1.0 + g_d)
    total = float(
        np.dot(scenario.weight_targets, r_s)
        + np.dot(scenario.weight_ul, r_u)
        + np.dot(scenario.weight_dl, r_d)
    )
    return RateReport(
        gamma_targets=g_s, gamma_ul=g_u, gamma_dl=g_d,
        rate_targets=r_s, rate_ul=r_u, rate_dl=r_d, wsr=total,
    )
