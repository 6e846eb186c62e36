"""Inner-layer optimizer for a fixed antenna layout.

Two alternating blocks:

* Receive beamformers have closed-form optima: whitened matched filters
  against the full interference-plus-noise covariance.
* The transmit block (sensing covariances, lifted downlink beamformers,
  uplink powers) is a difference of concave log terms.  Each iteration
  linearizes the subtracted terms at the current point, which yields a global
  concave minorant of the objective, and maximizes that minorant over the
  feasible set (PSD cones, one trace budget, power box) with projected
  gradient ascent.  Ascent on the minorant can never decrease the true
  objective, so the outer loops are monotone by construction.

All log terms are affine in the design variables, so the whole surrogate is
driven by one stack of Hermitian coefficient matrices built once per
receive-beamformer update.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet
from .errors import NumericalConditioningError, StalledSolverError
from .geometry import Scenario
from .metrics import DesignVariables, lift, transmit_covariance

LN2 = math.log(2.0)

# Relative eigenvalue slack under which a matrix counts as already PSD, so
# projecting a projected point is a no-op.
PSD_SLACK = 1e-14
# Relative trace slack before the budget rescaling triggers.
TRACE_SLACK = 1e-12


class RankOneExtractionWarning(UserWarning):
    """A lifted beamformer matrix was not close to rank one."""


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and caps for the SCA / alternating loops.

    The outer tolerances and iteration caps follow the reference operating
    point (1e-3 / 100); the ascent internals are implementation parameters.
    """

    sca_tol: float = 1e-3
    sca_max_rounds: int = 100
    ao_tol: float = 1e-3
    ao_max_iters: int = 100
    pga_max_steps: int = 2000
    pga_grad_tol_factor: float = 1e-6  # threshold = factor * p_dl_max
    pga_stall_rounds: int = 0  # stop ascent after this many stalled steps (0 = off)
    armijo_start: float = 1.0
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    armijo_growth: float = 2.0  # warm-start factor on the last accepted step
    max_backtracks: int = 60
    max_linesearch_failures: int = 50
    rank_residual_warn: float = 0.05
    condition_limit: float = 1e12


# ---------------------------------------------------------------------------
# Affine log-term stacks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogTerms:
    """T affine forms value_t = const_t + sum_m mask[t,m] Tr{X_m Phi_t} + pcoef_t . p

    Rows are ordered sensing targets, uplink users, downlink users.  The
    design stack X concatenates the sensing covariances (first L slots) and
    the lifted downlink matrices (last K slots).
    """

    Phi: np.ndarray  # (T, N, N) Hermitian
    mask: np.ndarray  # (T, L+K)
    pcoef: np.ndarray  # (T, J)
    const: np.ndarray  # (T,)
    weights: np.ndarray  # (T,)
    n_sensing: int
    n_ul: int
    n_dl: int

    def values(self, X: np.ndarray, p: np.ndarray) -> np.ndarray:
        """(T,) affine values at the stacked point."""
        vals = self.const.copy()
        if X.shape[0]:
            tr = np.einsum("tij,mji->tm", self.Phi, X).real
            vals = vals + (tr * self.mask).sum(axis=1)
        if p.shape[0]:
            vals = vals + self.pcoef @ p
        return vals

    def weighted_log_sum(self, X: np.ndarray, p: np.ndarray) -> float:
        return float(np.dot(self.weights, np.log2(self.values(X, p))))

    def group_log_sums(self, X: np.ndarray, p: np.ndarray) -> np.ndarray:
        """(3,) weighted log sums split by sensing / uplink / downlink rows."""
        logs = self.weights * np.log2(self.values(X, p))
        s, u = self.n_sensing, self.n_ul
        return np.array([logs[:s].sum(), logs[s:s + u].sum(), logs[s + u:].sum()])

    def log_gradient(self, X: np.ndarray, p: np.ndarray,
                     rows: slice | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of the weighted log sum (optionally over a row range)
        with respect to (X, p)."""
        sel = slice(None) if rows is None else rows
        vals = self.values(X, p)[sel]
        wgt = self.weights[sel] / (LN2 * vals)
        gX = np.einsum("t,tm,tij->mij", wgt, self.mask[sel], self.Phi[sel])
        gp = (wgt[:, None] * self.pcoef[sel]).sum(axis=0) if self.pcoef.shape[1] else np.zeros(0)
        return gX, gp


def build_log_terms(
    ch: ChannelSet, u: np.ndarray, b: np.ndarray, scenario: Scenario
) -> tuple[LogTerms, LogTerms]:
    """Coefficient stacks of the signal-plus-interference ("alpha") and
    interference-only ("beta") log terms for fixed receive beamformers."""
    L, J, K = scenario.n_targets, scenario.n_ul, scenario.n_dl
    N = ch.n_transmit
    T = L + J + K
    n_mats = L + K

    Phi_a = np.zeros((T, N, N), dtype=complex)
    Phi_b = np.zeros((T, N, N), dtype=complex)
    mask_a = np.ones((T, n_mats))
    mask_b = np.ones((T, n_mats))
    pcoef_a = np.zeros((T, J))
    pcoef_b = np.zeros((T, J))
    const = np.zeros(T)
    weights = np.concatenate(
        [scenario.weight_targets, scenario.weight_ul, scenario.weight_dl]
    )

    for l in range(L):
        A_l = ch.interference_matrix(exclude_target=l)
        v = A_l.conj().T @ u[l]
        s = ch.G[l].conj().T @ u[l]
        Phi_b[l] = np.outer(v, v.conj())
        Phi_a[l] = Phi_b[l] + np.outer(s, s.conj())
        for j in range(J):
            pcoef_a[l, j] = pcoef_b[l, j] = abs(np.vdot(u[l], ch.f[j])) ** 2
        const[l] = scenario.noise_bs

    A = ch.interference_matrix()
    for j in range(J):
        t = L + j
        v = A.conj().T @ b[j]
        Phi_a[t] = Phi_b[t] = np.outer(v, v.conj())
        for i in range(J):
            gain = abs(np.vdot(b[j], ch.f[i])) ** 2
            pcoef_a[t, i] = gain
            pcoef_b[t, i] = 0.0 if i == j else gain
        const[t] = scenario.noise_bs

    for k in range(K):
        t = L + J + k
        Phi_a[t] = Phi_b[t] = np.outer(ch.h[k], ch.h[k].conj())
        mask_b[t, L + k] = 0.0  # the own lifted beamformer is signal, not interference
        const[t] = scenario.noise_dl[k]

    common = dict(pcoef=pcoef_a, const=const, weights=weights,
                  n_sensing=L, n_ul=J, n_dl=K)
    alpha = LogTerms(Phi=Phi_a, mask=mask_a, **common)
    beta = LogTerms(Phi=Phi_b, mask=mask_b, pcoef=pcoef_b, const=const,
                    weights=weights, n_sensing=L, n_ul=J, n_dl=K)
    return alpha, beta


def stack_design(dv: DesignVariables) -> tuple[np.ndarray, np.ndarray]:
    """(S_1..S_L, W_1..W_K) stack and the power vector."""
    N = dv.S.shape[-1] if dv.S.ndim == 3 else dv.W.shape[-1]
    X = np.concatenate([dv.S.reshape(-1, N, N), dv.W.reshape(-1, N, N)], axis=0)
    return X.astype(complex), dv.p.astype(float)


def wsr_lifted(alpha: LogTerms, beta: LogTerms, X: np.ndarray, p: np.ndarray) -> float:
    """Weighted sum rate with the lifted downlink matrices (equals the vector
    form whenever every W_k is exactly rank one)."""
    return alpha.weighted_log_sum(X, p) - beta.weighted_log_sum(X, p)


# ---------------------------------------------------------------------------
# Closed-form receive beamformers
# ---------------------------------------------------------------------------


def _solve_whitened(Q: np.ndarray, g: np.ndarray, condition_limit: float) -> np.ndarray:
    evals = np.linalg.eigvalsh(Q)
    if evals[0] <= 0 or evals[-1] / evals[0] > condition_limit:
        raise NumericalConditioningError(
            f"receive covariance condition {evals[-1] / max(evals[0], 1e-300):.3e} "
            f"exceeds {condition_limit:.1e}"
        )
    v = np.linalg.solve(Q, g)
    return v / np.linalg.norm(v)


def _excitation_vector(dv: DesignVariables, n_transmit: int) -> np.ndarray:
    """Deterministic realization of the transmitted signal direction: the sum
    of the downlink beamformers plus, per sensing covariance, its dominant
    eigenvector scaled to sqrt(tr S_l)."""
    x = np.zeros(n_transmit, dtype=complex)
    if dv.w.shape[0]:
        x = x + dv.w.sum(axis=0)
    for i in range(dv.n_targets):
        tr = float(np.real(np.trace(dv.S[i])))
        if tr > 0:
            _, evecs = np.linalg.eigh(dv.S[i])
            x = x + math.sqrt(tr) * evecs[:, -1]
    return x


def _sensing_excitation(ch: ChannelSet, l: int, xbar: np.ndarray) -> np.ndarray:
    """Image of the transmit excitation under target l's channel.

    Proportional to the receive response vector whenever g_t^H xbar != 0, so
    the realization choice cannot change the SINR optimum; a degenerate
    excitation falls back to the response vector itself.
    """
    g = ch.G[l] @ xbar
    scale = abs(ch.G[l]).max() * math.sqrt(ch.n_transmit) * max(np.linalg.norm(xbar), 1.0)
    if not np.all(np.isfinite(g)) or np.linalg.norm(g) <= 1e-12 * scale:
        g = ch.G[l] @ ch.g_t[l]  # always a nonzero multiple of the receive response
    return g


def optimal_rx_beamformers(
    dv: DesignVariables,
    ch: ChannelSet,
    noise_bs: float,
    condition_limit: float = SolverOptions.condition_limit,
) -> tuple[np.ndarray, np.ndarray]:
    """SINR-optimal unit-norm receive beamformers for every target and
    uplink user, given the current transmit-side variables."""
    L, J = dv.n_targets, dv.n_ul
    M = ch.n_receive
    R = transmit_covariance(dv.S, dv.w)
    eye = np.eye(M, dtype=complex)

    ul_outer = np.zeros((M, M), dtype=complex)
    for j in range(J):
        ul_outer += dv.p[j] * np.outer(ch.f[j], ch.f[j].conj())

    xbar = _excitation_vector(dv, ch.n_transmit)
    u = np.zeros((L, M), dtype=complex)
    for l in range(L):
        A_l = ch.interference_matrix(exclude_target=l)
        Q = ul_outer + A_l @ R @ A_l.conj().T + noise_bs * eye
        Q = 0.5 * (Q + Q.conj().T)
        u[l] = _solve_whitened(Q, _sensing_excitation(ch, l, xbar), condition_limit)

    A = ch.interference_matrix()
    ARA = A @ R @ A.conj().T
    b = np.zeros((J, M), dtype=complex)
    for j in range(J):
        Q = ul_outer - dv.p[j] * np.outer(ch.f[j], ch.f[j].conj()) + ARA + noise_bs * eye
        Q = 0.5 * (Q + Q.conj().T)
        target = ch.f[j] if dv.p[j] == 0.0 else math.sqrt(dv.p[j]) * ch.f[j]
        b[j] = _solve_whitened(Q, target, condition_limit)
    return u, b


# ---------------------------------------------------------------------------
# Surrogate expansion and evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurrogateExpansion:
    """First-order expansion of the subtracted concave terms at an anchor.

    Group index 0 covers the sensing terms, 1 the uplink terms, 2 the
    downlink terms.  Gradient matrices are Hermitian PSD by construction.
    """

    X0: np.ndarray  # (L+K, N, N) anchor stack
    p0: np.ndarray  # (J,)
    beta_values: np.ndarray  # (3,)
    grad_X: np.ndarray  # (3, L+K, N, N)
    grad_p: np.ndarray  # (3, J)
    alpha: LogTerms
    beta: LogTerms

    @property
    def grad_S(self) -> np.ndarray:
        return self.grad_X[:, : self.beta.n_sensing]

    @property
    def grad_W(self) -> np.ndarray:
        return self.grad_X[:, self.beta.n_sensing:]

    def linearized_beta(self, X: np.ndarray, p: np.ndarray) -> float:
        """Sum of the three linearized overestimates at (X, p)."""
        return float(self.linearized_beta_groups(X, p).sum())

    def linearized_beta_groups(self, X: np.ndarray, p: np.ndarray) -> np.ndarray:
        """(3,) per-group linearized overestimates at (X, p)."""
        out = self.beta_values.copy()
        dX = X - self.X0
        if dX.size:
            out += np.einsum("gmij,mij->g", self.grad_X.conj(), dX).real
        if p.shape[0]:
            out += self.grad_p @ (p - self.p0)
        return out


def surrogate_gradients(
    dv: DesignVariables, ch: ChannelSet, scenario: Scenario
) -> SurrogateExpansion:
    """Values and gradients of the subtracted log terms at the anchor point."""
    alpha, beta = build_log_terms(ch, dv.u, dv.b, scenario)
    X0, p0 = stack_design(dv)
    values = beta.group_log_sums(X0, p0)
    n_mats = X0.shape[0]
    N = ch.n_transmit
    grad_X = np.zeros((3, n_mats, N, N), dtype=complex)
    grad_p = np.zeros((3, p0.shape[0]))
    L, J = beta.n_sensing, beta.n_ul
    groups = [slice(0, L), slice(L, L + J), slice(L + J, None)]
    for g, rows in enumerate(groups):
        gX, gp = beta.log_gradient(X0, p0, rows=rows)
        grad_X[g] = 0.5 * (gX + np.conj(np.swapaxes(gX, -1, -2)))
        if gp.shape[0]:
            grad_p[g] = gp
    return SurrogateExpansion(
        X0=X0, p0=p0, beta_values=values, grad_X=grad_X, grad_p=grad_p,
        alpha=alpha, beta=beta,
    )


def surrogate_eval(
    dv: DesignVariables,
    ch: ChannelSet,
    scenario: Scenario,
    anchor: SurrogateExpansion,
) -> float:
    """Concave minorant value at (dv.S, dv.W, dv.p).

    Equals the lifted weighted sum rate at the anchor and never exceeds it
    elsewhere.  The receive beamformers are those baked into the anchor.
    """
    X, p = stack_design(dv)
    return anchor.alpha.weighted_log_sum(X, p) - anchor.linearized_beta(X, p)


# ---------------------------------------------------------------------------
# Feasible-set projection and projected gradient ascent
# ---------------------------------------------------------------------------


def _trace_water_level(evals: np.ndarray, budget: float) -> float:
    """Shift mu >= 0 with sum(max(evals - mu, 0)) == budget (pooled over all
    matrices), assuming sum(max(evals, 0)) > budget."""
    lam = np.sort(evals.ravel())[::-1]
    csum = np.cumsum(lam)
    k = np.arange(1, lam.size + 1)
    mu_candidates = (csum - budget) / k
    active = mu_candidates < lam  # largest k with lam_k > mu
    k_star = int(np.nonzero(active)[0][-1])
    return float(mu_candidates[k_star])


def project_feasible(
    X: np.ndarray, p: np.ndarray, p_dl_max: float, p_ul_max: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact Euclidean projection onto {every matrix PSD, total trace <=
    p_dl_max} x {0 <= p <= p_ul_max}.

    The coupled PSD-cone/trace-budget projection shifts all eigenvalues by a
    shared water level before clipping (uniform rescaling instead would bend
    ascent directions at the budget boundary).  Already-feasible inputs pass
    through unchanged, so the map is idempotent.
    """
    out = X
    if X.shape[0]:
        evals, evecs = np.linalg.eigh(X)
        floor = -PSD_SLACK * max(float(np.abs(evals).max()), 1e-300)
        total_clipped = float(np.clip(evals, 0.0, None).sum())
        over_budget = total_clipped > p_dl_max * (1.0 + TRACE_SLACK)
        if evals.min() < floor or over_budget:
            mu = _trace_water_level(evals, p_dl_max) if over_budget else 0.0
            new_evals = np.clip(evals - mu, 0.0, None)
            rebuilt = np.einsum("mij,mj,mkj->mik", evecs, new_evals, evecs.conj())
            out = 0.5 * (rebuilt + np.conj(np.swapaxes(rebuilt, -1, -2)))
    p_out = np.clip(p, 0.0, p_ul_max) if p.shape[0] else p
    return out, p_out


def _inner(gX: np.ndarray, gp: np.ndarray, dX: np.ndarray, dp: np.ndarray) -> float:
    total = 0.0
    if dX.size:
        total += float(np.sum(gX.conj() * dX).real)
    if dp.shape[0]:
        total += float(gp @ dp)
    return total


def _ascend_surrogate(
    anchor: SurrogateExpansion,
    scenario: Scenario,
    opts: SolverOptions,
) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Maximize the concave minorant over the feasible set, starting at the
    anchor.

    Returns the final stack, powers, the ascent step count, and whether the
    run ended on a failed line search.  A failed search (no representable
    ascent across all backtracks) means the round is done: near the noise
    floor the log terms are barrier-like and float cancellation caps the
    attainable resolution.
    """

    lin_X = anchor.grad_X.sum(axis=0)
    lin_p = anchor.grad_p.sum(axis=0)
    const = float(anchor.beta_values.sum()) - _inner(lin_X, lin_p, anchor.X0, anchor.p0)

    def objective(X, p):
        return anchor.alpha.weighted_log_sum(X, p) - _inner(lin_X, lin_p, X, p) - const

    X, p = project_feasible(anchor.X0, anchor.p0, scenario.p_dl_max, scenario.p_ul_max)
    f = objective(X, p)
    grad_tol = opts.pga_grad_tol_factor * scenario.p_dl_max
    step = opts.armijo_start
    stalls = 0
    steps_taken = 0
    failed = False

    for _ in range(opts.pga_max_steps):
        gX, gp = anchor.alpha.log_gradient(X, p)
        gX = gX - lin_X
        gp = (gp - lin_p) if gp.shape[0] else gp

        # Gradient-mapping stationarity test at unit step.
        Xu, pu = project_feasible(
            X + gX, p + gp, scenario.p_dl_max, scenario.p_ul_max,
        )
        pg_norm = math.sqrt(
            float(np.sum(np.abs(Xu - X) ** 2)) + float(np.sum((pu - p) ** 2))
        )
        if pg_norm < grad_tol:
            break

        accepted = False
        s = step
        for _ in range(opts.max_backtracks):
            Xt, pt = project_feasible(
                X + s * gX, p + s * gp, scenario.p_dl_max, scenario.p_ul_max,
            )
            ft = objective(Xt, pt)
            gain = ft - f
            directional = _inner(gX, gp, Xt - X, pt - p)
            if gain > 0.0 and gain >= opts.armijo_slope * max(directional, 0.0):
                if opts.pga_stall_rounds and gain <= 1e-12 * (abs(f) + 1.0):
                    stalls += 1
                else:
                    stalls = 0
                X, p, f = Xt, pt, ft
                step = s * opts.armijo_growth
                accepted = True
                break
            s *= opts.armijo_shrink
        steps_taken += 1
        if not accepted:
            failed = True
            break
        if opts.pga_stall_rounds and stalls >= opts.pga_stall_rounds:
            break
    return X, p, steps_taken, failed


# ---------------------------------------------------------------------------
# Rank-one extraction
# ---------------------------------------------------------------------------


def extract_rank1(
    W: np.ndarray, warn_threshold: float = SolverOptions.rank_residual_warn
) -> tuple[np.ndarray, float]:
    """Principal eigenpair beamformer sqrt(l1) v1 and the relative residual
    ||W - w w^H||_F / ||W||_F."""
    W = np.asarray(W, dtype=complex)
    norm = float(np.linalg.norm(W))
    if norm == 0.0:
        return np.zeros(W.shape[0], dtype=complex), 0.0
    evals, evecs = np.linalg.eigh(0.5 * (W + W.conj().T))
    lead = max(float(evals[-1]), 0.0)
    w = math.sqrt(lead) * evecs[:, -1]
    residual = float(np.linalg.norm(W - np.outer(w, w.conj())) / norm)
    if residual > warn_threshold:
        warnings.warn(
            f"lifted beamformer rank-one residual {residual:.3f} exceeds "
            f"{warn_threshold}", RankOneExtractionWarning, stacklevel=2,
        )
    return w, residual


# ---------------------------------------------------------------------------
# SCA rounds
# ---------------------------------------------------------------------------


@dataclass
class SCADiagnostics:
    rounds: int = 0
    ascent_steps: int = 0
    surrogate_trace: list = field(default_factory=list)
    lifted_wsr: float = 0.0
    extracted_wsr: float | None = None
    rank_residuals: np.ndarray | None = None


def solve_sca_subproblem(
    dv: DesignVariables,
    ch: ChannelSet,
    scenario: Scenario,
    opts: SolverOptions = SolverOptions(),
) -> tuple[DesignVariables, SCADiagnostics]:
    """Ascend the transmit-side variables from a feasible anchor at fixed
    receive beamformers; re-anchors the minorant until its optimum stalls."""
    diag = SCADiagnostics()
    L = dv.n_targets
    current = dv.copy()
    X, p = stack_design(current)
    X, p = project_feasible(X, p, scenario.p_dl_max, scenario.p_ul_max)

    alpha, beta = build_log_terms(ch, current.u, current.b, scenario)
    obj_prev = wsr_lifted(alpha, beta, X, p)
    diag.surrogate_trace.append(obj_prev)

    consecutive_failures = 0
    for _ in range(opts.sca_max_rounds):
        anchor_dv = _design_from_stack(current, X, p, L)
        anchor = surrogate_gradients(anchor_dv, ch, scenario)
        lifted_anchor = wsr_lifted(anchor.alpha, anchor.beta, X, p)
        X_new, p_new, steps, failed = _ascend_surrogate(anchor, scenario, opts)
        diag.rounds += 1
        diag.ascent_steps += steps
        if failed:
            consecutive_failures += 1
            if consecutive_failures >= opts.max_linesearch_failures:
                raise StalledSolverError(
                    f"ascent line search failed in {consecutive_failures} "
                    "consecutive rounds",
                    last_iterate=_design_from_stack(current, X_new, p_new, L),
                )
        else:
            consecutive_failures = 0

        obj_new = (anchor.alpha.weighted_log_sum(X_new, p_new)
                   - anchor.linearized_beta(X_new, p_new))
        lifted_new = wsr_lifted(anchor.alpha, anchor.beta, X_new, p_new)
        if lifted_new < lifted_anchor - 1e-9:
            # Cannot happen with a monotone line search; keep the anchor.
            break
        X, p = X_new, p_new
        diag.surrogate_trace.append(obj_new)
        if obj_new - obj_prev < opts.sca_tol:
            obj_prev = obj_new
            break
        obj_prev = obj_new

    diag.lifted_wsr = wsr_lifted(alpha, beta, X, p)
    out = _design_from_stack(current, X, p, L)
    w = np.zeros_like(current.w)
    residuals = np.zeros(out.W.shape[0])
    for k in range(out.W.shape[0]):
        # A switched-off beamformer has a pure-noise residual ratio; only
        # warn when the matrix carries real power.
        tr = float(np.real(np.trace(out.W[k])))
        warn_at = opts.rank_residual_warn if tr > 1e-9 * scenario.p_dl_max else np.inf
        w[k], residuals[k] = extract_rank1(out.W[k], warn_at)
    out.w = w
    diag.rank_residuals = residuals
    diag.extracted_wsr = wsr_lifted(alpha, beta,
                                    np.concatenate([out.S, lift(w)], axis=0), p)
    return out, diag


def _design_from_stack(
    template: DesignVariables, X: np.ndarray, p: np.ndarray, n_targets: int
) -> DesignVariables:
    return DesignVariables(
        u=template.u.copy(), b=template.b.copy(), w=template.w.copy(),
        S=X[:n_targets].copy(), p=p.copy(), W=X[n_targets:].copy(),
    )


# ---------------------------------------------------------------------------
# Alternating optimization
# ---------------------------------------------------------------------------


@dataclass
class OptimizationTrace:
    """Per-iteration audit trail of the alternating loop."""

    wsr_values: list = field(default_factory=list)
    surrogate_values: list = field(default_factory=list)
    sca_rounds: list = field(default_factory=list)
    ascent_steps: list = field(default_factory=list)
    lifted_wsr: list = field(default_factory=list)
    extracted_wsr: list = field(default_factory=list)
    rank_residuals: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.wsr_values) - 1


def initial_point(
    ch: ChannelSet, scenario: Scenario, rng: np.random.Generator | int | None = 0
) -> DesignVariables:
    """Feasible start: equal-power matched beamformers toward each downlink
    user, isotropic sensing covariances, full uplink power, random unit
    receive beamformers (immediately replaced by their closed forms)."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    L, J, K = scenario.n_targets, scenario.n_ul, scenario.n_dl
    N, M = ch.n_transmit, ch.n_receive
    share = scenario.p_dl_max / max(L + K, 1)
    w = np.zeros((K, N), dtype=complex)
    for k in range(K):
        h = ch.h[k]
        w[k] = math.sqrt(share) * h / np.linalg.norm(h)
    S = np.tile((share / N) * np.eye(N, dtype=complex), (L, 1, 1))
    p = np.full(J, scenario.p_ul_max)

    def unit_rows(count):
        v = rng.standard_normal((count, M)) + 1j * rng.standard_normal((count, M))
        if count:
            v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v

    return DesignVariables(u=unit_rows(L), b=unit_rows(J), w=w, S=S, p=p)


def alternating_optimize(
    dv: DesignVariables | None,
    ch: ChannelSet,
    scenario: Scenario,
    opts: SolverOptions = SolverOptions(),
    rng: np.random.Generator | int | None = 0,
) -> tuple[DesignVariables, OptimizationTrace]:
    """Alternate the closed-form receive update with the transmit-side SCA
    until the objective stalls.  The reported objective is the vector-form
    weighted sum rate and never decreases along the trace: a transmit update
    whose extracted beamformers lose more than the lifted gain is rejected.
    """
    if dv is None:
        dv = initial_point(ch, scenario, rng)
    current = dv.copy()
    trace = OptimizationTrace()

    alpha0, beta0 = build_log_terms(ch, current.u, current.b, scenario)
    X0, p0 = stack_design(current)
    wsr_now = wsr_lifted(alpha0, beta0,
                         np.concatenate([current.S, lift(current.w)], axis=0), p0)
    trace.wsr_values.append(wsr_now)

    for _ in range(opts.ao_max_iters):
        u, b = optimal_rx_beamformers(current, ch, scenario.noise_bs,
                                      opts.condition_limit)
        current.u, current.b = u, b
        alpha, beta = build_log_terms(ch, u, b, scenario)
        X_r1 = np.concatenate([current.S, lift(current.w)], axis=0)
        wsr_rx = wsr_lifted(alpha, beta, X_r1, current.p)

        candidate, diag = solve_sca_subproblem(current, ch, scenario, opts)
        X_cand = np.concatenate([candidate.S, lift(candidate.w)], axis=0)
        wsr_cand = wsr_lifted(alpha, beta, X_cand, candidate.p)

        trace.sca_rounds.append(diag.rounds)
        trace.ascent_steps.append(diag.ascent_steps)
        trace.surrogate_values.append(diag.surrogate_trace[-1])
        trace.lifted_wsr.append(diag.lifted_wsr)
        trace.extracted_wsr.append(diag.extracted_wsr)
        trace.rank_residuals.append(diag.rank_residuals)

        if wsr_cand >= wsr_rx:
            current = candidate
            # Re-anchor the next subproblem at the extracted beamformers so
            # the reported objective and the anchor value coincide.
            current.W = lift(current.w)
            wsr_new = wsr_cand
        else:
            # Extraction lost more than the lifted ascent gained; keep the
            # previous transmit variables under the refreshed receive side.
            wsr_new = wsr_rx
        trace.wsr_values.append(wsr_new)
        if wsr_new - wsr_now < opts.ao_tol:
            wsr_now = wsr_new
            break
        wsr_now = wsr_new

    current.W = lift(current.w)
    return current, trace
