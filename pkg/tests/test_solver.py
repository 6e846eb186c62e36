import numpy as np
import pytest

from manisac.channels import build_channels
from manisac.metrics import DesignVariables, lift, wsr
from manisac.solver import (
    RankOneExtractionWarning,
    SolverOptions,
    alternating_optimize,
    build_log_terms,
    extract_rank1,
    initial_point,
    optimal_rx_beamformers,
    project_feasible,
    solve_sca_subproblem,
    stack_design,
    surrogate_eval,
    surrogate_gradients,
    wsr_lifted,
)
from tests.conftest import desk_scenario


def random_feasible(sc, ch, rng, budget_fraction=None):
    """Random feasible design variables (general-rank lifted matrices)."""
    L, J, K = sc.n_targets, sc.n_ul, sc.n_dl
    N, M = ch.n_transmit, ch.n_receive
    mats = []
    for _ in range(L + K):
        B = rng.standard_normal((N, 2)) + 1j * rng.standard_normal((N, 2))
        mats.append(B @ B.conj().T)
    X = np.array(mats) if mats else np.zeros((0, N, N), dtype=complex)
    total = np.einsum("mii->", X).real
    frac = rng.uniform(0.2, 1.0) if budget_fraction is None else budget_fraction
    if total > 0:
        X *= frac * sc.p_dl_max / total
    u = rng.standard_normal((L, M)) + 1j * rng.standard_normal((L, M))
    b = rng.standard_normal((J, M)) + 1j * rng.standard_normal((J, M))
    if L:
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    if J:
        b /= np.linalg.norm(b, axis=1, keepdims=True)
    p = rng.uniform(0, sc.p_ul_max, size=J)
    w = np.zeros((K, N), dtype=complex)  # placeholder; lifted form is X[L:]
    dv = DesignVariables(u=u, b=b, w=w, S=X[:L], p=p, W=X[L:])
    return dv


def rank1_feasible(sc, ch, rng):
    """Random feasible point whose lifted matrices are exact rank-one lifts."""
    L, J, K = sc.n_targets, sc.n_ul, sc.n_dl
    N, M = ch.n_transmit, ch.n_receive
    w = rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))
    S = []
    for _ in range(L):
        B = rng.standard_normal((N, 2)) + 1j * rng.standard_normal((N, 2))
        S.append(B @ B.conj().T)
    S = np.array(S) if S else np.zeros((0, N, N), dtype=complex)
    total = np.einsum("lii->", S).real + np.sum(np.abs(w) ** 2)
    scale = rng.uniform(0.2, 1.0) * sc.p_dl_max / total
    S *= scale
    w *= np.sqrt(scale)
    u = rng.standard_normal((L, M)) + 1j * rng.standard_normal((L, M))
    b = rng.standard_normal((J, M)) + 1j * rng.standard_normal((J, M))
    if L:
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    if J:
        b /= np.linalg.norm(b, axis=1, keepdims=True)
    p = rng.uniform(0, sc.p_ul_max, size=J)
    return DesignVariables(u=u, b=b, w=w, S=S, p=p)


# ---------------------------------------------------------------------------
# Surrogate: anchor equality, overestimates, gradients
# ---------------------------------------------------------------------------


def test_anchor_equality_matches_true_wsr():
    sc = desk_scenario(seed=0)
    ch = build_channels(sc)
    rng = np.random.default_rng(1)
    for _ in range(5):
        dv = rank1_feasible(sc, ch, rng)
        anchor = surrogate_gradients(dv, ch, sc)
        target = wsr(dv, ch, sc).wsr
        got = surrogate_eval(dv, ch, sc, anchor)
        assert got == pytest.approx(target, rel=1e-9)


def test_surrogate_never_exceeds_lifted_wsr():
    sc = desk_scenario(seed=2)
    ch = build_channels(sc)
    rng = np.random.default_rng(3)
    dv0 = rank1_feasible(sc, ch, rng)
    anchor = surrogate_gradients(dv0, ch, sc)
    for _ in range(200):
        dv = random_feasible(sc, ch, rng)
        dv.u, dv.b = dv0.u, dv0.b  # surrogate is defined at the anchor's rx side
        X, p = stack_design(dv)
        lifted = wsr_lifted(anchor.alpha, anchor.beta, X, p)
        surrogate = surrogate_eval(dv, ch, sc, anchor)
        assert surrogate <= lifted + 1e-9


def test_betahat_overestimates_each_group():
    sc = desk_scenario(seed=4)
    ch = build_channels(sc)
    rng = np.random.default_rng(5)
    dv0 = rank1_feasible(sc, ch, rng)
    anchor = surrogate_gradients(dv0, ch, sc)
    for _ in range(200):
        dv = random_feasible(sc, ch, rng)
        X, p = stack_design(dv)
        beta_true = anchor.beta.group_log_sums(X, p)
        beta_hat = anchor.linearized_beta_groups(X, p)
        assert np.all(beta_hat >= beta_true - 1e-9)


def test_gradient_matrices_hermitian_psd():
    sc = desk_scenario(seed=6)
    ch = build_channels(sc)
    rng = np.random.default_rng(7)
    dv = rank1_feasible(sc, ch, rng)
    anchor = surrogate_gradients(dv, ch, sc)
    for g in range(3):
        for m in range(anchor.grad_X.shape[1]):
            G = anchor.grad_X[g, m]
            assert np.allclose(G, G.conj().T, atol=1e-18)
            evals = np.linalg.eigvalsh(G)
            assert evals.min() >= -1e-12 * max(abs(evals).max(), 1e-300)


def test_gradients_match_central_differences():
    sc = desk_scenario(seed=8)
    ch = build_channels(sc)
    rng = np.random.default_rng(9)
    dv = rank1_feasible(sc, ch, rng)
    anchor = surrogate_gradients(dv, ch, sc)
    X0, p0 = anchor.X0, anchor.p0
    n_mats, N = X0.shape[0], X0.shape[1]
    J = p0.shape[0]
    eps = 1e-6 * sc.p_dl_max

    for trial in range(100):
        dX = rng.standard_normal((n_mats, N, N)) + 1j * rng.standard_normal((n_mats, N, N))
        dX = 0.5 * (dX + np.conj(np.swapaxes(dX, -1, -2)))
        dp = rng.standard_normal(J)
        norm = np.sqrt(np.sum(np.abs(dX) ** 2) + np.sum(dp**2))
        dX /= norm
        dp /= norm

        for g in range(3):
            analytic = float(
                np.sum(anchor.grad_X[g].conj() * dX).real + anchor.grad_p[g] @ dp
            )
            plus = anchor.beta.group_log_sums(X0 + eps * dX, p0 + eps * dp)[g]
            minus = anchor.beta.group_log_sums(X0 - eps * dX, p0 - eps * dp)[g]
            fd = (plus - minus) / (2 * eps)
            assert fd == pytest.approx(analytic, rel=1e-4, abs=1e-10)

        # Analytic alpha-side gradient checked the same way.
        gX, gp = anchor.alpha.log_gradient(X0, p0)
        analytic = float(np.sum(gX.conj() * dX).real + (gp @ dp if J else 0.0))
        plus = anchor.alpha.weighted_log_sum(X0 + eps * dX, p0 + eps * dp)
        minus = anchor.alpha.weighted_log_sum(X0 - eps * dX, p0 - eps * dp)
        fd = (plus - minus) / (2 * eps)
        assert fd == pytest.approx(analytic, rel=1e-4, abs=1e-10)


def test_beta3_gradient_excludes_own_beamformer():
    sc = desk_scenario(seed=10, n_dl=1, n_targets=1, n_ul=1)
    ch = build_channels(sc)
    rng = np.random.default_rng(11)
    dv = rank1_feasible(sc, ch, rng)
    anchor = surrogate_gradients(dv, ch, sc)
    # With a single downlink user the set K\{k} is empty: no W gradient.
    grad_W_dl = anchor.grad_W[2]
    assert np.allclose(grad_W_dl, 0.0)
    # The S gradient of the downlink group is nonzero.
    assert np.linalg.norm(anchor.grad_S[2]) > 0


def test_zero_power_anchor_gradients_finite():
    sc = desk_scenario(seed=12)
    ch = build_channels(sc)
    L, J, K = sc.n_targets, sc.n_ul, sc.n_dl
    N, M = ch.n_transmit, ch.n_receive
    dv = DesignVariables(
        u=np.eye(L, M, dtype=complex), b=np.eye(J, M, dtype=complex),
        w=np.zeros((K, N), dtype=complex), S=np.zeros((L, N, N), dtype=complex),
        p=np.zeros(J),
    )
    anchor = surrogate_gradients(dv, ch, sc)
    assert np.all(np.isfinite(anchor.grad_X.view(float)))
    assert np.all(np.isfinite(anchor.grad_p))
    assert np.all(np.isfinite(anchor.beta_values))


# ---------------------------------------------------------------------------
# Closed-form receive beamformers
# ---------------------------------------------------------------------------


def test_rx_beamformer_matched_filter_reduction():
    sc = desk_scenario(seed=13, n_targets=1, n_ul=0, n_dl=0, si_db=-400.0)
    ch = build_channels(sc)
    N, M = ch.n_transmit, ch.n_receive
    v = ch.g_t[0] / np.sqrt(N)
    S = sc.p_dl_max * np.outer(v, v.conj())[None, :, :]
    dv = DesignVariables(u=np.eye(1, M, dtype=complex), b=np.zeros((0, M)),
                         w=np.zeros((0, N)), S=S, p=np.zeros(0))
    u, b = optimal_rx_beamformers(dv, ch, sc.noise_bs)
    matched = ch.g_r[0] / np.linalg.norm(ch.g_r[0])
    assert abs(np.vdot(u[0], matched)) == pytest.approx(1.0, abs=1e-9)


def test_rx_beamformer_ul_matched_filter():
    sc = desk_scenario(seed=14, n_targets=0, n_ul=1, n_dl=0, si_db=-400.0)
    ch = build_channels(sc)
    N, M = ch.n_transmit, ch.n_receive
    dv = DesignVariables(u=np.zeros((0, M)), b=np.eye(1, M, dtype=complex),
                         w=np.zeros((0, N)), S=np.zeros((0, N, N)),
                         p=np.array([sc.p_ul_max]))
    u, b = optimal_rx_beamformers(dv, ch, sc.noise_bs)
    matched = ch.f[0] / np.linalg.norm(ch.f[0])
    assert abs(np.vdot(b[0], matched)) == pytest.approx(1.0, abs=1e-9)


def test_rx_beamformers_beat_random_vectors():
    from manisac.metrics import sensing_sinr, ul_sinr

    rng = np.random.default_rng(15)
    for inst in range(10):
        sc = desk_scenario(seed=100 + inst)
        ch = build_channels(sc)
        dv = rank1_feasible(sc, ch, rng)
        u, b = optimal_rx_beamformers(dv, ch, sc.noise_bs)
        dv.u, dv.b = u, b
        best_s = [sensing_sinr(l, dv, ch, sc.noise_bs) for l in range(sc.n_targets)]
        best_u = [ul_sinr(j, dv, ch, sc.noise_bs) for j in range(sc.n_ul)]
        M = ch.n_receive
        trial = dv.copy()
        for _ in range(200):
            cand = rng.standard_normal(M) + 1j * rng.standard_normal(M)
            cand /= np.linalg.norm(cand)
            for l in range(sc.n_targets):
                trial.u = dv.u.copy()
                trial.u[l] = cand
                assert sensing_sinr(l, trial, ch, sc.noise_bs) <= best_s[l] * (1 + 1e-12)
            trial.u = dv.u
            for j in range(sc.n_ul):
                trial.b = dv.b.copy()
                trial.b[j] = cand
                assert ul_sinr(j, trial, ch, sc.noise_bs) <= best_u[j] * (1 + 1e-12)
            trial.b = dv.b


def test_rx_beamformer_conditioning_guard():
    from manisac.errors import NumericalConditioningError

    sc = desk_scenario(seed=40)
    ch = build_channels(sc)
    dv = rank1_feasible(sc, ch, np.random.default_rng(41))
    with pytest.raises(NumericalConditioningError):
        optimal_rx_beamformers(dv, ch, sc.noise_bs, condition_limit=1.0)


def test_stalled_solver_error_carries_iterate():
    from manisac.errors import StalledSolverError

    sc = desk_scenario(seed=42)
    ch = build_channels(sc)
    dv = rank1_feasible(sc, ch, np.random.default_rng(43))
    dv.u, dv.b = optimal_rx_beamformers(dv, ch, sc.noise_bs)
    # Zero backtracks make every ascent round fail its line search.
    opts = SolverOptions(max_backtracks=0, max_linesearch_failures=1)
    with pytest.raises(StalledSolverError) as excinfo:
        solve_sca_subproblem(dv, ch, sc, opts)
    assert excinfo.value.last_iterate is not None


def test_rx_beamformers_unit_norm():
    sc = desk_scenario(seed=16)
    ch = build_channels(sc)
    dv = rank1_feasible(sc, ch, np.random.default_rng(17))
    u, b = optimal_rx_beamformers(dv, ch, sc.noise_bs)
    assert np.allclose(np.linalg.norm(u, axis=1), 1.0, rtol=1e-12)
    assert np.allclose(np.linalg.norm(b, axis=1), 1.0, rtol=1e-12)


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def test_projection_enforces_constraints_and_idempotent():
    sc = desk_scenario(seed=18)
    rng = np.random.default_rng(19)
    N = 4
    X = rng.standard_normal((4, N, N)) + 1j * rng.standard_normal((4, N, N))
    X = 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))  # Hermitian, indefinite
    X *= sc.p_dl_max
    p = np.array([-1.0, 2 * sc.p_ul_max])
    Xp, pp = project_feasible(X, p, sc.p_dl_max, sc.p_ul_max)
    for m in range(4):
        evals = np.linalg.eigvalsh(Xp[m])
        assert evals.min() >= -1e-10 * max(np.trace(Xp[m]).real, 1e-300)
    assert np.einsum("mii->", Xp).real <= sc.p_dl_max * (1 + 1e-9)
    assert pp.min() >= 0.0 and pp.max() <= sc.p_ul_max
    X2, p2 = project_feasible(Xp, pp, sc.p_dl_max, sc.p_ul_max)
    assert np.array_equal(X2, Xp)
    assert np.array_equal(p2, pp)


def test_projection_leaves_feasible_untouched():
    sc = desk_scenario(seed=20)
    N = 4
    X = np.tile(0.1 * np.eye(N, dtype=complex), (2, 1, 1))
    p = np.array([sc.p_ul_max / 2])
    Xp, pp = project_feasible(X, p, sc.p_dl_max, sc.p_ul_max)
    assert np.array_equal(Xp, X)
    assert np.array_equal(pp, p)


# ---------------------------------------------------------------------------
# Rank-one extraction
# ---------------------------------------------------------------------------


def test_extract_rank1_exact():
    rng = np.random.default_rng(21)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    W = np.outer(v, v.conj())
    w, residual = extract_rank1(W)
    assert residual < 1e-12
    phase = np.vdot(w, v) / abs(np.vdot(w, v))
    assert np.allclose(w * phase, v, atol=1e-9)


def test_extract_rank1_identity_warns():
    with pytest.warns(RankOneExtractionWarning):
        w, residual = extract_rank1(np.eye(2, dtype=complex))
    assert residual == pytest.approx(1 / np.sqrt(2), rel=1e-12)


def test_extract_rank1_zero_matrix():
    w, residual = extract_rank1(np.zeros((3, 3), dtype=complex))
    assert residual == 0.0
    assert np.all(w == 0)


# ---------------------------------------------------------------------------
# SCA subproblem
# ---------------------------------------------------------------------------


def test_sca_single_user_dl_recovers_mrt():
    sc = desk_scenario(seed=22, n_targets=0, n_ul=0, n_dl=1)
    ch = build_channels(sc)
    N, M = ch.n_transmit, ch.n_receive
    rng = np.random.default_rng(23)
    # Start away from the optimum: random direction, half power.
    w0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    w0 *= np.sqrt(sc.p_dl_max / 2) / np.linalg.norm(w0)
    dv = DesignVariables(u=np.zeros((0, M)), b=np.zeros((0, M)), w=w0[None, :],
                         S=np.zeros((0, N, N)), p=np.zeros(0))
    out, diag = solve_sca_subproblem(dv, ch, sc)
    h = ch.h[0]
    opt_wsr = sc.weight_dl[0] * np.log2(
        1 + sc.p_dl_max * np.linalg.norm(h) ** 2 / sc.noise_dl[0]
    )
    got = wsr(out, ch, sc).wsr
    assert got == pytest.approx(opt_wsr, rel=0.01)
    mrt = h / np.linalg.norm(h)
    corr = abs(np.vdot(out.w[0], mrt)) / np.linalg.norm(out.w[0])
    assert corr == pytest.approx(1.0, abs=1e-3)


def test_sca_stationary_anchor_is_fixed_point():
    sc = desk_scenario(seed=24, n_targets=0, n_ul=0, n_dl=1)
    ch = build_channels(sc)
    N, M = ch.n_transmit, ch.n_receive
    h = ch.h[0]
    w0 = np.sqrt(sc.p_dl_max) * h / np.linalg.norm(h)
    dv = DesignVariables(u=np.zeros((0, M)), b=np.zeros((0, M)), w=w0[None, :],
                         S=np.zeros((0, N, N)), p=np.zeros(0))
    out, diag = solve_sca_subproblem(dv, ch, sc)
    assert np.linalg.norm(out.W[0] - dv.W[0]) <= 1e-6 * sc.p_dl_max


def test_sca_rounds_monotone_and_feasible():
    sc = desk_scenario(seed=25)
    ch = build_channels(sc)
    rng = np.random.default_rng(26)
    dv = rank1_feasible(sc, ch, rng)
    dv.u, dv.b = optimal_rx_beamformers(dv, ch, sc.noise_bs)
    out, diag = solve_sca_subproblem(dv, ch, sc)
    trace = np.array(diag.surrogate_trace)
    assert np.all(np.diff(trace) >= -1e-9)
    # Output is feasible.
    total = np.einsum("lii->", out.S).real + np.einsum("kii->", out.W).real
    assert total <= sc.p_dl_max * (1 + 1e-9)
    assert out.p.min() >= 0 and out.p.max() <= sc.p_ul_max * (1 + 1e-12)
    # The lifted objective did not decrease relative to the anchor.
    X0, p0 = stack_design(dv)
    alpha, beta = build_log_terms(ch, dv.u, dv.b, sc)
    assert diag.lifted_wsr >= wsr_lifted(alpha, beta, X0, p0) - 1e-9


# ---------------------------------------------------------------------------
# Alternating optimization
# ---------------------------------------------------------------------------


def test_ao_trace_monotone_across_seeds():
    for seed in range(5):
        sc = desk_scenario(seed=seed, n_targets=1, n_ul=1, n_dl=1)
        ch = build_channels(sc)
        dv, trace = alternating_optimize(None, ch, sc, rng=seed)
        vals = np.array(trace.wsr_values)
        assert np.all(np.diff(vals) >= -1e-9)
        assert trace.iterations <= SolverOptions().ao_max_iters


def test_ao_final_wsr_matches_metrics():
    sc = desk_scenario(seed=30, n_targets=1, n_ul=1, n_dl=1)
    ch = build_channels(sc)
    dv, trace = alternating_optimize(None, ch, sc, rng=0)
    recomputed = wsr(dv, ch, sc).wsr
    assert recomputed == pytest.approx(trace.wsr_values[-1], rel=1e-9)


def test_ao_beats_random_beamformers():
    rng = np.random.default_rng(31)
    sc = desk_scenario(seed=31)
    ch = build_channels(sc)
    dv_opt, _ = alternating_optimize(None, ch, sc, rng=0)
    dv_rand = rank1_feasible(sc, ch, rng)
    assert wsr(dv_opt, ch, sc).wsr > wsr(dv_rand, ch, sc).wsr


def test_ao_wsr_monotone_in_power_budget():
    # Nested feasible sets: a larger downlink budget can only help.
    values = []
    for p_dbm in (30.0, 36.0, 40.0):
        sc = desk_scenario(seed=33, p_dl_max_dbm=p_dbm)
        ch = build_channels(sc)
        dv, trace = alternating_optimize(None, ch, sc, rng=0)
        values.append(trace.wsr_values[-1])
    assert values[0] <= values[1] <= values[2]


def test_ao_pure_dl_matches_single_sca():
    sc = desk_scenario(seed=32, n_targets=0, n_ul=0, n_dl=2)
    ch = build_channels(sc)
    dv_ao, trace = alternating_optimize(None, ch, sc, rng=1)
    dv0 = initial_point(ch, sc, rng=1)
    dv_sca, _ = solve_sca_subproblem(dv0, ch, sc)
    a = wsr(dv_ao, ch, sc).wsr
    b = wsr(dv_sca, ch, sc).wsr
    assert a == pytest.approx(b, rel=0.01)
