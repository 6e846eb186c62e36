import mpmath
import numpy as np
import pytest

from manisac.channels import (
    build_channels,
    comm_channels,
    response_vector,
    sensing_channels,
    si_channel,
    usw_path_loss,
)
from manisac.geometry import AntennaLayout, make_region_pair, sample_layout

LAM = 0.01


def test_response_vector_full_and_half_wavelength():
    origin = np.zeros((1, 3))
    v_full = response_vector(origin, np.array([0.0, 0.0, LAM]), LAM)
    assert v_full[0] == pytest.approx(1.0 + 0j, abs=1e-12)
    v_half = response_vector(origin, np.array([0.0, 0.0, LAM / 2]), LAM)
    assert v_half[0] == pytest.approx(-1.0 + 0j, abs=1e-12)


def test_response_vector_coincident_antennas():
    pts = np.zeros((2, 3))
    q = np.array([1.0, 2.0, 3.0])
    v = response_vector(pts, q, LAM)
    assert v[0] == v[1]


def test_response_vector_zero_distance_is_one():
    v = response_vector(np.zeros((1, 3)), np.zeros(3), LAM)
    assert v[0] == pytest.approx(1.0 + 0j)


def test_si_channel_single_pair():
    t = np.array([[0.0, 0.0, 0.0]])
    r = np.array([[LAM, 0.0, 0.0]])
    H = si_channel(t, r, 1e-5, LAM)
    assert H.shape == (1, 1)
    assert H[0, 0] == pytest.approx(1e-5 + 0j, abs=1e-18)


def test_si_channel_constant_magnitude():
    rng = np.random.default_rng(5)
    t = rng.random((6, 3))
    r = rng.random((4, 3))
    H = si_channel(t, r, 1e-5, LAM)
    assert np.allclose(np.abs(H), 1e-5, rtol=1e-12)


def test_db_amplitude_convention():
    # -100 dB is a power ratio; the stored field amplitude must square to it.
    from manisac.config import db_to_amplitude

    rho = db_to_amplitude(-100.0)
    assert rho == pytest.approx(1e-5, rel=1e-12)
    assert rho**2 == pytest.approx(1e-10, rel=1e-12)


def test_usw_path_loss_values():
    assert usw_path_loss(LAM / (4 * np.pi), LAM) == pytest.approx(1.0, rel=1e-12)
    assert usw_path_loss(2.0, LAM) == pytest.approx(usw_path_loss(1.0, LAM) / 2)
    # High-precision oracle for the default 25 m geometry.
    with mpmath.workdps(50):
        expected = mpmath.mpf("0.01") / (4 * mpmath.pi * 25)
    assert usw_path_loss(25.0, 0.01) == pytest.approx(float(expected), rel=1e-14)
    assert usw_path_loss(25.0, 0.01) == pytest.approx(3.1831e-5, rel=1e-4)


def test_usw_path_loss_rejects_zero_distance():
    with pytest.raises(ValueError):
        usw_path_loss(0.0, LAM)


def _layout(side_lambda=100.0, n=8, m=8, seed=11):
    tx, rx = make_region_pair(side_lambda * LAM, 10 * LAM)
    return sample_layout(tx, rx, n, m, LAM / 2, rng=seed)


def test_comm_channel_magnitudes():
    lay = _layout()
    q_dl = np.array([[5.0, 20.0, -15.0]])
    q_ul = np.array([[-3.0, 22.0, -15.0]])
    h, f = comm_channels(lay, q_dl, np.array([2e-5]), q_ul, np.array([3e-5]), LAM)
    assert np.allclose(np.abs(h), 2e-5, rtol=1e-12)
    assert np.allclose(np.abs(f), 3e-5, rtol=1e-12)


def test_identical_users_identical_channels():
    lay = _layout()
    q = np.array([[5.0, 20.0, -15.0], [5.0, 20.0, -15.0]])
    rho = np.array([2e-5, 2e-5])
    h, _ = comm_channels(lay, q, rho, np.zeros((0, 3)), np.zeros(0), LAM)
    assert np.array_equal(h[0], h[1])


def test_radial_shift_is_not_common_phase_in_near_field():
    # Moving a user one wavelength outward changes entry phases non-uniformly
    # when the aperture is large (spherical wavefront).
    lay = _layout(side_lambda=100.0)
    direction = np.array([0.0, 25.0, -15.0])
    unit = direction / np.linalg.norm(direction)
    q1 = direction
    q2 = direction + LAM * unit
    h1 = response_vector(lay.transmit, q1, LAM)
    h2 = response_vector(lay.transmit, q2, LAM)
    ratio_phases = np.angle(h2 / h1)
    spread = ratio_phases.max() - ratio_phases.min()
    assert spread > 1e-3  # non-uniform across the array


def test_sensing_channel_rank_one():
    lay = _layout()
    q = np.array([[0.0, 27.0, -15.0]])
    rho = np.array([3.162e-3])
    G, g_t, g_r = sensing_channels(lay, q, rho, LAM)
    s = np.linalg.svd(G[0], compute_uv=False)
    n, m = lay.n_transmit, lay.n_receive
    assert s[0] == pytest.approx(rho[0] * np.sqrt(n * m), rel=1e-12)
    assert s[1] <= 1e-12 * rho[0] * np.sqrt(n * m)


def test_sensing_channel_scalar_case():
    lay = AntennaLayout(
        transmit=np.array([[0.0, 0.0, 0.0]]),
        receive=np.array([[0.3, 0.0, 0.0]]),
        min_spacing=0.0,
    )
    q = np.array([[0.0, 25.0, -15.0]])
    G, g_t, g_r = sensing_channels(lay, q, np.array([0.5]), LAM)
    expected = 0.5 * g_r[0, 0] * np.conj(g_t[0, 0])
    assert G[0, 0, 0] == pytest.approx(expected)


def test_rigid_translation_invariance(scenario):
    # Shifting the whole scene leaves magnitudes and same-set inner products
    # unchanged because only pairwise distances matter.
    ch = build_channels(scenario)
    shift = np.array([3.0, -2.0, 1.5])
    lay = scenario.layout
    shifted = AntennaLayout(
        transmit=lay.transmit + shift,
        receive=lay.receive + shift,
        min_spacing=lay.min_spacing,
    )
    from manisac.channels import ChannelSet

    H2 = si_channel(shifted.transmit, shifted.receive, scenario.rho_si,
                    scenario.wavelength)
    h2, f2 = comm_channels(shifted, scenario.q_dl + shift, scenario.rho_dl,
                           scenario.q_ul + shift, scenario.rho_ul,
                           scenario.wavelength)
    assert np.allclose(H2, ch.H_si, rtol=1e-9, atol=1e-18)
    assert np.allclose(np.abs(h2), np.abs(ch.h), rtol=1e-12)
    assert np.vdot(h2[0], h2[1]) == pytest.approx(np.vdot(ch.h[0], ch.h[1]), rel=1e-9)


def test_channelset_magnitudes(scenario, channels):
    assert np.allclose(np.abs(channels.H_si), scenario.rho_si, rtol=1e-12)
    for k in range(scenario.n_dl):
        assert np.allclose(np.abs(channels.h[k]), scenario.rho_dl[k], rtol=1e-12)
    for j in range(scenario.n_ul):
        assert np.allclose(np.abs(channels.f[j]), scenario.rho_ul[j], rtol=1e-12)
