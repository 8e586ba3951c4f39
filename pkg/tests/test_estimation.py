import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoajam.array import ArrayGeometry, steering_derivative, steering_vector
from aoajam.channel import RicianChannelSpec
from aoajam.estimation import (
    InterferenceCovariance,
    Knowledge,
    TrainingSequence,
    UnidentifiableAngleError,
    crb,
    estimate_aoa,
    inv_sqrt_hermitian,
    ml_spectrum,
    projected_residual,
    rz_noise_only,
    rz_perfect_csi,
    rz_statistical,
)
from aoajam.jammer import unaware_allocation, uniform_allocation
from aoajam.rng import complex_normal

G4 = ArrayGeometry.half_wavelength(4)
J4 = ArrayGeometry.half_wavelength(4)
DEG = np.pi / 180


def random_psd(rng, n, rank=None):
    A = complex_normal(rng, (n, rank or n))
    return A @ A.conj().T


def identity_rz(n=4, s2=1.0):
    return InterferenceCovariance(s2 * np.eye(n))


# --- training and covariance types ------------------------------------------

def test_training_gaussian_normalized():
    x = TrainingSequence.gaussian(64, np.random.default_rng(0))
    assert len(x) == 64
    assert x.mean_power == pytest.approx(1.0, rel=1e-12)
    assert x.p_tot == pytest.approx(64.0)
    assert x.p_max == pytest.approx(np.max(np.abs(x.symbols) ** 2))


def test_training_caps_enforced():
    with pytest.raises(ValueError):
        TrainingSequence(np.array([2.0, 0.1]), p_max=1.0, p_tot=10.0)
    with pytest.raises(ValueError):
        TrainingSequence(np.ones(4), p_max=1.0, p_tot=3.0)
    with pytest.raises(ValueError):
        TrainingSequence(np.array([]), p_max=1.0, p_tot=1.0)


def test_interference_covariance_validation():
    with pytest.raises(ValueError):
        InterferenceCovariance(np.array([[1, 1j], [1j, 1]]))
    with pytest.raises(ValueError):
        InterferenceCovariance(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        InterferenceCovariance(np.ones((2, 3)))


def test_inv_sqrt_hermitian():
    R = random_psd(np.random.default_rng(1), 4) + np.eye(4)
    W = inv_sqrt_hermitian(R)
    np.testing.assert_allclose(W @ R @ W, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(W, W.conj().T, atol=1e-14)


# --- R_z constructions -------------------------------------------------------

def test_rz_perfect_csi_noise_only():
    x = np.ones(5)
    rz = rz_perfect_csi(np.zeros(3), np.zeros((3, 2)), x, np.zeros((2, 5)), 0.7)
    np.testing.assert_allclose(rz.matrix, 0.7 * np.eye(3))
    assert rz.knowledge is Knowledge.PERFECT_CSI


def test_rz_perfect_csi_hand_expansion():
    h = np.array([1 + 1j, 2.0])
    H = np.array([[1.0, 1j], [0.0, 1 - 1j]])
    x = np.array([1j])
    X = np.array([[2.0], [1.0]])
    s2 = 0.5
    # z = h x + H X = [(1+1j)1j + 2 + 1j, 2j + (1-1j)] = [1 + 2j, 1 + 1j]
    z = np.array([1 + 2j, 1 + 1j])
    expected = np.array([
        [abs(z[0]) ** 2 + s2, z[0] * np.conj(z[1])],
        [z[1] * np.conj(z[0]), abs(z[1]) ** 2 + s2],
    ])
    np.testing.assert_allclose(rz_perfect_csi(h, H, x, X, s2).matrix, expected, atol=1e-15)
    np.testing.assert_allclose(expected, [[5.5, 3 + 1j], [3 - 1j, 2.5]])


def test_rz_perfect_csi_per_slot_equals_block_when_constant():
    rng = np.random.default_rng(2)
    L = 7
    h = complex_normal(rng, (4, 1))
    H = complex_normal(rng, (4, 3))
    x = complex_normal(rng, L)
    X = complex_normal(rng, (3, L))
    block = rz_perfect_csi(h, H, x, X, 0.1).matrix
    slots = rz_perfect_csi(np.repeat(h[None], L, 0), np.repeat(H[None], L, 0), x, X, 0.1).matrix
    np.testing.assert_allclose(block, slots, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rz_perfect_csi_hermitian(seed):
    rng = np.random.default_rng(seed)
    L = 9
    R = rz_perfect_csi(complex_normal(rng, (L, 4, 1)), complex_normal(rng, (L, 4, 4)),
                       complex_normal(rng, L), complex_normal(rng, (4, L)), 0.3).matrix
    assert np.abs(R - R.conj().T).max() <= 1e-12


def test_rz_perfect_csi_dimension_mismatch():
    with pytest.raises(ValueError):
        rz_perfect_csi(np.zeros(3), np.zeros((3, 2)), np.ones(4), np.zeros((2, 5)), 1.0)
    with pytest.raises(ValueError):
        rz_perfect_csi(np.zeros(3), np.zeros((4, 2)), np.ones(4), np.zeros((2, 4)), 1.0)


def test_rz_statistical_pure_los_no_jammer():
    st_ = RicianChannelSpec(np.inf, 0.2, G4)
    sj = RicianChannelSpec(10.0, 0.5, G4, 0.0, J4)
    rz = rz_statistical(st_, sj, np.zeros((4, 4)), 1.0, 0.3)
    np.testing.assert_allclose(rz.matrix, 0.3 * np.eye(4))


def test_rz_statistical_diffuse_floor():
    st_ = RicianChannelSpec(1.0, 0.2, G4)
    sj = RicianChannelSpec(10.0, 0.5, G4, 0.0, J4)
    rz = rz_statistical(st_, sj, np.zeros((4, 4)), 2.0, 1.0)
    np.testing.assert_allclose(rz.matrix, 2.0 * np.eye(4))


def test_rz_statistical_rayleigh_jammer_uniform():
    st_ = RicianChannelSpec(3.0, 0.2, G4)
    sj = RicianChannelSpec(0.0, 0.5, G4, 0.0, J4)
    rz = rz_statistical(st_, sj, uniform_allocation(4, 2.5), 1.0, 0.1)
    np.testing.assert_allclose(rz.matrix, (1 / 4 + 0.1 + 2.5) * np.eye(4), atol=1e-14)


def test_rz_statistical_broadside_is_scaled_upsilon():
    # uniform jamming from a broadside LOS gives P_j times the k/(1+k) correlation
    k = 10.0
    st_ = RicianChannelSpec(np.inf, 0.2, G4)
    sj = RicianChannelSpec(k, 0.0, G4, 0.0, J4)
    rz = rz_statistical(st_, sj, uniform_allocation(4, 1.0), 1.0, 0.0).matrix
    expected = np.full((4, 4), k / (1 + k)) + np.eye(4) / (1 + k)
    np.testing.assert_allclose(rz, expected, atol=1e-14)


# --- CRB ---------------------------------------------------------------------

def test_crb_closed_form_broadside():
    # a = 1, D_m = -j pi m: D^H D = 14 pi^2, |a^H D|^2 / 4 = 9 pi^2
    value = crb(0.0, identity_rz(), G4, 64, np.inf, 1.0)
    assert value == pytest.approx(1 / (2 * 64 * 5 * np.pi ** 2), rel=1e-12)


def test_crb_matches_direct_projector_formula():
    rng = np.random.default_rng(3)
    R = random_psd(rng, 4) + 0.5 * np.eye(4)
    theta, L, k, p = 0.37, 32, 4.0, 1.3
    W = inv_sqrt_hermitian(R)
    a, D = W @ steering_vector(G4, theta), W @ steering_derivative(G4, theta)
    G = np.eye(4) - np.outer(a, a.conj()) / np.vdot(a, a)
    expected = (1 + k) / (2 * L * k * p * np.vdot(D, G @ D).real)
    assert crb(theta, InterferenceCovariance(R), G4, L, k, p) == pytest.approx(expected, rel=1e-10)


def test_crb_halves_with_double_training():
    rz = identity_rz()
    a = crb(0.3, rz, G4, 32, 5.0, 1.0)
    b = crb(0.3, rz, G4, 64, 5.0, 1.0)
    assert b == pytest.approx(a / 2, rel=1e-12)


def test_crb_rician_factor_scaling():
    rz = identity_rz()
    assert crb(0.3, rz, G4, 64, 1.0, 1.0) == pytest.approx(2 * crb(0.3, rz, G4, 64, np.inf, 1.0))


def test_crb_jammer_free_shape():
    grid = np.deg2rad(np.arange(0, 90))
    values = crb(grid, identity_rz(), G4, 64, np.inf, 1.0)
    assert np.all(np.diff(values) > 0)
    neg = crb(-grid, identity_rz(), G4, 64, np.inf, 1.0)
    np.testing.assert_allclose(neg, values, rtol=1e-12)


def test_crb_endfire_and_no_los_raise():
    with pytest.raises(UnidentifiableAngleError):
        crb(np.pi / 2, identity_rz(), G4, 64, np.inf, 1.0)
    with pytest.raises(UnidentifiableAngleError):
        crb(0.1, identity_rz(), G4, 64, 0.0, 1.0)


def test_crb_array_and_scalar_agree():
    grid = np.array([-0.4, 0.0, 0.7])
    values = crb(grid, identity_rz(), G4, 16, 3.0, 1.0)
    for t, v in zip(grid, values):
        assert crb(t, identity_rz(), G4, 16, 3.0, 1.0) == pytest.approx(v, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_crb_loewner_ordering(seed):
    rng = np.random.default_rng(seed)
    R0 = 0.2 * np.eye(4) + random_psd(rng, 4, rank=1)
    R1 = R0 + random_psd(rng, 4, rank=int(rng.integers(1, 5)))
    grid = np.deg2rad(np.arange(-80, 81, 5))
    c0 = crb(grid, InterferenceCovariance(R0), G4, 64, 10.0, 1.0)
    c1 = crb(grid, InterferenceCovariance(R1), G4, 64, 10.0, 1.0)
    assert np.all(c1 >= c0 * (1 - 1e-10))


def test_crb_optimal_jammer_not_below_uniform():
    k = 10.0
    st_ = RicianChannelSpec(k, 0.0, G4)
    sj = RicianChannelSpec(k, np.deg2rad(50), G4, 0.0, J4)
    grid = np.deg2rad(np.arange(-80, 81))
    sigma_n2 = 10 ** -1.5
    uni = crb(grid, rz_statistical(st_, sj, uniform_allocation(4, 1.0), 1.0, sigma_n2), G4, 64, k, 1.0)
    opt = crb(grid, rz_statistical(st_, sj, unaware_allocation(4, 4, k, 1.0), 1.0, sigma_n2),
              G4, 64, k, 1.0)
    assert np.all(opt >= uni * (1 - 1e-12))


# --- ML spectrum -------------------------------------------------------------

def noiseless_Y(theta, x, geom=G4, gain=1.0):
    return gain * np.outer(steering_vector(geom, theta), x)


def test_spectrum_on_grid_noiseless():
    grid = np.deg2rad(np.arange(-90, 90.5, 0.5))
    x = TrainingSequence.gaussian(16, np.random.default_rng(4))
    theta = grid[250]
    sp = ml_spectrum(noiseless_Y(theta, x.symbols, gain=0.3 - 0.8j), x, identity_rz(), G4, grid)
    assert sp.argmax == theta
    assert sp.values.max() == pytest.approx(1.0)
    assert np.all(sp.values >= 0)
    assert estimate_aoa(noiseless_Y(theta, x.symbols), x, identity_rz(), G4, grid) == theta


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_spectrum_forms_agree(seed):
    rng = np.random.default_rng(seed)
    L = 12
    x = complex_normal(rng, L)
    Y = complex_normal(rng, (4, L))
    rz = InterferenceCovariance(random_psd(rng, 4) + 0.1 * np.eye(4))
    grid = np.deg2rad(np.arange(-89, 90, 1.0))
    sp = ml_spectrum(Y, x, rz, G4, grid)
    res = projected_residual(Y, x, rz, G4, grid)
    assert grid[np.argmin(res)] == sp.argmax
    # the two forms differ by the constant B^H R^{-1} B
    B = (Y @ x.conj()) / np.sum(np.abs(x) ** 2)
    total = np.vdot(B, np.linalg.solve(rz.matrix, B)).real
    Rinv = np.linalg.inv(rz.matrix)
    A = np.stack([steering_vector(G4, t) for t in grid], axis=1)
    raw = np.abs(A.conj().T @ Rinv @ B) ** 2 / np.einsum("ij,ik,kj->j", A.conj(), Rinv, A).real
    np.testing.assert_allclose(res, total - raw, rtol=1e-9, atol=1e-12)


def test_spectrum_local_maxima():
    grid = np.deg2rad(np.arange(-90, 91, 1.0))
    x = np.ones(8, dtype=complex)
    Y = noiseless_Y(np.deg2rad(-30), x, ArrayGeometry.half_wavelength(16))
    sp = ml_spectrum(Y, x, identity_rz(16), ArrayGeometry.half_wavelength(16), grid)
    peaks = np.rad2deg(sp.local_maxima())
    assert np.any(np.isclose(peaks, -30))


def test_refinement_off_grid():
    grid = np.deg2rad(np.arange(-90, 90.05, 0.1))
    x = TrainingSequence.gaussian(32, np.random.default_rng(5))
    theta = 12.3 * DEG + 0.037 * DEG  # deliberately off the 0.1 degree lattice
    Y = noiseless_Y(theta, x.symbols)
    est = estimate_aoa(Y, x, identity_rz(), G4, grid, refine=True)
    assert abs(est - theta) <= 0.01 * DEG


def test_refinement_at_stated_angle():
    grid = np.deg2rad(np.arange(-90, 90.05, 0.1))
    x = TrainingSequence.gaussian(32, np.random.default_rng(6))
    Y = noiseless_Y(12.3 * DEG, x.symbols)
    est = estimate_aoa(Y, x, identity_rz(), G4, grid, refine=True)
    assert abs(est - 12.3 * DEG) <= 0.01 * DEG


def test_spectrum_errors():
    grid = np.linspace(-1, 1, 11)
    with pytest.raises(ValueError):
        ml_spectrum(np.zeros((4, 0)), np.zeros(0), identity_rz(), G4, grid)
    with pytest.raises(ValueError):
        ml_spectrum(np.zeros((4, 3)), np.zeros(3), identity_rz(), G4, grid)
    with pytest.raises(ValueError):
        ml_spectrum(np.zeros((4, 3)), np.ones(3), identity_rz(), G4, [])
    with pytest.raises(ValueError):
        estimate_aoa(np.zeros((4, 0)), np.zeros(0), identity_rz(), G4, grid)


def test_noise_only_rz():
    rz = rz_noise_only(3, 0.25)
    np.testing.assert_array_equal(rz.matrix, 0.25 * np.eye(3))
    assert rz.knowledge is Knowledge.NONE
