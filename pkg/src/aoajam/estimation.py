"""Receiver side: interference covariance models, the CRB and the ML AoA estimator."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .array import ArrayGeometry, steering_matrix
from .channel import RicianChannelSpec, expected_sandwich

__all__ = [
    "Knowledge",
    "TrainingSequence",
    "InterferenceCovariance",
    "MLSpectrum",
    "UnidentifiableAngleError",
    "inv_sqrt_hermitian",
    "rz_noise_only",
    "rz_perfect_csi",
    "rz_statistical",
    "crb",
    "ml_spectrum",
    "projected_residual",
    "estimate_aoa",
]


class Knowledge(enum.Enum):
    NONE = "none"
    STATISTICAL = "statistical"
    PERFECT_CSI = "perfect_csi"
    WORST_CASE_AWARE = "worst_case_aware"


class UnidentifiableAngleError(ValueError):
    """The Fisher information for the angle vanishes (e.g. endfire, or no LOS)."""


@dataclass(frozen=True)
class TrainingSequence:
    symbols: np.ndarray
    p_max: float
    p_tot: float

    def __post_init__(self):
        x = np.asarray(self.symbols, dtype=complex).reshape(-1)
        object.__setattr__(self, "symbols", x)
        if x.size == 0:
            raise ValueError("training sequence is empty")
        p = np.abs(x) ** 2
        # small slack for the rescaling in `gaussian`
        if p.max() > self.p_max * (1 + 1e-12):
            raise ValueError("a training symbol exceeds the per-symbol power cap")
        if p.sum() > self.p_tot * (1 + 1e-12):
            raise ValueError("training energy exceeds the total power cap")

    @classmethod
    def gaussian(cls, L: int, rng: np.random.Generator, power: float = 1.0) -> "TrainingSequence":
        """Draws ``CN(0, 1)`` symbols and rescales them to mean power ``power``.

        The caps are set tight: ``p_max`` to the largest drawn symbol power and
        ``p_tot`` to ``L * power``.
        """
        x = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2)
        x *= np.sqrt(power * L / np.sum(np.abs(x) ** 2))
        return cls(x, float(np.max(np.abs(x) ** 2)), float(np.sum(np.abs(x) ** 2)))

    def __len__(self) -> int:
        return self.symbols.size

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.symbols) ** 2))


@dataclass(frozen=True)
class InterferenceCovariance:
    matrix: np.ndarray
    knowledge: Knowledge = Knowledge.STATISTICAL

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        if R.shape[0] != R.shape[1]:
            raise ValueError(f"R_z must be square, got {R.shape}")
        scale = max(1.0, np.abs(R).max())
        if np.abs(R - R.conj().T).max() > 1e-12 * scale:
            raise ValueError("R_z is not Hermitian")
        R = 0.5 * (R + R.conj().T)
        if np.linalg.eigvalsh(R).min() < -1e-9 * scale:
            raise ValueError("R_z is not positive semidefinite")
        object.__setattr__(self, "matrix", R)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MLSpectrum:
    grid: np.ndarray
    values: np.ndarray
    argmax: float

    def local_maxima(self) -> np.ndarray:
        """Angles of interior grid points not smaller than either neighbour."""
        v = self.values
        idx = np.flatnonzero((v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:])) + 1
        return self.grid[idx]


def inv_sqrt_hermitian(R: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """``R^{-1/2}`` with eigenvalues floored at ``floor * lambda_max``."""
    w, V = np.linalg.eigh(R)
    if w.max() <= 0:
        raise ValueError("R_z has no positive eigenvalue")
    w = np.maximum(w, floor * w.max())
    return (V / np.sqrt(w)) @ V.conj().T


def rz_noise_only(n_r: int, sigma_n2: float) -> InterferenceCovariance:
    return InterferenceCovariance(sigma_n2 * np.eye(n_r), Knowledge.NONE)


def rz_perfect_csi(H_t_nlos, H_j, x_t, X_j, sigma_n2: float) -> InterferenceCovariance:
    """Sample covariance of ``H_t^nlos x + H_j X_j`` over the burst, plus ``sigma_n2 I``.

    Channels may be given once (block fading) or per slot with a leading ``L`` axis.
    ``X_j`` is ``(n_j, L)``.
    """
    x = np.asarray(getattr(x_t, "symbols", x_t), dtype=complex).reshape(-1)
    L = x.size
    h = np.asarray(H_t_nlos, dtype=complex)
    H = np.asarray(H_j, dtype=complex)
    X = np.asarray(X_j, dtype=complex)
    if h.ndim == 1 or (h.ndim == 2 and h.shape[-1] == 1):
        h = h.reshape(-1)[None, :].repeat(L, 0)
    elif h.ndim == 3 and h.shape[-1] == 1:
        h = h[..., 0]
    else:
        raise ValueError(f"H_t_nlos has unsupported shape {np.shape(H_t_nlos)}")
    if H.ndim == 2:
        H = np.broadcast_to(H, (L,) + H.shape)
    if h.shape[0] != L or H.shape[0] != L:
        raise ValueError("channel slot count does not match the training length")
    if X.shape != (H.shape[2], L):
        raise ValueError(f"X_j must be {(H.shape[2], L)}, got {X.shape}")
    if H.shape[1] != h.shape[1]:
        raise ValueError("transmitter and jammer channels disagree on n_r")
    Z = h.T * x + np.einsum("lrj,jl->rl", H, X)
    R = Z @ Z.conj().T / L + sigma_n2 * np.eye(h.shape[1])
    return InterferenceCovariance(R, Knowledge.PERFECT_CSI)


def rz_statistical(spec_t: RicianChannelSpec, spec_j: RicianChannelSpec, Q_j,
                   p_max: float, sigma_n2: float,
                   knowledge: Knowledge = Knowledge.STATISTICAL) -> InterferenceCovariance:
    """``(P_t/(1+k_t) + sigma_n2) I + E[H_j Q_j H_j^H]``."""
    diffuse = 0.0 if np.isinf(spec_t.k_factor) else p_max / (1 + spec_t.k_factor)
    R = (diffuse + sigma_n2) * np.eye(spec_t.n_r) + expected_sandwich(spec_j, Q_j)
    return InterferenceCovariance(R, knowledge)


def _whitened_fisher(W: np.ndarray, geom: ArrayGeometry, thetas: np.ndarray) -> np.ndarray:
    """``Dw^H P_perp(Aw) Dw`` per angle, with ``Dw = W D`` and ``Aw = W a``."""
    A = steering_matrix(geom, thetas)
    m = np.arange(geom.n_elements)[:, None]
    D = (-1j * geom.phase_scale * m * np.cos(thetas)[None, :]) * A
    Aw, Dw = W @ A, W @ D
    a2 = np.sum(np.abs(Aw) ** 2, axis=0)
    d2 = np.sum(np.abs(Dw) ** 2, axis=0)
    ad = np.sum(Aw.conj() * Dw, axis=0)
    return d2 - np.abs(ad) ** 2 / a2


def crb(theta, rz: InterferenceCovariance, geom: ArrayGeometry, L: int,
        k_t: float, p_max: float):
    """CRB on the LOS angle, ``(1+k_t) / (2 L k_t P_t Dw^H G Dw)``.

    ``G`` is the projector orthogonal to the whitened steering vector
    ``R_z^{-1/2} a``; for white ``R_z`` it is the plain ``I - a a^H / a^H a``.
    ``theta`` may be a scalar or an array.
    """
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.isinf(k_t):
        los_gain = 1.0
    elif k_t > 0:
        los_gain = k_t / (1 + k_t)
    else:
        raise UnidentifiableAngleError("no LOS component (k_t = 0)")
    W = inv_sqrt_hermitian(rz.matrix)
    fisher = _whitened_fisher(W, geom, thetas)
    if np.any(fisher <= 1e-15):
        raise UnidentifiableAngleError("angle information vanishes on the requested grid")
    out = 1.0 / (2 * L * los_gain * p_max * fisher)
    return float(out[0]) if np.ndim(theta) == 0 else out


def _beam_stats(Y, x_t):
    x = np.asarray(getattr(x_t, "symbols", x_t), dtype=complex).reshape(-1)
    Y = np.asarray(Y, dtype=complex)
    if Y.size == 0 or x.size == 0:
        raise ValueError("no observations")
    if Y.ndim != 2 or Y.shape[1] != x.size:
        raise ValueError(f"Y must be (n_r, {x.size}), got {Y.shape}")
    L = x.size
    r_xx = np.sum(np.abs(x) ** 2) / L
    if r_xx == 0:
        raise ValueError("training sequence has no energy")
    r_xy = (x[None, :] * Y.conj()).sum(axis=1) / L  # row vector, conjugated
    return r_xy.conj() / r_xx


def _ratio(B, Rinv, geom, thetas):
    A = steering_matrix(geom, thetas)
    RA = Rinv @ A
    num = np.abs(RA.conj().T @ B) ** 2
    den = np.sum(A.conj() * RA, axis=0).real
    return num / den


def ml_spectrum(Y, x_t, rz: InterferenceCovariance, geom: ArrayGeometry, grid) -> MLSpectrum:
    """``|a^H R^{-1} B|^2 / (a^H R^{-1} a)`` over ``grid``, normalized to peak 1.

    ``Y`` is ``(n_r, L)``; ``B = R_xy^H / R_xx`` is the least-squares channel
    estimate from the known training.
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("empty angle grid")
    B = _beam_stats(Y, x_t)
    Rinv = np.linalg.inv(rz.matrix)
    v = _ratio(B, Rinv, geom, grid)
    peak = v.max()
    i = int(np.argmax(v))
    if peak > 0:
        v = v / peak
    return MLSpectrum(grid=grid, values=v, argmax=float(grid[i]))


def projected_residual(Y, x_t, rz: InterferenceCovariance, geom: ArrayGeometry, grid) -> np.ndarray:
    """``B^H R^{-1/2} G R^{-1/2} B`` on ``grid``; its minimizer is the ML estimate."""
    B = _beam_stats(Y, x_t)
    W = inv_sqrt_hermitian(rz.matrix)
    Bw = W @ B
    out = np.empty(len(grid))
    for i, a in enumerate(steering_matrix(geom, np.asarray(grid, dtype=float)).T):
        aw = W @ a
        out[i] = (np.vdot(Bw, Bw) - abs(np.vdot(aw, Bw)) ** 2 / np.vdot(aw, aw)).real
    return out


_INV_PHI = (np.sqrt(5) - 1) / 2


def _golden_max(f, lo, hi, tol):
    c, d = hi - _INV_PHI * (hi - lo), lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def estimate_aoa(Y, x_t, rz: InterferenceCovariance, geom: ArrayGeometry, grid,
                 refine: bool = False, tol: float = 1e-6) -> float:
    """Grid ML estimate, optionally polished by golden-section search within one cell."""
    spec = ml_spectrum(Y, x_t, rz, geom, grid)
    if not refine or spec.grid.size < 2:
        return spec.argmax
    step = float(np.min(np.diff(np.sort(spec.grid))))
    lo = max(spec.argmax - step, -np.pi / 2)
    hi = min(spec.argmax + step, np.pi / 2)
    B = _beam_stats(Y, x_t)
    Rinv = np.linalg.inv(rz.matrix)
    return float(_golden_max(lambda t: _ratio(B, Rinv, geom, np.array([t]))[0], lo, hi, tol))
