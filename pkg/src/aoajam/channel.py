"""Rician flat-fading channel synthesis and its second-order statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array import ArrayGeometry, steering_vector
from .rng import as_generator, complex_normal

__all__ = [
    "RicianChannelSpec",
    "ChannelRealization",
    "sample_channel",
    "upsilon",
    "upsilon_eigenvalues",
    "expected_gram",
    "expected_sandwich",
    "LOS_PHASE",
]

LOS_PHASE = (1 + 1j) / np.sqrt(2)


def _check_psd(Q: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(Q, dtype=complex))
    if Q.shape[0] != Q.shape[1]:
        raise ValueError(f"covariance must be square, got shape {Q.shape}")
    if not np.allclose(Q, Q.conj().T, atol=1e-9):
        raise ValueError("covariance is not Hermitian")
    w = np.linalg.eigvalsh(Q)
    if w.size and w.min() < -tol * max(1.0, abs(w).max()):
        raise ValueError(f"covariance is not PSD (min eigenvalue {w.min():.3g})")
    return Q


@dataclass(frozen=True)
class RicianChannelSpec:
    """Distribution of an ``n_r x n_t`` Rician channel.

    ``k_factor`` is linear and may be ``inf`` (pure line of sight). The LOS and
    NLOS scales are derived from it on access so that ``mu**2 + 2*sigma**2 == 1``.
    """

    k_factor: float
    aoa: float
    rx_geom: ArrayGeometry
    aod: float = 0.0
    tx_geom: ArrayGeometry = field(default_factory=lambda: ArrayGeometry(1))

    def __post_init__(self):
        if not self.k_factor >= 0:
            raise ValueError(f"Rician factor must be nonnegative, got {self.k_factor}")

    @property
    def mu(self) -> float:
        if np.isinf(self.k_factor):
            return 1.0
        return float(np.sqrt(self.k_factor / (1 + self.k_factor)))

    @property
    def sigma(self) -> float:
        if np.isinf(self.k_factor):
            return 0.0
        return float(np.sqrt(1 / (2 * (1 + self.k_factor))))

    @property
    def n_r(self) -> int:
        return self.rx_geom.n_elements

    @property
    def n_t(self) -> int:
        return self.tx_geom.n_elements

    def a_rx(self) -> np.ndarray:
        return steering_vector(self.rx_geom, self.aoa)

    def a_tx(self) -> np.ndarray:
        # single-antenna transmitters reduce to a_t = 1
        return steering_vector(self.tx_geom, self.aod)

    def psi(self) -> np.ndarray:
        """Unit-phase LOS geometry ``((1+j)/sqrt(2)) a_r a_t^H``."""
        return LOS_PHASE * np.outer(self.a_rx(), self.a_tx().conj())

    def los(self) -> np.ndarray:
        return self.mu * self.psi()


@dataclass(frozen=True)
class ChannelRealization:
    los: np.ndarray
    nlos: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.los + self.nlos


def sample_channel(spec: RicianChannelSpec, rng_seed, size: int | None = None) -> ChannelRealization:
    """Draws ``H = H_los + H_nlos``.

    With ``size`` given, ``nlos`` has a leading axis of that many independent
    draws (one per time slot) and ``los`` is broadcast to match.
    """
    rng = as_generator(rng_seed)
    shape = (spec.n_r, spec.n_t) if size is None else (size, spec.n_r, spec.n_t)
    nlos = np.sqrt(2) * spec.sigma * complex_normal(rng, shape)
    los = np.broadcast_to(spec.los(), shape).copy()
    return ChannelRealization(los=los, nlos=nlos)


def upsilon(n_j: int, k_j: float) -> np.ndarray:
    """Normalized jammer channel correlation: ones on the diagonal, ``k/(1+k)`` elsewhere."""
    if n_j < 1:
        raise ValueError("n_j must be at least 1")
    off = 1.0 if np.isinf(k_j) else k_j / (1 + k_j)
    out = np.full((n_j, n_j), off)
    np.fill_diagonal(out, 1.0)
    return out


def upsilon_eigenvalues(n_j: int, k_j: float) -> np.ndarray:
    """Closed-form spectrum of :func:`upsilon`, largest first."""
    out = np.full(n_j, 1 / (1 + k_j))
    out[0] = (1 + n_j * k_j) / (1 + k_j)
    return out


def expected_gram(spec: RicianChannelSpec) -> np.ndarray:
    """``E[H^H H] = n_r (mu^2 a_t a_t^H + 2 sigma^2 I)``.

    For a broadside jammer (``aod == 0``) this is ``n_r * upsilon(n_t, k)``.
    """
    a_t = spec.a_tx()
    return spec.n_r * (spec.mu**2 * np.outer(a_t, a_t.conj())
                       + 2 * spec.sigma**2 * np.eye(spec.n_t))


def expected_sandwich(spec: RicianChannelSpec, Q: np.ndarray) -> np.ndarray:
    """``E[H Q H^H] = mu^2 Psi Q Psi^H + 2 sigma^2 tr(Q) I``."""
    Q = _check_psd(Q)
    if Q.shape[0] != spec.n_t:
        raise ValueError(f"Q must be {spec.n_t}x{spec.n_t}, got {Q.shape}")
    psi = spec.psi()
    out = spec.mu**2 * psi @ Q @ psi.conj().T
    out += 2 * spec.sigma**2 * np.trace(Q).real * np.eye(spec.n_r)
    return 0.5 * (out + out.conj().T)
