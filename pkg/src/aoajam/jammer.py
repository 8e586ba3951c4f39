"""Optimal jammer strategies and the water-filling solver they share."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import _check_psd
from .rng import as_generator, complex_normal

__all__ = [
    "WaterFillingSolution",
    "UnawareJammer",
    "AwareJammer",
    "water_fill",
    "unaware_threshold",
    "unaware_power_levels",
    "unaware_allocation",
    "uniform_allocation",
    "sample_unaware_signal",
    "aware_signal",
    "alignment_objective",
]


@dataclass(frozen=True)
class WaterFillingSolution:
    allocations: np.ndarray
    level: float


@dataclass(frozen=True)
class UnawareJammer:
    """Gaussian jammer ``X_j[l] ~ CN(0, Q)``."""

    Q: np.ndarray

    @property
    def power(self) -> float:
        return float(np.trace(self.Q).real)


@dataclass(frozen=True)
class AwareJammer:
    """Training-aligned jammer.

    Attributes:
        signals: ``(n_j, L)`` transmitted samples, one column per slot.
        allocations: ``(L, n)`` per-slot eigenmode powers from water-filling.
        raw_power: per-slot power before renormalization to the budget.
    """

    signals: np.ndarray
    allocations: np.ndarray
    raw_power: np.ndarray


def water_fill(eigenvalues, budget: float) -> WaterFillingSolution:
    """Distributes ``budget`` as ``(level - 1/lambda_i)^+`` over the modes.

    Modes with a zero eigenvalue get no power. The active set is found by
    bisection over the sorted breakpoints ``1/lambda_i``; the level is then
    solved in closed form on that set and the allocations are rescaled so they
    sum to the budget to rounding.
    """
    lam = np.asarray(eigenvalues, dtype=float).reshape(-1)
    if np.any(lam < 0) or np.any(~np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite and nonnegative")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    alloc = np.zeros_like(lam)
    usable = np.flatnonzero(lam > 0)
    if usable.size == 0:
        if budget > 0:
            raise ValueError("no mode with a positive eigenvalue to load")
        return WaterFillingSolution(alloc, 0.0)

    floors = 1.0 / lam[usable]
    order = np.argsort(floors, kind="stable")
    b = floors[order]
    csum = np.cumsum(b)
    # water needed to bring the level up to breakpoint m: sum_{i<m} (b_m - b_i)
    def fill_to(m):
        return b[m] * m - (csum[m - 1] if m > 0 else 0.0)

    # m modes are active once the budget no longer reaches breakpoint m
    lo, hi = 1, b.size
    while lo < hi:
        mid = (lo + hi) // 2
        if fill_to(mid) >= budget:
            hi = mid
        else:
            lo = mid + 1
    m = lo
    level = (budget + csum[m - 1]) / m
    p = np.maximum(level - b[:m], 0.0)
    # level - 1/lambda cancels badly for small budgets on weak modes
    if budget > 0:
        p *= budget / p.sum()
    alloc[usable[order[:m]]] = p
    return WaterFillingSolution(alloc, float(level))


def unaware_threshold(n_j: int, n_r: int, k_j: float) -> float:
    """``k(1+k) / (n_r (1 + n_j k))``, the per-antenna level below which only the LOS mode is fed."""
    return k_j * (1 + k_j) / (n_r * (1 + n_j * k_j))


def unaware_power_levels(n_j: int, n_r: int, k_j: float, budget: float) -> np.ndarray:
    """Diagonal of the signal-unaware allocation in the correlation eigenbasis.

    Entry 0 is the LOS eigenmode (largest eigenvalue of ``upsilon``).
    """
    if n_j < 1:
        raise ValueError("n_j must be at least 1")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    per = budget / n_j
    t = unaware_threshold(n_j, n_r, k_j)
    excess = max(per - t, 0.0)
    q = np.full(n_j, excess)
    q[0] = min(per, t) * n_j + excess
    return q


def unaware_allocation(n_j: int, n_r: int, k_j: float, budget: float) -> np.ndarray:
    """Signal-unaware covariance ``Q_j`` in antenna coordinates.

    The levels from :func:`unaware_power_levels` are placed on the eigenvectors
    of ``upsilon``: the first on ``1/sqrt(n_j)``, the others on its orthogonal
    complement, which gives ``Q = q_rest I + (q_0 - q_rest) 1 1^T / n_j``.
    """
    q = unaware_power_levels(n_j, n_r, k_j, budget)
    rest = q[1] if n_j > 1 else 0.0
    Q = rest * np.eye(n_j) + (q[0] - rest) * np.full((n_j, n_j), 1.0 / n_j)
    return Q.astype(complex)


def uniform_allocation(n_j: int, budget: float) -> np.ndarray:
    return (budget / n_j) * np.eye(n_j, dtype=complex)


def sample_unaware_signal(Q: np.ndarray, L: int, rng_seed) -> np.ndarray:
    """Draws ``L`` i.i.d. ``CN(0, Q)`` vectors as the columns of an ``(n_j, L)`` array."""
    Q = _check_psd(Q)
    rng = as_generator(rng_seed)
    w, V = np.linalg.eigh(Q)
    root = V * np.sqrt(np.clip(w, 0.0, None))
    return root @ complex_normal(rng, (Q.shape[0], L))


def _sorted_eigh(M: np.ndarray):
    w, V = np.linalg.eigh(M)
    order = np.argsort(-w, kind="stable")
    return np.clip(w[order], 0.0, None), V[:, order]


def aware_signal(H_j, x_t, budget: float) -> AwareJammer:
    """Training-aligned jamming signal.

    Per slot, ``H_j^H H_j = U diag(lambda) U^H`` is water-filled over its
    ``min(n_r, n_j)`` leading modes and every mode carries the training symbol's
    phase. The raw form ``sqrt(p_i) x / |x|^2`` has power ``budget / |x|^2``;
    each slot is rescaled to spend exactly ``budget``.

    Args:
        H_j: ``(n_r, n_j)`` for a block-fading channel or ``(L, n_r, n_j)``.
        x_t: Training symbols, length ``L``.
        budget: Per-slot power ``P_j``.
    """
    x = np.asarray(getattr(x_t, "symbols", x_t), dtype=complex).reshape(-1)
    if np.any(np.abs(x) == 0):
        raise ValueError("training sequence has a zero symbol")
    H = np.asarray(H_j, dtype=complex)
    L = x.size
    block = H.ndim == 2
    if not block and H.shape[0] != L:
        raise ValueError(f"got {H.shape[0]} channel slots for {L} training symbols")
    n_r, n_j = H.shape[-2:]
    n = min(n_r, n_j)

    signals = np.zeros((n_j, L), dtype=complex)
    allocs = np.zeros((L, n))
    if budget == 0:
        return AwareJammer(signals=signals, allocations=allocs, raw_power=np.zeros(L))

    def modes(Hl):
        lam, U = _sorted_eigh(Hl.conj().T @ Hl)
        return U[:, :n], water_fill(lam[:n], budget).allocations

    phase = x / np.abs(x)
    if block:
        U, p = modes(H)
        allocs[:] = p
        signals = np.outer(U @ np.sqrt(p), phase)
    else:
        for l in range(L):
            U, allocs[l] = modes(H[l])
            signals[:, l] = U @ np.sqrt(allocs[l]) * phase[l]
    raw = budget / np.abs(x) ** 2
    return AwareJammer(signals=signals, allocations=allocs, raw_power=raw)


def alignment_objective(h_t_nlos, x: complex, X_j, H_j) -> float:
    """Real part of ``tr(h x X^H H^H) + tr(H^H H X X^H)`` for one slot."""
    h = np.asarray(h_t_nlos, dtype=complex).reshape(-1)
    X = np.asarray(X_j, dtype=complex).reshape(-1)
    H = np.asarray(H_j, dtype=complex)
    g = H @ X
    cross = x * np.vdot(g, h)
    return float(cross.real + np.vdot(g, g).real)
