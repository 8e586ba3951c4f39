"""Uniform linear array response: steering vectors, derivatives, projectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "steering_vector",
    "steering_derivative",
    "steering_matrix",
    "projector_G",
    "ula_sigma",
]

_HALF_PI = np.pi / 2


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array.

    Attributes:
        n_elements: Number of antenna elements.
        spacing: Inter-element spacing in meters.
        wavelength: Carrier wavelength in meters.
    """

    n_elements: int
    spacing: float = 0.5
    wavelength: float = 1.0

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements must be a positive integer, got {self.n_elements}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")

    @classmethod
    def half_wavelength(cls, n_elements: int) -> "ArrayGeometry":
        return cls(n_elements, 0.5, 1.0)

    @property
    def phase_scale(self) -> float:
        """2*pi*d/lambda."""
        return 2 * np.pi * self.spacing / self.wavelength


def _check_angle(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) > _HALF_PI + 1e-12) or np.any(~np.isfinite(theta)):
        raise ValueError("angle outside [-pi/2, pi/2] is ambiguous for a ULA")
    return theta


def steering_vector(geom: ArrayGeometry, theta: float) -> np.ndarray:
    """Returns ``[1, z, ..., z^(N-1)]`` with ``z = exp(-j 2 pi d sin(theta) / lambda)``."""
    theta = float(_check_angle(theta))
    m = np.arange(geom.n_elements)
    out = np.exp(-1j * geom.phase_scale * np.sin(theta) * m)
    out[0] = 1.0
    return out


def steering_matrix(geom: ArrayGeometry, thetas) -> np.ndarray:
    """Stacks steering vectors column-wise, shape ``(n_elements, len(thetas))``."""
    thetas = np.atleast_1d(_check_angle(thetas))
    m = np.arange(geom.n_elements)[:, None]
    return np.exp(-1j * geom.phase_scale * m * np.sin(thetas)[None, :])


def steering_derivative(geom: ArrayGeometry, theta: float) -> np.ndarray:
    """Analytic derivative of :func:`steering_vector` with respect to ``theta``."""
    theta = float(_check_angle(theta))
    m = np.arange(geom.n_elements)
    return (-1j * geom.phase_scale * m * np.cos(theta)) * steering_vector(geom, theta)


def projector_G(a: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the complement of ``span(a)``: ``I - a a^H / (a^H a)``."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    norm2 = np.vdot(a, a).real
    if norm2 <= 0:
        raise ValueError("projector of a zero vector is undefined")
    return np.eye(a.size, dtype=complex) - np.outer(a, a.conj()) / norm2


def ula_sigma(geom: ArrayGeometry, theta: float) -> float:
    """``D^H D`` for a ULA in closed form: ``(2 pi d cos(theta) / lambda)^2 * sum(i^2)``."""
    theta = float(_check_angle(theta))
    n = geom.n_elements
    sum_sq = (n - 1) * n * (2 * n - 1) / 6
    return float((geom.phase_scale * np.cos(theta)) ** 2 * sum_sq)
