"""Monte Carlo scenarios: channel and jammer draws, estimation, summaries."""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import ClassVar

import numpy as np

from .array import ArrayGeometry
from .channel import RicianChannelSpec, sample_channel
from .estimation import (
    InterferenceCovariance,
    Knowledge,
    MLSpectrum,
    TrainingSequence,
    crb,
    estimate_aoa,
    ml_spectrum,
    rz_noise_only,
    rz_perfect_csi,
    rz_statistical,
)
from .jammer import (
    aware_signal,
    sample_unaware_signal,
    unaware_allocation,
    uniform_allocation,
)
from .rng import complex_normal, substream

__all__ = [
    "JammerMode",
    "Scenario",
    "TrialRecord",
    "ScenarioSummary",
    "CrbCurve",
    "sjnr",
    "run_scenario",
    "crb_sweep",
    "TrialError",
]

# stream ids under the master seed
_TRAINING_STREAM = 0
_TRIAL_STREAM = 1


class JammerMode(enum.Enum):
    NONE = "none"
    UNAWARE = "unaware"
    UNIFORM_UNAWARE = "uniform_unaware"
    AWARE = "aware"


class TrialError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"trial {index} failed: {cause}")
        self.index = index


@dataclass(frozen=True)
class Scenario:
    """One simulated configuration. Angles in radians, Rician factors linear.

    ``snr_db`` sets the noise power relative to a unit-power transmitter.
    """

    theta_t: float
    theta_j: float
    k_t: float
    k_j: float
    snr_db: float
    power_ratio: float
    L: int = 64
    n_r: int = 4
    n_j: int = 4
    spacing: float = 0.5
    wavelength: float = 1.0
    jammer_mode: JammerMode = JammerMode.NONE
    receiver_knowledge: Knowledge = Knowledge.STATISTICAL
    trials: int = 500
    seed: int = 0
    grid_start: float = -np.pi / 2
    grid_stop: float = np.pi / 2
    grid_step: float = np.deg2rad(0.1)
    refine: bool = False
    block_fading: bool = True

    p_t: ClassVar[float] = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.L < 1:
            raise ValueError("training length must be at least 1")
        if self.power_ratio < 0:
            raise ValueError("power_ratio must be nonnegative")
        if not self.grid_step > 0 or self.grid_stop < self.grid_start:
            raise ValueError("invalid angle grid")

    @property
    def sigma_n2(self) -> float:
        return self.p_t / 10 ** (self.snr_db / 10)

    @property
    def p_j(self) -> float:
        return self.power_ratio * self.p_t

    @property
    def rx(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_r, self.spacing, self.wavelength)

    @property
    def jammer_array(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_j, self.spacing, self.wavelength)

    @property
    def grid(self) -> np.ndarray:
        n = int(np.floor((self.grid_stop - self.grid_start) / self.grid_step + 1e-9)) + 1
        g = self.grid_start + self.grid_step * np.arange(n)
        return np.clip(g, -np.pi / 2, np.pi / 2)

    def spec_t(self, theta: float | None = None) -> RicianChannelSpec:
        return RicianChannelSpec(self.k_t, self.theta_t if theta is None else theta, self.rx)

    def spec_j(self) -> RicianChannelSpec:
        return RicianChannelSpec(self.k_j, self.theta_j, self.rx, 0.0, self.jammer_array)

    def reference_spec_j(self) -> RicianChannelSpec:
        """Jammer channel as modelled by a receiver that knows statistics only.

        The geometry is unknown to it, so the LOS is placed at broadside on both
        ends; with a uniform allocation this gives ``P_j`` times the ``n_r x n_r``
        correlation matrix with ``k/(1+k)`` off the diagonal.
        """
        return RicianChannelSpec(self.k_j, 0.0, self.rx, 0.0, self.jammer_array)

    def jammer_covariance(self) -> np.ndarray:
        """Long-run jammer covariance used for CRB reporting."""
        if self.jammer_mode is JammerMode.NONE or self.p_j == 0:
            return np.zeros((self.n_j, self.n_j), dtype=complex)
        if self.jammer_mode is JammerMode.UNIFORM_UNAWARE:
            return uniform_allocation(self.n_j, self.p_j)
        return unaware_allocation(self.n_j, self.n_r, self.k_j, self.p_j)

    def training(self) -> TrainingSequence:
        return TrainingSequence.gaussian(self.L, substream(self.seed, _TRAINING_STREAM), self.p_t)


@dataclass
class TrialRecord:
    index: int
    theta_hat: float
    sjnr_db: float
    seed_path: tuple
    spectrum: MLSpectrum | None = None


@dataclass(frozen=True)
class ScenarioSummary:
    trials: int
    mean_theta_hat: float
    var_theta_hat: float
    capture_rate: float
    crb_at_theta_t: float
    mean_sjnr_db: float

    @property
    def efficiency_ratio(self) -> float:
        return self.var_theta_hat / self.crb_at_theta_t


@dataclass(frozen=True)
class CrbCurve:
    grid: np.ndarray
    values: np.ndarray

    @property
    def log10(self) -> np.ndarray:
        return np.log10(self.values)


def sjnr(H_t, x_t_l, H_j, X_j_l, sigma_n2: float) -> float:
    """Signal to jamming-plus-noise ratio of one slot, in dB."""
    s = np.asarray(H_t).reshape(np.shape(H_t)[0], -1) @ np.atleast_1d(x_t_l)
    j = np.asarray(H_j) @ np.asarray(X_j_l).reshape(-1)
    return float(10 * np.log10(np.vdot(s, s).real / (np.vdot(j, j).real + sigma_n2)))


def _receiver_rz(s: Scenario, h_t, h_j, x, X_j) -> InterferenceCovariance:
    k = s.receiver_knowledge
    if k is Knowledge.NONE:
        return rz_noise_only(s.n_r, s.sigma_n2)
    if k is Knowledge.PERFECT_CSI:
        return rz_perfect_csi(h_t.nlos, h_j.total, x, X_j, s.sigma_n2)
    if k is Knowledge.STATISTICAL:
        if s.jammer_mode is JammerMode.NONE:
            Q = np.zeros((s.n_j, s.n_j), dtype=complex)
        else:
            Q = uniform_allocation(s.n_j, s.p_j)
        return rz_statistical(s.spec_t(), s.reference_spec_j(), Q, s.p_t, s.sigma_n2)
    if k is Knowledge.WORST_CASE_AWARE:
        # statistics plus the jammer's true geometry and allocation
        return rz_statistical(s.spec_t(), s.spec_j(), s.jammer_covariance(), s.p_t,
                              s.sigma_n2, Knowledge.WORST_CASE_AWARE)
    raise ValueError(f"unsupported receiver knowledge {k}")


def _run_trial(s: Scenario, x, index: int, keep_spectrum: bool) -> TrialRecord:
    rng = substream(s.seed, _TRIAL_STREAM, index)
    L = s.L
    slots = None if s.block_fading else L
    h_t = sample_channel(s.spec_t(), rng, slots)
    h_j = sample_channel(s.spec_j(), rng, slots)

    if s.jammer_mode is JammerMode.NONE or s.p_j == 0:
        X_j = np.zeros((s.n_j, L), dtype=complex)
    elif s.jammer_mode is JammerMode.AWARE:
        X_j = aware_signal(h_j.total, x, s.p_j).signals
    else:
        X_j = sample_unaware_signal(s.jammer_covariance(), L, rng)

    Ht, Hj = h_t.total, h_j.total
    if s.block_fading:
        sig = Ht @ x.symbols[None, :]
        jam = Hj @ X_j
    else:
        sig = (Ht[:, :, 0] * x.symbols[:, None]).T
        jam = np.einsum("lrj,jl->rl", Hj, X_j)
    noise = np.sqrt(s.sigma_n2) * complex_normal(rng, (s.n_r, L))
    Y = sig + jam + noise

    rz = _receiver_rz(s, h_t, h_j, x, X_j)
    grid = s.grid
    spectrum = ml_spectrum(Y, x, rz, s.rx, grid) if keep_spectrum else None
    theta_hat = estimate_aoa(Y, x, rz, s.rx, grid, refine=s.refine)
    p_sig = np.sum(np.abs(sig) ** 2)
    p_jam = np.sum(np.abs(jam) ** 2)
    sjnr_db = float(10 * np.log10(p_sig / (p_jam + L * s.sigma_n2)))
    return TrialRecord(index, theta_hat, sjnr_db, (s.seed, _TRIAL_STREAM, index), spectrum)


def _run_chunk(args):
    s, x, indices, keep = args
    out = []
    for i in indices:
        try:
            out.append(_run_trial(s, x, i, keep(i) if callable(keep) else keep))
        except Exception as exc:  # noqa: BLE001 - reported with the trial index
            raise TrialError(i, exc) from exc
    return out


def _keep_first(i):
    return i == 0


def _keep_all(i):
    return True


def crb_at(s: Scenario, theta: float | None = None) -> float:
    theta = s.theta_t if theta is None else theta
    rz = rz_statistical(s.spec_t(theta), s.spec_j(), s.jammer_covariance(), s.p_t, s.sigma_n2)
    return crb(theta, rz, s.rx, s.L, s.k_t, s.p_t)


def summarize(s: Scenario, records: list[TrialRecord]) -> ScenarioSummary:
    records = sorted(records, key=lambda r: r.index)
    th = np.array([r.theta_hat for r in records])
    capture = np.abs(th - s.theta_j) < np.abs(th - s.theta_t)
    return ScenarioSummary(
        trials=len(records),
        mean_theta_hat=float(th.mean()),
        var_theta_hat=float(th.var(ddof=1)) if th.size > 1 else 0.0,
        capture_rate=float(capture.mean()),
        crb_at_theta_t=crb_at(s),
        mean_sjnr_db=float(np.mean([r.sjnr_db for r in records])),
    )


def run_scenario(s: Scenario, keep_spectra: str = "first", workers: int = 1):
    """Runs ``s.trials`` independent trials.

    Args:
        keep_spectra: ``"first"``, ``"all"`` or ``"none"``.
        workers: Process count; results do not depend on it.

    Returns:
        ``(summary, records)`` with records ordered by trial index.
    """
    keep = {"first": _keep_first, "all": _keep_all, "none": False}[keep_spectra]
    x = s.training()
    indices = list(range(s.trials))
    if workers <= 1:
        records = _run_chunk((s, x, indices, keep))
    else:
        chunks = [indices[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = pool.map(_run_chunk, [(s, x, c, keep) for c in chunks])
            records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.index)
    return summarize(s, records), records


def crb_sweep(s: Scenario, grid) -> dict[str, CrbCurve]:
    """CRB versus transmitter angle without jamming and under both Gaussian allocations."""
    grid = np.asarray(grid, dtype=float)
    spec_j = s.spec_j()
    out = {}
    cases = {
        "free": np.zeros((s.n_j, s.n_j), dtype=complex),
        "uniform": uniform_allocation(s.n_j, s.p_j),
        "optimal": unaware_allocation(s.n_j, s.n_r, s.k_j, s.p_j),
    }
    for name, Q in cases.items():
        rz = rz_statistical(s.spec_t(), spec_j, Q, s.p_t, s.sigma_n2)
        out[name] = CrbCurve(grid, np.atleast_1d(crb(grid, rz, s.rx, s.L, s.k_t, s.p_t)))
    return out


def with_overrides(s: Scenario, **kw) -> Scenario:
    return replace(s, **kw)
