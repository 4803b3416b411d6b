"""
Synthetic measurement data: noisy reflectivity traces, detuning maps, and the
bookkeeping that maps lab knobs (cavity temperature, RF chain) onto model
frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    DomainError,
    DriveCondition,
    SystemParams,
    drive_from_power,
    reflectivity,
)

__all__ = [
    "SIGMA_FLOOR",
    "SpectrumMeta",
    "Spectrum",
    "DetuningMap",
    "ThermalCalibration",
    "FrequencyPlan",
    "sample_spectrum",
    "detuning_map",
    "row_seed",
    "fsr_from_temperature",
    "temperature_for",
    "analyzer_frequency_map",
    "modulation_from_analyzer",
    "noise_sigma_for_snr",
    "find_dips",
    "ridge_gaps",
]

SIGMA_FLOOR = 1e-4


@dataclass
class SpectrumMeta:
    power_in: float = 0.0
    delta: float = 0.0
    temperature: Optional[float] = None  # degC
    seed: Optional[int] = None
    timestamp: Optional[str] = None


@dataclass
class Spectrum:
    omega: np.ndarray
    r_values: np.ndarray
    sigma: np.ndarray
    meta: SpectrumMeta = field(default_factory=SpectrumMeta)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.r_values = np.asarray(self.r_values, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        n = self.omega.shape
        if self.r_values.shape != n or self.sigma.shape != n or self.omega.ndim != 1:
            raise DomainError("omega, r_values and sigma must be 1-D of equal length")
        if np.any(self.sigma <= 0):
            raise DomainError("sigma must be strictly positive")

    def __len__(self):
        return self.omega.size


@dataclass
class DetuningMap:
    delta_grid: np.ndarray
    omega_grid: np.ndarray
    r_matrix: np.ndarray
    sigma: np.ndarray
    meta: SpectrumMeta = field(default_factory=SpectrumMeta)

    def __post_init__(self):
        self.delta_grid = np.asarray(self.delta_grid, dtype=float)
        self.omega_grid = np.asarray(self.omega_grid, dtype=float)
        self.r_matrix = np.asarray(self.r_matrix, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        shape = (self.delta_grid.size, self.omega_grid.size)
        if self.r_matrix.shape != shape or self.sigma.shape != shape:
            raise DomainError(f"map must have shape {shape}, got {self.r_matrix.shape}")

    def row(self, k: int) -> Spectrum:
        meta = SpectrumMeta(power_in=self.meta.power_in, delta=float(self.delta_grid[k]),
                            seed=self.meta.seed, timestamp=self.meta.timestamp)
        return Spectrum(self.omega_grid.copy(), self.r_matrix[k].copy(),
                        self.sigma[k].copy(), meta)


@dataclass(frozen=True)
class ThermalCalibration:
    """Linear map from cavity temperature to FSR detuning.

    The default slope is the FSR (~omega_m) times the linear expansion
    coefficient of brass, with the sign of a lengthening cavity.
    """

    t_ref: float = 23.5      # degC, centre of the operating window
    slope: float = -236e3    # Hz/K

    def __post_init__(self):
        if not (np.isfinite(self.t_ref) and np.isfinite(self.slope)):
            raise DomainError("thermal calibration must be finite")


@dataclass(frozen=True)
class FrequencyPlan:
    """Heterodyne chain: AOM-shifted local oscillator, then an RF mixer."""

    f_aom: float = 80e6
    f_if: float = 1e9

    def __post_init__(self):
        if not self.f_aom < self.f_if:
            raise DomainError("f_aom must be below f_if")


def _check_grid(omega_grid) -> np.ndarray:
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("frequency grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(grid)):
        raise DomainError("frequency grid must be finite")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise DomainError("frequency grid must be strictly increasing")
    return grid


def sample_spectrum(params: SystemParams, drive: DriveCondition, omega_grid,
                    noise_sigma: float = 0.0, seed: int = 0,
                    sigma_floor: float = SIGMA_FLOOR) -> Spectrum:
    """
    Reflectivity on ``omega_grid`` plus i.i.d. Gaussian noise, clamped at zero.

    Output is a pure function of the arguments; ``seed`` feeds
    ``numpy.random.default_rng``.
    """
    if noise_sigma < 0:
        raise DomainError(f"noise_sigma must be non-negative, got {noise_sigma!r}")
    grid = _check_grid(omega_grid)
    r = reflectivity(params, drive, grid)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        r = np.clip(r + rng.normal(0.0, noise_sigma, grid.size), 0.0, None)
    sigma = np.full(grid.size, max(noise_sigma, sigma_floor))
    meta = SpectrumMeta(power_in=drive.power_in, delta=drive.delta, seed=seed)
    return Spectrum(grid, np.asarray(r, dtype=float), sigma, meta)


def row_seed(master_seed: int, row: int) -> int:
    """Per-row seed: numpy SeedSequence over (master_seed, row), first 63 bits."""
    state = np.random.SeedSequence([int(master_seed), int(row)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def detuning_map(params: SystemParams, power_in: float, delta_grid, omega_grid,
                 noise_sigma: float = 0.0, seed: int = 0,
                 sigma_floor: float = SIGMA_FLOOR) -> DetuningMap:
    """One :func:`sample_spectrum` row per FSR detuning at fixed input power."""
    deltas = _check_grid(delta_grid)
    grid = _check_grid(omega_grid)
    rows, sigmas = [], []
    for k, d in enumerate(deltas):
        drive = drive_from_power(params, power_in, float(d))
        spec = sample_spectrum(params, drive, grid, noise_sigma, row_seed(seed, k), sigma_floor)
        rows.append(spec.r_values)
        sigmas.append(spec.sigma)
    meta = SpectrumMeta(power_in=power_in, delta=float("nan"), seed=seed)
    return DetuningMap(deltas, grid, np.array(rows), np.array(sigmas), meta)


def fsr_from_temperature(calib: ThermalCalibration, temperature: float) -> float:
    """FSR detuning [Hz] at cavity ``temperature`` [degC]."""
    if not np.isfinite(temperature):
        raise DomainError("temperature must be finite")
    # + 0.0 folds -0.0 into 0.0 so t_ref and delta = 0 serialise identically
    return calib.slope * (temperature - calib.t_ref) + 0.0


def temperature_for(calib: ThermalCalibration, delta: float) -> float:
    """Cavity temperature [degC] that produces FSR detuning ``delta``."""
    if calib.slope == 0:
        raise DomainError("zero thermal slope cannot be inverted")
    return calib.t_ref + delta / calib.slope


def analyzer_frequency_map(plan: FrequencyPlan, modulation_f: float, omega_m: float) -> float:
    """
    Spectrum-analyser frequency at which the probe at ``modulation_f`` appears.

    The beat note against the AOM-shifted local oscillator sits at
    ``modulation_f - f_aom``; the mixer, referenced to ``omega_m - f_if``,
    brings it to ``f_if - f_aom + (modulation_f - omega_m)``.  The probe must
    stay within the band that keeps this frequency positive.
    """
    offset = modulation_f - omega_m
    if not abs(offset) < plan.f_if - plan.f_aom:
        raise DomainError(
            f"modulation frequency {modulation_f!r} Hz is outside the mixer band "
            f"(|f - omega_m| < {plan.f_if - plan.f_aom!r} Hz)")
    return plan.f_if - plan.f_aom + offset


def modulation_from_analyzer(plan: FrequencyPlan, analyzer_f: float, omega_m: float) -> float:
    """Inverse of :func:`analyzer_frequency_map`."""
    return analyzer_f - (plan.f_if - plan.f_aom) + omega_m


def noise_sigma_for_snr(snr_db: float, amp_a: float = 1.0) -> float:
    """
    Noise level giving ``snr_db`` relative to the bare-cavity dip depth ``2A - A**2``.

    R is a power quantity, so the ratio is taken as ``10*log10(depth/sigma)``.
    """
    depth = amp_a * (2 - amp_a)
    return depth * 10 ** (-snr_db / 10)


def find_dips(r_values, min_prominence: float = 0.0) -> np.ndarray:
    """
    Indices of interior local minima, optionally filtered by prominence.

    A flat-bottomed minimum is reported once, at the middle of its plateau.
    """
    from scipy.signal import find_peaks

    idx, _ = find_peaks(-np.asarray(r_values, dtype=float),
                        prominence=min_prominence if min_prominence > 0 else None)
    return idx


def ridge_gaps(dmap: DetuningMap, min_prominence: float = 0.0) -> np.ndarray:
    """
    Separation of the two deepest dips in each map row [Hz].

    Rows with fewer than two dips give 0: the ridges have merged there.
    """
    gaps = np.zeros(dmap.delta_grid.size)
    for k, row in enumerate(dmap.r_matrix):
        idx = find_dips(row, min_prominence)
        if idx.size >= 2:
            deepest = np.sort(idx[np.argsort(row[idx])[:2]])
            gaps[k] = dmap.omega_grid[deepest[1]] - dmap.omega_grid[deepest[0]]
    return gaps
