"""Hybrid photon-phonon modes, normal-mode splitting and coupling regimes."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import DomainError, DriveCondition, SystemParams, thermal_occupation

__all__ = [
    "HybridModes",
    "Regime",
    "RegimeClass",
    "hybrid_modes",
    "hybrid_offsets",
    "splitting",
    "classify_regime",
    "threshold_power",
    "min_separation_over_detuning",
]


@dataclass(frozen=True)
class HybridModes:
    """Complex frequencies of the two hybrid modes.

    Real part is the centre frequency, ``-2 * imag`` the FWHM linewidth.
    ``freq_plus`` has the larger real part.
    """

    freq_plus: complex
    freq_minus: complex

    @property
    def separation(self) -> float:
        return self.freq_plus.real - self.freq_minus.real

    @property
    def linewidths(self) -> tuple[float, float]:
        return -2 * self.freq_plus.imag, -2 * self.freq_minus.imag


class Regime(enum.Enum):
    WEAK = "Weak"
    SPLIT_UNRESOLVED = "SplitUnresolved"
    STRONG = "Strong"


@dataclass(frozen=True)
class RegimeClass:
    regime: Regime
    quantum_coherent: bool
    g_m: float
    strong_threshold: float
    splitting_onset: float
    n_th: float
    coherence_threshold: float


def _order(a: complex, b: complex) -> tuple[complex, complex]:
    if (a.real, -a.imag) >= (b.real, -b.imag):
        return a, b
    return b, a


def hybrid_offsets(kappa_s: float, gamma_m: float, g_m: float, delta: float) -> tuple[complex, complex]:
    """
    Roots x = Omega - omega_m of

        (kappa_s/2 - i*(x - delta)) * (gamma_m/2 - i*x) + g_m**2 = 0

    i.e. ``x**2 + b*x + c = 0`` with ``b = i*(kappa_s/2 + gamma_m/2 + i*delta)``
    and ``c = -((kappa_s/2 + i*delta) * gamma_m/2 + g_m**2)``.  The root of
    larger magnitude is taken first and the other follows from the product, so
    weak coupling does not suffer cancellation.
    """
    if kappa_s < 0 or gamma_m < 0:
        raise DomainError("linewidths must be non-negative")
    if kappa_s == 0 and gamma_m == 0:
        raise DomainError("kappa_s and gamma_m cannot both be zero")
    # solve in units of the largest rate so squares neither overflow nor underflow
    scale = max(kappa_s / 2, gamma_m / 2, abs(delta), g_m)
    a = (kappa_s / 2 + 1j * delta) / scale
    b_ = gamma_m / 2 / scale
    g = g_m / scale
    b = 1j * (a + b_)
    c = -(a * b_ + g * g)
    # b**2 - 4c == 4 g**2 - (a - b_)**2, written without cancellation in b**2
    s = np.sqrt(complex(4 * g * g - (a - b_) ** 2))
    if (b.conjugate() * s).real < 0:
        s = -s
    q = -(b + s) / 2
    if q == 0:
        return 0j, 0j
    return _order(complex(q * scale), complex(c / q * scale))


def hybrid_modes(params: SystemParams, drive: DriveCondition) -> HybridModes:
    """Complex eigenfrequencies of the coupled signal and mechanical modes [Hz]."""
    x1, x2 = hybrid_offsets(params.kappa_s, params.gamma_m, drive.g_m, drive.delta)
    return HybridModes(params.omega_m + x1, params.omega_m + x2)


def splitting(params: SystemParams, g_m: float) -> float:
    """Real-frequency separation of the hybrid modes at zero FSR detuning [Hz]."""
    if g_m < 0:
        raise DomainError(f"g_m must be non-negative, got {g_m!r}")
    half_mismatch = (params.kappa_s - params.gamma_m) / 4
    if g_m <= abs(half_mismatch):
        return 0.0
    # (g - m)(g + m) keeps precision just above the onset
    return 2 * float(np.sqrt((g_m - half_mismatch) * (g_m + half_mismatch)))


def classify_regime(params: SystemParams, drive: DriveCondition, temperature: float) -> RegimeClass:
    """Coupling regime and the thermal-decoherence verdict at ``temperature`` [K]."""
    g = drive.g_m
    strong = params.strong_threshold
    onset = params.splitting_onset
    if g > strong:
        regime = Regime.STRONG
    elif g > onset:
        regime = Regime.SPLIT_UNRESOLVED
    else:
        regime = Regime.WEAK
    n_th = thermal_occupation(params.omega_m, temperature)
    coherence = params.gamma_m * n_th
    return RegimeClass(regime=regime, quantum_coherent=bool(g > coherence), g_m=g,
                       strong_threshold=strong, splitting_onset=onset, n_th=n_th,
                       coherence_threshold=coherence)


def threshold_power(params: SystemParams) -> float:
    """Input power [W] at which ``g0 * sqrt(photon_calib * P)`` reaches the strong threshold."""
    if params.g0 <= 0 or params.photon_calib <= 0:
        raise DomainError("no threshold: g0 and photon_calib must both be positive")
    return (params.strong_threshold / params.g0) ** 2 / params.photon_calib


def min_separation_over_detuning(params: SystemParams, g_m: float, delta_grid) -> tuple[float, float]:
    """Detuning in ``delta_grid`` minimising the hybrid-mode real-part gap, and that gap."""
    deltas = np.asarray(delta_grid, dtype=float).ravel()
    if deltas.size == 0:
        raise DomainError("delta grid is empty")
    gaps = np.empty(deltas.size)
    for i, d in enumerate(deltas):
        x1, x2 = hybrid_offsets(params.kappa_s, params.gamma_m, g_m, d)
        gaps[i] = x1.real - x2.real
    i_min = int(np.argmin(gaps))
    return float(deltas[i_min]), float(gaps[i_min])
