"""
Forward model of the two-mode Brillouin optomechanical cavity.

The anti-Stokes signal mode (linewidth kappa_s) is coupled to a bulk acoustic
mode (frequency omega_m, linewidth gamma_m) through a beam-splitter interaction
of strength g_m = g0 * sqrt(N), with N the intracavity pump photon number.
Everything here is a mean-field steady state for a weak probe scanned at the
modulation frequency ``omega``.

All rates and frequencies are cyclic (Hz).  The response is homogeneous of
degree zero in a global 2*pi, so angular units would give identical
reflectivities.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.constants import h, k as k_B

__all__ = [
    "DomainError",
    "SystemParams",
    "DriveCondition",
    "REFERENCE_PARAMS",
    "photon_number",
    "coupling_rate",
    "drive_from_power",
    "steady_state_fields",
    "reflectivity",
    "reflectivity_from",
    "bare_reflectivity",
    "thermal_occupation",
]

MODEL_VERSION = "1"

# intracavity photons per watt: max N / max P_in of the reference device
DEFAULT_PHOTON_CALIB = 6.1e11 / 0.301


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one cavity + crystal system.

    Parameters
    ----------
    omega_m : float
        mechanical (Brillouin) resonance frequency [Hz]
    gamma_m : float
        mechanical FWHM linewidth [Hz]
    kappa_s : float
        signal-mode FWHM linewidth [Hz]
    kappa_p : float
        pump-mode FWHM linewidth [Hz], carried as metadata only
    g0 : float
        single-photon coupling rate [Hz]
    photon_calib : float
        intracavity pump photons per watt of input power [1/W]
    amp_a : float
        contrast factor of the reflection dip, between 0 and 1
    """

    omega_m: float = 12.43e9
    gamma_m: float = 7.130e6
    kappa_s: float = 3.438e6
    kappa_p: float = 3.029e6
    g0: float = 7.76
    photon_calib: float = DEFAULT_PHOTON_CALIB
    amp_a: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise DomainError(f"{f.name} must be finite, got {value!r}")
            if value < 0:
                raise DomainError(f"{f.name} must be non-negative, got {value!r}")
        if self.amp_a > 1:
            raise DomainError(f"amp_a must lie in [0, 1], got {self.amp_a!r}")

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    @property
    def strong_threshold(self) -> float:
        """Coupling rate above which the hybrid peaks are resolved [Hz]."""
        return (self.kappa_s + self.gamma_m) / 2

    @property
    def splitting_onset(self) -> float:
        """Coupling rate above which the hybrid frequencies split [Hz]."""
        return abs(self.kappa_s - self.gamma_m) / 4


REFERENCE_PARAMS = SystemParams()


@dataclass(frozen=True)
class DriveCondition:
    """One experimental setting.

    ``g_m`` is derived from ``photons`` at construction time; use
    :func:`drive_from_power` or :meth:`from_coupling` rather than building one
    by hand.
    """

    power_in: float
    delta: float
    photons: float
    g_m: float

    def __post_init__(self):
        if self.power_in < 0:
            raise DomainError(f"power_in must be non-negative, got {self.power_in!r}")
        if self.photons < 0:
            raise DomainError(f"photons must be non-negative, got {self.photons!r}")
        if self.g_m < 0:
            raise DomainError(f"g_m must be non-negative, got {self.g_m!r}")

    @classmethod
    def from_coupling(cls, g_m: float, delta: float = 0.0,
                      params: SystemParams = REFERENCE_PARAMS) -> "DriveCondition":
        """Drive that realises the coupling rate ``g_m`` for the given system."""
        if g_m < 0:
            raise DomainError(f"g_m must be non-negative, got {g_m!r}")
        if params.g0 > 0:
            photons = (g_m / params.g0) ** 2
            power = photons / params.photon_calib if params.photon_calib > 0 else 0.0
        else:
            photons = power = 0.0
        return cls(power_in=power, delta=delta, photons=photons, g_m=float(g_m))


def photon_number(params: SystemParams, power_in: float) -> float:
    """Intracavity pump photon number for an input power in watts."""
    if power_in < 0:
        raise DomainError(f"input power must be non-negative, got {power_in!r}")
    return params.photon_calib * power_in


def coupling_rate(params: SystemParams, photons: float) -> float:
    """Effective coupling ``g0 * sqrt(photons)`` [Hz]."""
    if photons < 0:
        raise DomainError(f"photon number must be non-negative, got {photons!r}")
    return params.g0 * np.sqrt(photons)


def drive_from_power(params: SystemParams, power_in: float, delta: float = 0.0) -> DriveCondition:
    photons = photon_number(params, power_in)
    return DriveCondition(power_in=power_in, delta=delta, photons=photons,
                          g_m=float(coupling_rate(params, photons)))


def _check_linewidths(kappa_s, gamma_m):
    if kappa_s <= 0 and gamma_m <= 0:
        raise DomainError("kappa_s and gamma_m cannot both be zero")


def _signal_amplitude(kappa_s, gamma_m, g_m, delta, omega_m, omega):
    """Normalised intracavity signal amplitude; works on numpy arrays."""
    det_m = np.asarray(omega, dtype=float) - omega_m
    det_s = det_m - delta
    mech = gamma_m / 2 - 1j * det_m
    if g_m == 0:
        return 1 / (kappa_s / 2 - 1j * det_s)
    return mech / ((kappa_s / 2 - 1j * det_s) * mech + g_m ** 2)


def steady_state_fields(params: SystemParams, drive: DriveCondition, omega):
    """
    Steady-state intracavity signal and mechanical amplitudes.

    Amplitudes are normalised to ``sqrt(kappa_ext,s) * alpha_in,s``::

                                  1
        a_s = ----------------------------------------------
               kappa_s/2 - i*det_s + g_m**2 / (gamma_m/2 - i*det_m)

        b_m = i*g_m / (gamma_m/2 - i*det_m) * a_s

    with ``det_m = omega - omega_m`` and ``det_s = det_m - delta``.  The
    coupling term enters with a plus sign (beam-splitter dressing), which is
    the convention that produces normal-mode splitting.

    Parameters
    ----------
    params : SystemParams
    drive : DriveCondition
    omega : float or np.ndarray
        probe modulation frequency [Hz]

    Returns
    -------
    a_s, b_m : complex or np.ndarray of complex
        amplitudes in units of seconds (1/Hz)
    """
    _check_linewidths(params.kappa_s, params.gamma_m)
    det_m = np.asarray(omega, dtype=float) - params.omega_m
    mech = params.gamma_m / 2 - 1j * det_m
    denom = (params.kappa_s / 2 - 1j * (det_m - drive.delta)) * mech + drive.g_m ** 2
    a_s = mech / denom
    # i*g/mech * a_s, without dividing by mech (zero for gamma_m = 0 on resonance)
    b_m = 1j * drive.g_m / denom
    if np.ndim(a_s) == 0:
        return complex(a_s), complex(b_m)
    return a_s, b_m


def reflectivity(params: SystemParams, drive: DriveCondition, omega):
    """Cavity reflectivity ``|1 - A*(kappa_s/2)*a_s|**2`` at probe frequency ``omega``."""
    _check_linewidths(params.kappa_s, params.gamma_m)
    return reflectivity_from(params.omega_m, params.gamma_m, params.kappa_s,
                             drive.g_m, drive.delta, params.amp_a, omega)


def reflectivity_from(omega_m, gamma_m, kappa_s, g_m, delta, amp_a, omega):
    """Same as :func:`reflectivity` but on bare numbers; used in the fit loop."""
    a_s = _signal_amplitude(kappa_s, gamma_m, g_m, delta, omega_m, omega)
    r = np.abs(1 - amp_a * (kappa_s / 2) * a_s) ** 2
    return float(r) if np.ndim(r) == 0 else r


def bare_reflectivity(kappa_s, amp_a, det_s):
    """Reflectivity of the uncoupled cavity at signal detuning ``det_s``."""
    return np.abs(1 - amp_a * (kappa_s / 2) / (kappa_s / 2 - 1j * np.asarray(det_s))) ** 2


def thermal_occupation(omega_m: float, temperature: float) -> float:
    """Bose-Einstein occupation of a mode at ``omega_m`` [Hz] and ``temperature`` [K]."""
    if temperature < 0:
        raise DomainError(f"temperature must be non-negative, got {temperature!r}")
    if omega_m <= 0:
        raise DomainError(f"omega_m must be positive, got {omega_m!r}")
    if temperature == 0:
        return 0.0
    x = (h * omega_m / k_B) / temperature
    # e^-x / (1 - e^-x) stays finite for x -> inf, unlike 1 / expm1(x)
    return float(np.exp(-x) / -np.expm1(-x))
