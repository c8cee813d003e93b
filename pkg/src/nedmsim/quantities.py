"""Unit conventions and conversion from (dipole x field x time) to phase.

Internal conventions, fixed once here so every other module can treat the
core products as dimensionless phases:

* dipole moments in e·cm
* electric fields in V/cm
* magnetic fields in tesla
* times in seconds
* hbar = 1, so a dipole d in a field E accumulates phase at the rate
  d * E * KAPPA rad/s, with KAPPA = e * (1 V) / hbar converting
  (e·cm x V/cm) into an angular frequency.

The kick parameter of a field pulse is

    xi = geometric_factor * KAPPA * integral(E dt)      [rad per e·cm]

so that d * xi is the dimensionless rotation angle a dipole d picks up.
The geometric factor defaults to 1/(2*sqrt(j*(j+1))) for j = 1/2, i.e.
1/sqrt(3); it is configurable because it depends on the spin-projection
convention and not on any measured quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "E_CHARGE_C",
    "HBAR_J_S",
    "KAPPA_DEFAULT",
    "GEOMETRIC_FACTOR_DEFAULT",
    "GAMMA_N_RAD_PER_S_T",
    "GAMMA_HG_RAD_PER_S_T",
    "MU_N_RAD_PER_S_T",
    "UnitSystem",
    "PhysicalConstants",
    "PulseProfile",
    "phase_factor",
    "xi_from_pulse",
]

# CODATA 2018. e is exact by SI definition.
E_CHARGE_C = 1.602176634e-19     # elementary charge [C]
HBAR_J_S = 1.054571817e-34       # reduced Planck constant [J s]

# Phase accumulated per (e·cm x V/cm x s): the energy of a 1 e·cm dipole in
# a 1 V/cm field is e * 1 V (the cm cancels), so the rate is e*V/hbar.
KAPPA_DEFAULT = E_CHARGE_C / HBAR_J_S    # ~1.5193e15 rad per (e·cm V/cm s)

# 1/(2*sqrt(j(j+1))) at j = 1/2.
GEOMETRIC_FACTOR_DEFAULT = 1.0 / math.sqrt(3.0)

# Neutron gyromagnetic ratio, CODATA magnitude with the physical sign
# (the neutron moment is negative).
GAMMA_N_RAD_PER_S_T = -1.83247171e8

# 199Hg follows from the measured frequency ratio |gamma_n/gamma_hg|
# = 3.8424574 used by comagnetometer analyses.
GAMMA_HG_RAD_PER_S_T = abs(GAMMA_N_RAD_PER_S_T) / 3.8424574

# Magnetic moment in angular-frequency units (mu/hbar). For a spin-1/2
# Larmor frequency f = |gamma| B / 2pi = mu B / pi, this is |gamma|/2.
MU_N_RAD_PER_S_T = abs(GAMMA_N_RAD_PER_S_T) / 2.0


def _require_finite(**values: float) -> None:
    bad = [name for name, v in values.items() if not math.isfinite(v)]
    if bad:
        raise ValueError(f"non-finite input: {', '.join(bad)}")


@dataclass(frozen=True)
class UnitSystem:
    """Conversion constants between laboratory units and internal phase.

    Attributes
    ----------
    phase_per_edm_field_time : float
        rad accumulated per (e·cm x V/cm x s); defaults to e*V/hbar.
    geometric_factor : float
        Dimensionless spin-projection factor entering the kick parameter;
        defaults to 1/sqrt(3).
    """

    phase_per_edm_field_time: float = KAPPA_DEFAULT
    geometric_factor: float = GEOMETRIC_FACTOR_DEFAULT

    def __post_init__(self) -> None:
        _require_finite(
            phase_per_edm_field_time=self.phase_per_edm_field_time,
            geometric_factor=self.geometric_factor,
        )
        if self.phase_per_edm_field_time <= 0:
            raise ValueError("phase_per_edm_field_time must be > 0")
        if self.geometric_factor <= 0:
            raise ValueError("geometric_factor must be > 0")


@dataclass(frozen=True)
class PhysicalConstants:
    """Gyromagnetic ratios and the neutron moment in frequency units.

    ``mu_n`` is mu/hbar in rad/s per tesla, so the spin-1/2 Larmor
    frequency is f = mu_n * B / pi. The default keeps mu_n = |gamma_n|/2
    exactly, which makes the frequency ratio formed by the comagnetometer
    reduce to |gamma_n|/|gamma_hg| with no residual field dependence.
    """

    gamma_n: float = GAMMA_N_RAD_PER_S_T
    gamma_hg: float = GAMMA_HG_RAD_PER_S_T
    mu_n: float = MU_N_RAD_PER_S_T

    def __post_init__(self) -> None:
        _require_finite(gamma_n=self.gamma_n, gamma_hg=self.gamma_hg, mu_n=self.mu_n)
        if self.gamma_hg == 0:
            raise ValueError("gamma_hg must be nonzero")


@dataclass(frozen=True)
class PulseProfile:
    """Applied electric-field pulse, reduced to its time integral.

    Only ``field_time_integral`` (integral of E(t) dt, in (V/cm)*s) enters
    the physics; switching is assumed slow enough that transients are
    negligible. A sampled envelope may be attached for bookkeeping.
    """

    field_time_integral: float
    times: tuple[float, ...] = field(default=(), repr=False)
    amplitudes: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        _require_finite(field_time_integral=self.field_time_integral)
        if len(self.times) != len(self.amplitudes):
            raise ValueError("times and amplitudes must have equal length")

    @classmethod
    def rectangular(cls, amplitude: float, duration: float) -> "PulseProfile":
        """Constant field of the given amplitude over the given duration."""
        _require_finite(amplitude=amplitude, duration=duration)
        if duration < 0:
            raise ValueError("duration must be >= 0")
        return cls(field_time_integral=amplitude * duration)

    @classmethod
    def from_samples(
        cls, times: Sequence[float], amplitudes: Sequence[float]
    ) -> "PulseProfile":
        """Build from a sampled envelope; the integral is the trapezoid sum."""
        t = np.asarray(times, dtype=float)
        a = np.asarray(amplitudes, dtype=float)
        if t.ndim != 1 or t.shape != a.shape or t.size < 2:
            raise ValueError("need >= 2 matching (time, amplitude) samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise ValueError("non-finite input: times/amplitudes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        integral = float(np.trapezoid(a, t))
        return cls(
            field_time_integral=integral,
            times=tuple(float(x) for x in t),
            amplitudes=tuple(float(x) for x in a),
        )

    def concatenated(self, other: "PulseProfile") -> "PulseProfile":
        """Pulse equivalent to this one followed by ``other``.

        Integrals add; the sampled envelopes are dropped because only the
        integral carries physics.
        """
        return PulseProfile(
            field_time_integral=self.field_time_integral + other.field_time_integral
        )


def phase_factor(
    dipole: float, field_time_integral: float, units: UnitSystem
) -> float:
    """Phase (rad) accumulated by a dipole over a field pulse.

    Returns ``dipole * geometric_factor * kappa * field_time_integral``,
    linear in each argument.

    Parameters
    ----------
    dipole : float
        Dipole moment in e·cm.
    field_time_integral : float
        Integral of E(t) dt in (V/cm)*s.
    units : UnitSystem
        Conversion constants.
    """
    _require_finite(dipole=dipole, field_time_integral=field_time_integral)
    return (
        dipole
        * units.geometric_factor
        * units.phase_per_edm_field_time
        * field_time_integral
    )


def xi_from_pulse(profile: PulseProfile, units: UnitSystem) -> float:
    """Kick parameter xi (rad per e·cm) of a pulse.

    xi = geometric_factor * kappa * integral(E dt). Additive over
    concatenated pulses and invariant under any time reparametrization
    that preserves the integral.
    """
    return (
        units.geometric_factor
        * units.phase_per_edm_field_time
        * profile.field_time_integral
    )
