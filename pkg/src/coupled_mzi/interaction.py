"""Screened-Coulomb interaction phase between copropagating edge channels.

A pair of chiral excitations copropagating at speed ``v`` along channels a
distance ``d`` apart, interacting through a screened Coulomb potential
``(alpha e^2 / r) exp(-r / lambda)``, accumulates a joint geometric phase
that is position-dependent but energy- and time-independent.  Over an
interaction region of length ``L`` at fixed separation the phase is linear
in ``L`` and hence tunable.  Detection-time mismatch adds only a global
phase, which never reaches the drain statistics.

``coulomb_constant`` is a single multiplicative constant in J*m/C^2
(Coulomb's-constant-like), chosen so phases come out in radians; use
:func:`geometry_for_phase` to solve for the constant that realizes a
target phase in a given geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scattering import ELEMENTARY_CHARGE, PLANCK_CONSTANT

HBAR = PLANCK_CONSTANT / (2.0 * math.pi)


@dataclass(frozen=True)
class InteractionGeometry:
    """Geometry of the copropagation region.

    ``copropagation_length`` may be zero (no interaction region); the
    remaining lengths, the speed, and the interaction constant must be
    strictly positive.
    """

    copropagation_length: float  # m
    channel_separation: float  # m
    screening_length: float  # m
    propagation_speed: float  # m/s
    coulomb_constant: float  # J m / C^2

    def __post_init__(self):
        if self.copropagation_length < 0:
            raise ValueError("copropagation length must be non-negative")
        for name in ("channel_separation", "screening_length", "propagation_speed", "coulomb_constant"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def coupling_phase(geom: InteractionGeometry) -> float:
    """Joint interaction phase accumulated over the full region.

    ``gamma = (alpha e^2 / (hbar d)) exp(-d/lambda) (2 L / v)``: linear in
    the interaction length and exponentially suppressed once the channel
    separation exceeds the screening length.
    """
    return position_phase(geom.copropagation_length, geom.copropagation_length, geom)


def position_phase(x1: float, x2: float, geom: InteractionGeometry) -> float:
    """Position-dependent joint phase ``gamma(x1, x2)``.

    ``(alpha e^2 / (hbar r)) exp(-r/lambda) (x1 + x2) / v`` with the
    interaction distance ``r = sqrt(d^2 + (x2 - x1)^2)``.
    """
    r = math.hypot(geom.channel_separation, x2 - x1)
    return (
        geom.coulomb_constant
        * ELEMENTARY_CHARGE**2
        / (HBAR * r)
        * math.exp(-r / geom.screening_length)
        * (x1 + x2)
        / geom.propagation_speed
    )


def wavenumber_shift(separation: float, geom: InteractionGeometry) -> float:
    """Coulomb shift of the joint wave-number at a given channel separation.

    ``delta k = (alpha e^2 / (hbar v r)) exp(-r/lambda)``; integrating it
    over the sum coordinate across the interaction region reproduces
    :func:`coupling_phase`.
    """
    if separation <= 0:
        raise ValueError("separation must be positive")
    return (
        geom.coulomb_constant
        * ELEMENTARY_CHARGE**2
        / (HBAR * geom.propagation_speed * separation)
        * math.exp(-separation / geom.screening_length)
    )


def dynamical_phase(fermi_energy: float, length: float, fermi_velocity: float) -> float:
    """Free single-particle dynamical phase ``2 E_F L / (hbar v_F)``.

    ``fermi_energy`` in joules.  A copropagating pair accumulates twice
    this value.
    """
    if fermi_energy <= 0 or fermi_velocity <= 0:
        raise ValueError("energy and velocity must be positive")
    if length < 0:
        raise ValueError("length must be non-negative")
    return 2.0 * fermi_energy * length / (HBAR * fermi_velocity)


def sequential_phase(energy: float, t1: float, t2: float) -> float:
    """Relative phase ``E (t2 - t1) / hbar`` between staggered drain detections.

    This is a global phase of the collapsed joint state: it must not (and
    does not) change any drain statistics.
    """
    if t2 < t1:
        raise ValueError("second detection cannot precede the first")
    return energy * (t2 - t1) / HBAR


def geometry_for_phase(
    target_gamma: float,
    copropagation_length: float,
    channel_separation: float,
    screening_length: float,
    propagation_speed: float,
) -> InteractionGeometry:
    """Geometry whose interaction constant realizes a target coupling phase."""
    if target_gamma <= 0:
        raise ValueError("target phase must be positive")
    if copropagation_length <= 0:
        raise ValueError("target phase requires a positive interaction length")
    alpha = (
        target_gamma
        * HBAR
        * channel_separation
        * propagation_speed
        * math.exp(channel_separation / screening_length)
        / (ELEMENTARY_CHARGE**2 * 2.0 * copropagation_length)
    )
    return InteractionGeometry(
        copropagation_length=copropagation_length,
        channel_separation=channel_separation,
        screening_length=screening_length,
        propagation_speed=propagation_speed,
        coulomb_constant=alpha,
    )
