"""Exact two-excitation scattering: amplitudes, probabilities, currents, noise.

Basis conventions (fixed; tests match terms against them):

* ``ArmState`` amplitudes live on ``(L^d L^s, U^d U^s, U^d L^s, L^d U^s)``,
  the joint occupations of the lower/upper arms of detector and system
  just before the second pair of QPCs.
* ``JointAmplitudes`` is a 2x2 complex table indexed ``[detector drain,
  system drain]`` with drain order ``(D1, D2)`` x ``(S1, S2)``.

The first-QPC scattering phases enter only through the composite tuning
phases, so the amplitudes below carry bare ``t1``/``r1`` moduli; the
second-QPC phases ``chi2``/``xi2`` are kept explicitly (they cancel in
every probability).  The global phase of the joint state is dropped
throughout; it is provably unobservable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import DetectorDrain, InterferometerConfig, QpcSetting, SystemDrain

# Exact SI values (2019 redefinition).
ELEMENTARY_CHARGE = 1.602176634e-19  # C
PLANCK_CONSTANT = 6.62607015e-34  # J s
BOLTZMANN_CONSTANT = 1.380649e-23  # J / K

ARM_BASIS = ("LdLs", "UdUs", "UdLs", "LdUs")

_NORMALIZATION_GATE = 1e-9


def qpc_unitary(q: QpcSetting) -> np.ndarray:
    """2x2 unitary scattering matrix of one QPC.

    Rows are input arms, columns output arms, entries
    ``[[e^{i chi} t, e^{i xi} r], [e^{i chi} r, e^{i xi} t]]`` with
    ``t = sqrt(T)`` and ``r = i sqrt(R)``.
    """
    t = math.sqrt(q.transmission)
    r = 1j * math.sqrt(q.reflection)
    ec = np.exp(1j * q.chi)
    ex = np.exp(1j * q.xi)
    return np.array([[ec * t, ex * r], [ec * r, ex * t]])


@dataclass(frozen=True)
class ArmState:
    """Joint two-path state on the basis ``ARM_BASIS``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (4,) or not np.all(np.isfinite(amps.real) & np.isfinite(amps.imag)):
            raise ValueError("arm state needs 4 finite complex amplitudes")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def arm_state(det: InterferometerConfig, sys: InterferometerConfig, gamma: float) -> ArmState:
    """Joint state after the first QPCs and the coupling region.

    The ``L^d U^s`` co-occupation amplitude carries the extra coupling
    phase ``gamma``; the tuning phases enter as ``e^{i phi}`` on the
    lower-arm (transmitted) amplitudes.
    """
    t1d = math.sqrt(det.qpc1.transmission)
    r1d = 1j * math.sqrt(det.qpc1.reflection)
    t1s = math.sqrt(sys.qpc1.transmission)
    r1s = 1j * math.sqrt(sys.qpc1.reflection)
    phi_d, phi_s = det.tuning_phase, sys.tuning_phase
    return ArmState(
        np.array(
            [
                t1d * t1s * np.exp(1j * (phi_d + phi_s)),
                r1d * r1s,
                r1d * t1s * np.exp(1j * phi_s),
                t1d * r1s * np.exp(1j * (phi_d + gamma)),
            ]
        )
    )


def concurrence(det_qpc1: QpcSetting, sys_qpc1: QpcSetting, gamma: float) -> float:
    """Entanglement of the joint two-path state.

    Closed form ``epsilon1_d * epsilon1_s * |sin(gamma/2)|``: maximal for
    balanced first QPCs at ``gamma = pi``, vanishing as ``gamma -> 0``.
    """
    return det_qpc1.epsilon * sys_qpc1.epsilon * abs(math.sin(gamma / 2.0))


@dataclass(frozen=True)
class JointAmplitudes:
    """Drain-basis amplitude table ``c[detector drain, system drain]``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=complex)
        if c.shape != (2, 2) or not np.all(np.isfinite(c.real) & np.isfinite(c.imag)):
            raise ValueError("joint amplitudes need a finite 2x2 complex table")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.c) ** 2))


def joint_amplitudes(det: InterferometerConfig, sys: InterferometerConfig, gamma: float) -> JointAmplitudes:
    """Scatter the arm state through both second QPCs into the drain basis.

    Each entry is the four-term sum over joint arm occupations, including
    the second-QPC phases ``chi2``/``xi2`` of both interferometers.
    """
    arms = arm_state(det, sys, gamma).amplitudes
    u_d = qpc_unitary(det.qpc2)
    u_s = qpc_unitary(sys.qpc2)
    # occupation index -> (detector arm, system arm); rows of u map arm -> drain
    occupations = ((0, 0), (1, 1), (1, 0), (0, 1))
    c = np.zeros((2, 2), dtype=complex)
    for amp, (darm, sarm) in zip(arms, occupations):
        c += amp * np.outer(u_d[darm, :], u_s[sarm, :])
    return JointAmplitudes(c)


@dataclass(frozen=True)
class JointStatistics:
    """Joint drain probabilities with detector and system marginals."""

    joint: np.ndarray
    detector_marginals: np.ndarray
    system_marginals: np.ndarray

    def __post_init__(self):
        joint = np.asarray(self.joint, dtype=float)
        det_m = np.asarray(self.detector_marginals, dtype=float)
        sys_m = np.asarray(self.system_marginals, dtype=float)
        if joint.shape != (2, 2):
            raise ValueError("joint table must be 2x2")
        if np.any(joint < -1e-12) or np.any(joint > 1.0 + 1e-12):
            raise ValueError("joint probabilities outside [0, 1]")
        if abs(joint.sum() - 1.0) > 1e-12:
            raise ValueError("joint probabilities do not sum to 1")
        if np.max(np.abs(joint.sum(axis=1) - det_m)) > 1e-12:
            raise ValueError("detector marginals inconsistent with joint table")
        if np.max(np.abs(joint.sum(axis=0) - sys_m)) > 1e-12:
            raise ValueError("system marginals inconsistent with joint table")
        for arr in (joint, det_m, sys_m):
            arr.setflags(write=False)
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "detector_marginals", det_m)
        object.__setattr__(self, "system_marginals", sys_m)

    def p_joint(self, d: DetectorDrain, s: SystemDrain) -> float:
        return float(self.joint[d.value, s.value])

    def p_detector(self, d: DetectorDrain) -> float:
        return float(self.detector_marginals[d.value])

    def p_system(self, s: SystemDrain) -> float:
        return float(self.system_marginals[s.value])


def joint_statistics(amps: JointAmplitudes) -> JointStatistics:
    """Probabilities ``|c|^2`` with marginals from row and column sums.

    Raises ``ValueError`` if the amplitude normalization is off by more
    than 1e-9 (the production pipeline keeps it at the 1e-12 level).
    """
    total = amps.norm_squared
    if abs(total - 1.0) > _NORMALIZATION_GATE:
        raise ValueError(f"joint amplitudes not normalized: sum |c|^2 = {total!r}")
    joint = np.abs(amps.c) ** 2
    joint = joint / total  # remove the residual rounding so identities hold at 1e-12
    return JointStatistics(
        joint=joint,
        detector_marginals=joint.sum(axis=1),
        system_marginals=joint.sum(axis=0),
    )


def joint_statistics_closed_form(
    det: InterferometerConfig, sys: InterferometerConfig, gamma: float
) -> JointStatistics:
    """Joint statistics from the explicit parameterized closed forms.

    Independent of the amplitude pipeline; the two must agree to 1e-12.
    """
    table = joint_probability_table(det, sys, gamma)
    return JointStatistics(
        joint=table,
        detector_marginals=table.sum(axis=1),
        system_marginals=table.sum(axis=0),
    )


def joint_probability_table(
    det: InterferometerConfig, sys: InterferometerConfig, gamma
) -> np.ndarray:
    """Closed-form joint probability table; ``gamma`` may be an ndarray.

    For array input the result has shape ``gamma.shape + (2, 2)``.
    """
    gamma = np.asarray(gamma, dtype=float)
    half = gamma / 2.0
    phi_d, phi_s = det.tuning_phase, sys.tuning_phase
    d1d, d2d = det.qpc1.delta, det.qpc2.delta
    d1s, d2s = sys.qpc1.delta, sys.qpc2.delta
    bdp, bdm = 1.0 + d1d * d2d, 1.0 - d1d * d2d
    bsp, bsm = 1.0 + d1s * d2s, 1.0 - d1s * d2s
    vd = det.qpc1.epsilon * det.qpc2.epsilon
    vs = sys.qpc1.epsilon * sys.qpc2.epsilon
    gd = np.sin(half) * np.sin(half + phi_d)
    gs = np.sin(half) * np.sin(half - phi_s)
    gds = np.sin(half) * np.sin(half + phi_d - phi_s)
    dd = np.cos(phi_d) - gd
    ds = np.cos(phi_s) - gs
    dds = np.cos(phi_d) * np.cos(phi_s) - gds
    det_plus = dd * bsp + gd * (d1s + d2s)
    det_minus = dd * bsm + gd * (d1s - d2s)
    sys_plus = ds * bdp - gs * (d1d + d2d)
    sys_minus = ds * bdm - gs * (d1d - d2d)
    p11 = 0.25 * (bdp * bsp + vd * vs * dds - vd * det_plus - vs * sys_plus)
    p12 = 0.25 * (bdp * bsm - vd * vs * dds - vd * det_minus + vs * sys_plus)
    p21 = 0.25 * (bdm * bsp - vd * vs * dds + vd * det_plus - vs * sys_minus)
    p22 = 0.25 * (bdm * bsm + vd * vs * dds + vd * det_minus + vs * sys_minus)
    table = np.stack(
        [np.stack([p11, p12], axis=-1), np.stack([p21, p22], axis=-1)], axis=-2
    )
    return table


@dataclass(frozen=True)
class PhysicalBias:
    """Source bias point; temperature and Fermi energy are recorded for
    regime validation only (the low-bias current formula needs just V)."""

    bias_voltage: float  # volts
    fermi_energy: float  # electronvolts
    temperature: float  # kelvin

    def __post_init__(self):
        if self.bias_voltage <= 0.0:
            raise ValueError("bias voltage must be positive")


def _check_low_bias_regime(bias: PhysicalBias) -> None:
    ev = ELEMENTARY_CHARGE * bias.bias_voltage
    ef = ELEMENTARY_CHARGE * bias.fermi_energy
    kt = BOLTZMANN_CONSTANT * bias.temperature
    if kt >= ev / 10.0 or ev >= ef / 10.0:
        warnings.warn(
            "bias point leaves the low-bias regime (need E_F >> eV >> k_B T); "
            "formulas remain evaluable but lose physical validity",
            stacklevel=3,
        )


def average_current(probability: float, bias: PhysicalBias) -> float:
    """Low-bias average drain current ``(e^2 V / h) * P`` in amperes."""
    if not (0.0 <= probability <= 1.0):
        raise ValueError(f"probability {probability} outside [0, 1]")
    _check_low_bias_regime(bias)
    return ELEMENTARY_CHARGE**2 * bias.bias_voltage / PLANCK_CONSTANT * probability


def cross_noise_power(
    stats: JointStatistics, d: DetectorDrain, s: SystemDrain, bias: PhysicalBias
) -> float:
    """Zero-frequency cross-correlation noise power between two drains.

    ``S_{D,S} = 2 (e^3 V / h) (P_{D,S} - P_D P_S)``; vanishes for product
    statistics and for deterministic marginals.
    """
    _check_low_bias_regime(bias)
    covariance = stats.p_joint(d, s) - stats.p_detector(d) * stats.p_system(s)
    return 2.0 * ELEMENTARY_CHARGE**3 * bias.bias_voltage / PLANCK_CONSTANT * covariance


__all__ = [
    "ARM_BASIS",
    "ArmState",
    "BOLTZMANN_CONSTANT",
    "ELEMENTARY_CHARGE",
    "JointAmplitudes",
    "JointStatistics",
    "PLANCK_CONSTANT",
    "PhysicalBias",
    "arm_state",
    "average_current",
    "concurrence",
    "cross_noise_power",
    "joint_amplitudes",
    "joint_probability_table",
    "joint_statistics",
    "joint_statistics_closed_form",
    "qpc_unitary",
]
