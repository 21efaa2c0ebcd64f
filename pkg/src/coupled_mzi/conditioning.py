"""Conditional statistics: erasure curves, conditioned averages, weak values.

Conditioned which-path averages are computed by weighting conditional
detector probabilities with the contextual values,
``<sigma_z>_S = sum_D alpha_D P_{D|S}``; that pipeline is the source of
truth here, and the closed-form joint-interference term below is verified
against it rather than the other way around.  Conditioned averages may
leave the eigenvalue range [-1, 1] (a quantum-interference signature) but
are always bounded by the contextual values themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousMeasurementError, PostSelectionImpossibleError
from .measurement import DIVERGENCE_THRESHOLD, contextual_values
from .params import (
    DetectorDrain,
    InterferometerConfig,
    ObservableCoefficients,
    SystemDrain,
    detector_params,
    joint_interference_params,
    system_params,
)
from .scattering import JointStatistics, joint_amplitudes, joint_statistics

_MARGINAL_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ConditionalTable:
    """Conditional drain probabilities in both directions.

    ``p_detector_given_system[d, s] = P(D_d | S_s)`` and
    ``p_system_given_detector[d, s] = P(S_s | D_d)``; each conditional
    distribution sums to 1.
    """

    p_detector_given_system: np.ndarray
    p_system_given_detector: np.ndarray

    def __post_init__(self):
        pd_s = np.asarray(self.p_detector_given_system, dtype=float)
        ps_d = np.asarray(self.p_system_given_detector, dtype=float)
        if pd_s.shape != (2, 2) or ps_d.shape != (2, 2):
            raise ValueError("conditional tables must be 2x2")
        if np.any(pd_s < -1e-12) or np.any(pd_s > 1 + 1e-12):
            raise ValueError("conditional probabilities outside [0, 1]")
        if np.any(ps_d < -1e-12) or np.any(ps_d > 1 + 1e-12):
            raise ValueError("conditional probabilities outside [0, 1]")
        if np.max(np.abs(pd_s.sum(axis=0) - 1.0)) > 1e-12:
            raise ValueError("P(D|S) columns must sum to 1")
        if np.max(np.abs(ps_d.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("P(S|D) rows must sum to 1")
        pd_s.setflags(write=False)
        ps_d.setflags(write=False)
        object.__setattr__(self, "p_detector_given_system", pd_s)
        object.__setattr__(self, "p_system_given_detector", ps_d)


def conditional_table(stats: JointStatistics) -> ConditionalTable:
    """Both conditional probability tables from joint statistics.

    Raises
    ------
    PostSelectionImpossibleError
        If any drain marginal is numerically zero (below 1e-12), naming
        the offending drain.
    """
    for d in DetectorDrain:
        if stats.p_detector(d) <= _MARGINAL_THRESHOLD:
            raise PostSelectionImpossibleError(d.name, stats.p_detector(d))
    for s in SystemDrain:
        if stats.p_system(s) <= _MARGINAL_THRESHOLD:
            raise PostSelectionImpossibleError(s.name, stats.p_system(s))
    return ConditionalTable(
        p_detector_given_system=stats.joint / stats.system_marginals[np.newaxis, :],
        p_system_given_detector=stats.joint / stats.detector_marginals[:, np.newaxis],
    )


def erasure_curve(
    det: InterferometerConfig,
    sys: InterferometerConfig,
    phi_s_values,
    gamma: float,
    condition: DetectorDrain,
) -> list[tuple[float, float]]:
    """Conditional probability ``P(S1 | condition)`` along a system-phase sweep.

    ``sys`` provides the system QPCs; its tuning phase is replaced by each
    sweep value in turn.  At strong coupling with fully visible
    interferometers the recovered fringe has visibility ``|sin(phi_d)|``
    and sits a quarter period away from the uncoupled fringe; the
    unconditioned ``P(S1)`` stays flat.  Points are returned in input
    order (each point is independent of the others).
    """
    out = []
    for phi_s in phi_s_values:
        swept = InterferometerConfig(sys.qpc1, sys.qpc2, float(phi_s))
        stats = joint_statistics(joint_amplitudes(det, swept, gamma))
        p_d = stats.p_detector(condition)
        if p_d <= _MARGINAL_THRESHOLD:
            raise PostSelectionImpossibleError(condition.name, p_d)
        p_s1_given = stats.joint[condition.value, SystemDrain.S1.value] / p_d
        out.append((float(phi_s), float(p_s1_given)))
    return out


def xi_joint_interference(det: InterferometerConfig, sys: InterferometerConfig, gamma: float) -> float:
    """Joint-interference contribution to the conditioned averages.

    Closed form ``Xi = Delta_ds - Delta_d Delta_s + Gamma_s (delta1_d
    Delta_d + delta2_d epsilon1_d^2 / V_d)``, chosen so that
    ``<sigma_z>_S1 = (delta1_s + delta2_s - V_s Xi/Gamma_d) / (2 P_S1)``
    reproduces the contextual-value pipeline identically.  For an
    efficient detector (V_d = 1) it reduces to
    ``Gamma_d sin(gamma/2) cot(gamma/2 + phi_d) cos(gamma/2 - phi_s)``
    away from the cotangent poles.

    Raises :class:`AmbiguousMeasurementError` when the detector carries no
    interference (V_d at or below the divergence threshold); the term only
    enters averages that are undefined there anyway.
    """
    dp = detector_params(det, gamma)
    sp = system_params(sys, gamma)
    jp = joint_interference_params(det.tuning_phase, sys.tuning_phase, gamma)
    if dp.visibility <= DIVERGENCE_THRESHOLD:
        raise AmbiguousMeasurementError(dp.visibility, dp.Gamma, DIVERGENCE_THRESHOLD)
    d1d, d2d = det.qpc1.delta, det.qpc2.delta
    eps1d = det.qpc1.epsilon
    correction = sp.Gamma * (d1d * dp.Delta + d2d * eps1d**2 / dp.visibility)
    return jp.Delta_ds - dp.Delta * sp.Delta + correction


@dataclass(frozen=True)
class ConditionedAverage:
    """Which-path average conditioned on one system drain.

    ``components`` packs ``(delta1_s, delta2_s, V_s, P_S)`` for the
    closed-form cross-check; ``xi_over_gamma`` is the joint-interference
    ratio actually entering that form.
    """

    value: float
    post_selection: SystemDrain
    xi_over_gamma: float
    components: tuple[float, float, float, float]


def conditioned_average(
    det: InterferometerConfig,
    sys: InterferometerConfig,
    gamma: float,
    condition: SystemDrain,
    obs: ObservableCoefficients = ObservableCoefficients(),
) -> ConditionedAverage:
    """Conditioned average ``sum_D alpha_D P(D | condition)``.

    Computed through the full scattering pipeline; the closed form with
    the joint-interference term agrees to 1e-10.  The value may lie
    outside [-1, 1] but never outside the contextual values.

    Raises
    ------
    PostSelectionImpossibleError
        If the conditioning drain has vanishing probability.
    AmbiguousMeasurementError
        Propagated when the contextual values diverge.
    """
    # ambiguity first: a divergent measurement is undefined regardless of
    # the post-selection, and scans map it to a sentinel rather than a failure
    cv = contextual_values(obs, detector_params(det, gamma))
    stats = joint_statistics(joint_amplitudes(det, sys, gamma))
    p_s = stats.p_system(condition)
    if p_s <= _MARGINAL_THRESHOLD:
        raise PostSelectionImpossibleError(condition.name, p_s)
    p_d_given_s = stats.joint[:, condition.value] / p_s
    value = float(cv.alpha_d1 * p_d_given_s[0] + cv.alpha_d2 * p_d_given_s[1])
    dp = detector_params(det, gamma)
    xi_over_gamma = xi_joint_interference(det, sys, gamma) / dp.Gamma
    sp = system_params(sys, gamma)
    return ConditionedAverage(
        value=value,
        post_selection=condition,
        xi_over_gamma=xi_over_gamma,
        components=(sys.qpc1.delta, sys.qpc2.delta, sp.visibility, p_s),
    )


@dataclass(frozen=True)
class WeakValueResult:
    """Zero-coupling limit of a conditioned average (detector-independent)."""

    real_part: float
    imag_part: float
    drain: SystemDrain

    @property
    def complex_value(self) -> complex:
        return complex(self.real_part, self.imag_part)


def weak_value(sys: InterferometerConfig, condition: SystemDrain) -> WeakValueResult:
    """Weak value of the which-path operator for one post-selection drain.

    For S1: ``(delta1_s + delta2_s - i V_s sin(phi_s)) / (beta_plus - V_s
    cos(phi_s))``; for S2 the signs of ``delta2_s``, the interference
    terms, and the imaginary part flip, with ``beta_minus`` in the
    denominator.  The real part can exceed the eigenvalue range
    (anomalous amplification near a nearly-orthogonal post-selection).
    """
    d1, d2 = sys.qpc1.delta, sys.qpc2.delta
    v = sys.qpc1.epsilon * sys.qpc2.epsilon
    cos_phi = math.cos(sys.tuning_phase)
    sin_phi = math.sin(sys.tuning_phase)
    beta_plus = 1.0 + d1 * d2
    beta_minus = 1.0 - d1 * d2
    if condition is SystemDrain.S1:
        denom = beta_plus - v * cos_phi
        if abs(denom) <= _MARGINAL_THRESHOLD:
            raise PostSelectionImpossibleError(condition.name, denom / 2.0)
        return WeakValueResult((d1 + d2) / denom, -v * sin_phi / denom, condition)
    denom = beta_minus + v * cos_phi
    if abs(denom) <= _MARGINAL_THRESHOLD:
        raise PostSelectionImpossibleError(condition.name, denom / 2.0)
    return WeakValueResult((d1 - d2) / denom, v * sin_phi / denom, condition)


def semiweak_value(sys: InterferometerConfig, n: int, condition: SystemDrain) -> float:
    """Zero-coupling conditioned average at the critical tunings ``phi_d = n pi``.

    Unlike the weak value, system interference survives in the numerator:
    ``(delta1_s + delta2_s - (-1)^n V_s cos(phi_s)) / (beta_plus - V_s
    cos(phi_s))`` for S1 and the sign-flipped counterpart for S2.  At
    ``V_s = 0`` it coincides with the weak value.
    """
    d1, d2 = sys.qpc1.delta, sys.qpc2.delta
    v = sys.qpc1.epsilon * sys.qpc2.epsilon
    cos_phi = math.cos(sys.tuning_phase)
    sign = -1.0 if n % 2 else 1.0
    if condition is SystemDrain.S1:
        denom = 1.0 + d1 * d2 - v * cos_phi
        if abs(denom) <= _MARGINAL_THRESHOLD:
            raise PostSelectionImpossibleError(condition.name, denom / 2.0)
        return (d1 + d2 - sign * v * cos_phi) / denom
    denom = 1.0 - d1 * d2 + v * cos_phi
    if abs(denom) <= _MARGINAL_THRESHOLD:
        raise PostSelectionImpossibleError(condition.name, denom / 2.0)
    return (d1 - d2 + sign * v * cos_phi) / denom
