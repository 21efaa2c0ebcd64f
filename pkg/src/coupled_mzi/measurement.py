"""Measurement layer: operators, POVM, contextual values, limiting forms.

The system path space is two-dimensional with basis order ``(L^s, U^s)``;
``sigma_z = diag(1, -1)`` is the which-path operator (lower path maps to
eigenvalue +1).  The detector drains realize a generalized measurement of
observables inside the span of ``(identity, sigma_z)``; components along
``sigma_x``/``sigma_y`` cannot be constructed from these drains and inputs
with such components are rejected rather than approximated.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousMeasurementError, InternalConsistencyError
from .params import (
    DetectorParams,
    InterferometerConfig,
    ObservableCoefficients,
    detector_params,
)

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI_BASIS = (SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3)

DIVERGENCE_THRESHOLD = 1e-9
"""Below this value of |visibility * Gamma| the contextual values are
treated as divergent and :class:`AmbiguousMeasurementError` is raised."""

_EFFICIENCY_TOL = 1e-9


def reduced_system_state(sys: InterferometerConfig) -> np.ndarray:
    """System state after its first QPC, absent any coupling.

    Returns the normalized vector ``(e^{i phi_s} t1, r1)`` on ``(L^s, U^s)``.
    """
    t1 = math.sqrt(sys.qpc1.transmission)
    r1 = 1j * math.sqrt(sys.qpc1.reflection)
    return np.array([np.exp(1j * sys.tuning_phase) * t1, r1])


def detector_drain_amplitudes(det: InterferometerConfig, gamma: float) -> np.ndarray:
    """Detector scattering amplitudes ``C[drain, system arm]``.

    ``C[D, U^s]`` differs from ``C[D, L^s]`` only by the extra coupling
    phase ``gamma`` on the transmitted detector path.
    """
    t1 = math.sqrt(det.qpc1.transmission)
    r1 = 1j * math.sqrt(det.qpc1.reflection)
    t2 = math.sqrt(det.qpc2.transmission)
    r2 = 1j * math.sqrt(det.qpc2.reflection)
    phi = det.tuning_phase
    chi2 = cmath.exp(1j * det.qpc2.chi)
    xi2 = cmath.exp(1j * det.qpc2.xi)
    e_phi = cmath.exp(1j * phi)
    e_phig = cmath.exp(1j * (phi + gamma))
    return np.array(
        [
            [chi2 * (t1 * t2 * e_phi + r1 * r2), chi2 * (t1 * t2 * e_phig + r1 * r2)],
            [xi2 * (t1 * r2 * e_phi + r1 * t2), xi2 * (t1 * r2 * e_phig + r1 * t2)],
        ]
    )


@dataclass(frozen=True)
class MeasurementOperators:
    """Diagonal Kraus operators for absorption at the two detector drains.

    ``M_D1^dagger M_D1 + M_D2^dagger M_D2 = identity`` to 1e-12.
    """

    m_d1: np.ndarray
    m_d2: np.ndarray

    def __post_init__(self):
        for name in ("m_d1", "m_d2"):
            m = np.array(getattr(self, name), dtype=complex)
            if m.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
            if abs(m[0, 1]) > 1e-12 or abs(m[1, 0]) > 1e-12:
                raise ValueError(f"{name} must be diagonal in the path basis")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        total = self.m_d1.conj().T @ self.m_d1 + self.m_d2.conj().T @ self.m_d2
        if np.max(np.abs(total - SIGMA_0)) > 1e-12:
            raise ValueError("measurement operators violate completeness")


def measurement_operators(det: InterferometerConfig, gamma: float) -> MeasurementOperators:
    """Measurement operators ``M_D = diag(C[D, L^s], C[D, U^s])``.

    At ``gamma = 0`` both operators are proportional to the identity (a
    completely ambiguous measurement); ``gamma = pi`` perturbs the system
    maximally.
    """
    c = detector_drain_amplitudes(det, gamma)
    return MeasurementOperators(m_d1=np.diag(c[0]), m_d2=np.diag(c[1]))


@dataclass(frozen=True)
class PovmPair:
    """Probability operators of the two detector drains.

    Each element is Hermitian, positive semidefinite, diagonal in the path
    basis, and the pair sums to the identity.
    """

    e_d1: np.ndarray
    e_d2: np.ndarray

    def __post_init__(self):
        for name in ("e_d1", "e_d2"):
            e = np.array(getattr(self, name), dtype=complex)
            if e.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
            if np.max(np.abs(e - e.conj().T)) > 1e-12:
                raise ValueError(f"{name} is not Hermitian")
            if abs(e[0, 1]) > 1e-12:
                raise ValueError(f"{name} is not diagonal in the path basis")
            if min(e[0, 0].real, e[1, 1].real) < -1e-12:
                raise ValueError(f"{name} is not positive semidefinite")
            e.setflags(write=False)
            object.__setattr__(self, name, e)
        if np.max(np.abs(self.e_d1 + self.e_d2 - SIGMA_0)) > 1e-12:
            raise ValueError("POVM elements do not sum to the identity")


def povm_pair(m: MeasurementOperators) -> PovmPair:
    """POVM ``E_D = M_D^dagger M_D`` for the two drains."""
    e_d1 = m.m_d1.conj().T @ m.m_d1
    e_d2 = m.m_d2.conj().T @ m.m_d2
    residual = np.max(np.abs(e_d1 + e_d2 - SIGMA_0))
    if residual > 1e-9:
        raise InternalConsistencyError(
            f"POVM completeness residual {residual:.3e} exceeds 1e-9"
        )
    return PovmPair(e_d1=e_d1, e_d2=e_d2)


def povm_expectation(povm: PovmPair, state: np.ndarray) -> tuple[float, float]:
    """Drain probabilities ``<state| E_D |state>`` under a system state."""
    state = np.asarray(state, dtype=complex)
    p1 = float(np.real(state.conj() @ povm.e_d1 @ state))
    p2 = float(np.real(state.conj() @ povm.e_d2 @ state))
    return p1, p2


def decompose_observable(a: np.ndarray) -> np.ndarray:
    """Components ``a_mu = Tr[A sigma_mu] / 2`` of a Hermitian 2x2 operator.

    The reconstruction ``sum_mu a_mu sigma_mu`` reproduces the input to
    1e-12; non-Hermitian input beyond 1e-9 is rejected.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError("observable must be a 2x2 matrix")
    if np.max(np.abs(a - a.conj().T)) > 1e-9:
        raise ValueError("observable is not Hermitian")
    return np.array([np.real(np.trace(a @ s)) / 2.0 for s in PAULI_BASIS])


@dataclass(frozen=True)
class ContextualValues:
    """Generalized eigenvalues assigned to the two detector drains.

    Satisfies ``alpha_d1 E_D1 + alpha_d2 E_D2 = a0 identity + a3 sigma_z``
    as a matrix identity whenever construction succeeds.
    """

    alpha_d1: float
    alpha_d2: float
    observable: ObservableCoefficients

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_d1, self.alpha_d2])


def contextual_values(
    obs: ObservableCoefficients,
    p: DetectorParams,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> ContextualValues:
    """Unique drain weights reconstructing ``a0 + a3 sigma_z`` on average.

    ``alpha_D1 = a0 - (a3/Gamma)(beta_minus/V + Delta)`` and
    ``alpha_D2 = a0 + (a3/Gamma)(beta_plus/V - Delta)``: imperfect
    correlation (|Gamma| < 1) or inefficiency (V < 1) amplify the weights,
    and ``beta_(+/-)`` counterbalance the drain background bias.

    Raises
    ------
    AmbiguousMeasurementError
        When ``|V * Gamma| <= threshold``; the measurement carries no
        which-path information and the weights would diverge.
    """
    v, g = p.visibility, p.Gamma
    if abs(v * g) <= threshold:
        raise AmbiguousMeasurementError(v, g, threshold)
    return ContextualValues(
        alpha_d1=obs.a0 - (obs.a3 / g) * (p.beta_minus / v + p.Delta),
        alpha_d2=obs.a0 + (obs.a3 / g) * (p.beta_plus / v - p.Delta),
        observable=obs,
    )


def reconstruct_average(cv: ContextualValues, p_d1: float, p_d2: float) -> float:
    """Observable average ``alpha_D1 P_D1 + alpha_D2 P_D2``.

    With drain probabilities from the scattering pipeline this equals
    ``a0 + a3 * delta1_s`` exactly.
    """
    if abs(p_d1 + p_d2 - 1.0) > 1e-9:
        raise ValueError("drain probabilities must sum to 1")
    return cv.alpha_d1 * p_d1 + cv.alpha_d2 * p_d2


def detector_drain_probabilities(p: DetectorParams, delta_s1: float) -> tuple[float, float]:
    """Closed-form detector drain probabilities for system path bias
    ``delta_s1``: ``P_D1 = (beta_plus - V (Delta + delta_s1 Gamma)) / 2``."""
    shift = p.visibility * (p.Delta + delta_s1 * p.Gamma)
    return 0.5 * (p.beta_plus - shift), 0.5 * (p.beta_minus + shift)


def system_drain_probabilities(p, delta_d1: float) -> tuple[float, float]:
    """Closed-form system drain probabilities for detector path bias
    ``delta_d1``: ``P_S1 = (beta_plus - V (Delta - delta_d1 Gamma)) / 2``."""
    shift = p.visibility * (p.Delta - delta_d1 * p.Gamma)
    return 0.5 * (p.beta_plus - shift), 0.5 * (p.beta_minus + shift)


@dataclass(frozen=True)
class EfficientFactorization:
    """Split of efficient-detection measurement operators into a coupling
    unitary times positive POVM roots, ``M_D = e^{i theta_D} U_gamma E_D^{1/2}``.

    ``dropped_phases`` records the two scalar phases ``theta_D``; they only
    contribute a global phase to the measured state.
    """

    disturbance_unitary: np.ndarray
    root_d1: np.ndarray
    root_d2: np.ndarray
    dropped_phases: tuple[float, float]

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        """Measurement operators rebuilt from the factors."""
        ph1 = cmath.exp(1j * self.dropped_phases[0])
        ph2 = cmath.exp(1j * self.dropped_phases[1])
        return (
            ph1 * self.disturbance_unitary @ self.root_d1,
            ph2 * self.disturbance_unitary @ self.root_d2,
        )


def efficient_factorization(det: InterferometerConfig, gamma: float) -> EfficientFactorization:
    """Disturbance/information split for an efficient detector (V = 1).

    The unitary ``U_gamma = exp(i (gamma/2) |U^s><U^s|)`` perturbs the
    system independently of any information gain; the diagonal roots
    ``diag(sin(phi/2), sin((phi+gamma)/2))`` and ``diag(cos(phi/2),
    cos((phi+gamma)/2))`` perform the partial projection.  Requires both
    detector QPCs balanced to 1e-9.
    """
    p = detector_params(det, gamma)
    if abs(p.visibility - 1.0) > _EFFICIENCY_TOL:
        raise ValueError(
            f"efficient factorization requires visibility 1, got {p.visibility!r}"
        )
    phi = det.tuning_phase
    unitary = np.diag([1.0, cmath.exp(1j * gamma / 2.0)])
    root_d1 = np.diag([math.sin(phi / 2.0), math.sin((phi + gamma) / 2.0)]).astype(complex)
    root_d2 = np.diag([math.cos(phi / 2.0), math.cos((phi + gamma) / 2.0)]).astype(complex)
    dropped = (
        det.qpc2.chi + phi / 2.0 + math.pi / 2.0,
        det.qpc2.xi + phi / 2.0 + math.pi / 2.0,
    )
    return EfficientFactorization(
        disturbance_unitary=unitary,
        root_d1=root_d1,
        root_d2=root_d2,
        dropped_phases=dropped,
    )


def _projector_upper() -> np.ndarray:
    return np.diag([0.0, 1.0]).astype(complex)


def limit_contextual_values(
    regime: str, gamma: float, phi_d: float, n: int | None = None
) -> tuple[ContextualValues, PovmPair]:
    """Closed-form limiting contextual values and POVM for V = 1 detectors.

    Parameters
    ----------
    regime : {"strong", "weak", "semiweak"}
        ``strong`` is the gamma = pi limit (requires ``gamma == pi``);
        ``weak`` the small-gamma form at a tuning away from multiples of
        pi; ``semiweak`` the small-gamma form exactly at ``phi_d = n pi``
        (pass the integer ``n``), where one drain stays projective.
    gamma, phi_d : float
        Coupling phase and detector tuning phase, radians.

    Returns
    -------
    (ContextualValues, PovmPair) of the limiting closed forms; the weak
    and semi-weak expressions are first-order forms whose error against
    the exact values vanishes as O(gamma) and O(gamma^2) respectively.
    """
    obs = ObservableCoefficients()
    proj_u = _projector_upper()
    if regime == "strong":
        if abs(gamma - math.pi) > 1e-9:
            raise ValueError("strong regime requires gamma = pi")
        cos_phi = math.cos(phi_d)
        if abs(cos_phi) <= DIVERGENCE_THRESHOLD:
            raise AmbiguousMeasurementError(1.0, cos_phi, DIVERGENCE_THRESHOLD)
        cv = ContextualValues(-1.0 / cos_phi, 1.0 / cos_phi, obs)
        e_d1 = 0.5 * (SIGMA_0 - SIGMA_3 * cos_phi)
        e_d2 = 0.5 * (SIGMA_0 + SIGMA_3 * cos_phi)
        return cv, PovmPair(e_d1=e_d1, e_d2=e_d2)
    if regime == "weak":
        if n is not None:
            raise ValueError("n is only meaningful for the semiweak regime")
        sin_phi = math.sin(phi_d)
        if abs(sin_phi) < 1e-9:
            raise ValueError("weak regime requires phi_d away from multiples of pi")
        if gamma == 0.0:
            raise ValueError("weak regime forms require gamma > 0")
        cos_phi = math.cos(phi_d)
        cv = ContextualValues(
            1.0 - (2.0 / gamma) * (1.0 + cos_phi) / sin_phi,
            1.0 + (2.0 / gamma) * (1.0 - cos_phi) / sin_phi,
            obs,
        )
        e_d1 = 0.5 * (1.0 - cos_phi) * SIGMA_0 + (gamma / 2.0) * sin_phi * proj_u
        e_d2 = 0.5 * (1.0 + cos_phi) * SIGMA_0 - (gamma / 2.0) * sin_phi * proj_u
        return cv, PovmPair(e_d1=e_d1, e_d2=e_d2)
    if regime == "semiweak":
        if n is None:
            raise ValueError("semiweak regime requires the integer n with phi_d = n pi")
        if abs(phi_d - n * math.pi) > 1e-9:
            raise ValueError(f"semiweak regime requires phi_d = n*pi, got {phi_d!r}")
        if gamma == 0.0:
            raise ValueError("semiweak regime forms require gamma > 0")
        sign = -1.0 if n % 2 else 1.0
        s2 = math.sin(gamma / 2.0) ** 2
        c2 = math.cos(gamma / 2.0) ** 2
        cv = ContextualValues(-(sign + c2) / s2, (sign - c2) / s2, obs)
        e_d1 = 0.5 * (1.0 - sign) * SIGMA_0 + sign * s2 * proj_u
        e_d2 = 0.5 * (1.0 + sign) * SIGMA_0 - sign * s2 * proj_u
        return cv, PovmPair(e_d1=e_d1, e_d2=e_d2)
    raise ValueError(f"unknown regime {regime!r}")
