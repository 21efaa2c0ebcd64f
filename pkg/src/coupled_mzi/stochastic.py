"""Coupling fluctuations, drain-event sampling, and estimator statistics.

Random numbers come from numpy's Philox counter-based generator
(``philox4x64``), keyed directly by the caller's 64-bit seed, so event
streams are bit-reproducible across platforms and can be sliced exactly:
the generator consumes one 64-bit word per uniform double and
``Philox.advance(k)`` skips ``4 k`` words.  Sharded sampling therefore
splits the stream at word offsets divisible by 4 and reproduces the
single-stream result for any shard count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .errors import AmbiguousMeasurementError
from .measurement import DIVERGENCE_THRESHOLD, ContextualValues
from .params import CouplingModel, DetectorDrain, DetectorParams, InterferometerConfig, SystemDrain
from .scattering import JointStatistics, joint_probability_table

RNG_ALGORITHM = "philox4x64"

_DET_BY_CODE = (DetectorDrain.D1, DetectorDrain.D2)
_SYS_BY_CODE = (SystemDrain.S1, SystemDrain.S2)


class EventRecord(NamedTuple):
    """One recorded pair of drain absorptions."""

    detector_drain: DetectorDrain
    system_drain: SystemDrain
    sequence_index: int


@dataclass(frozen=True)
class EstimateReport:
    """Result of the contextual-value estimator over one event sequence.

    ``predicted_mse`` is the contextual-value variance over the event
    count, evaluated with exact drain probabilities when supplied (the
    empirical frequencies otherwise); ``empirical_variance`` is the
    unbiased sample variance of the per-event values divided by ``n``
    (zero when ``n == 1``).
    """

    estimate: float
    n: int
    empirical_variance: float
    predicted_mse: float
    mse_upper_bound: float
    seed: int
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.empirical_variance < 0.0 or self.predicted_mse < 0.0:
            raise ValueError("variances must be non-negative")


@dataclass(frozen=True)
class ObservationBudget:
    """Observation-time budgeting inputs.

    ``tau_m`` is the mean time per detector absorption; when omitted it
    defaults to the time of flight ``path_length / fermi_velocity``.
    """

    path_length: float
    fermi_velocity: float
    target_rms: float
    tau_m: float | None = None

    def __post_init__(self):
        if self.path_length <= 0 or self.fermi_velocity <= 0 or self.target_rms <= 0:
            raise ValueError("budget parameters must be positive")
        if self.tau_m is not None and self.tau_m <= 0:
            raise ValueError("tau_m must be positive when given")

    @property
    def mean_absorption_time(self) -> float:
        if self.tau_m is not None:
            return self.tau_m
        return self.path_length / self.fermi_velocity


def raised_cosine_pdf(gamma_prime: float, model: CouplingModel) -> float:
    """Density of the raised-cosine coupling distribution.

    ``(1/2 sigma)(1 + cos(pi (g' - gamma) / sigma))`` on the compact
    support ``[gamma - sigma, gamma + sigma]``, zero outside.

    Raises ``ValueError`` for ``sigma = 0``: the distribution degenerates
    to a point mass, which callers should treat as deterministic coupling.
    """
    if model.sigma <= 0.0:
        raise ValueError("raised-cosine density undefined at sigma = 0 (degenerate)")
    y = gamma_prime - model.gamma
    if abs(y) >= model.sigma:
        return 0.0
    return (1.0 + math.cos(math.pi * y / model.sigma)) / (2.0 * model.sigma)


def _raised_cosine_ppf(u: np.ndarray, model: CouplingModel) -> np.ndarray:
    """Inverse CDF via vectorized bisection (exact to ~1e-15)."""
    sigma = model.sigma
    lo = np.full_like(u, -sigma)
    hi = np.full_like(u, sigma)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cdf = (mid + sigma) / (2.0 * sigma) + np.sin(math.pi * mid / sigma) / (2.0 * math.pi)
        below = cdf < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return model.gamma + 0.5 * (lo + hi)


def damping_eta(sigma: float) -> float:
    """Fluctuation damping factor ``(pi^2 / (pi^2 - sigma^2)) sin(sigma)/sigma``.

    Defined by continuity at the removable singularities: 1 at
    ``sigma = 0`` and 1/2 at ``sigma = pi``.  Domain is [0, pi].
    """
    if not (0.0 <= sigma <= math.pi):
        raise ValueError(f"sigma {sigma} outside [0, pi]")
    if sigma == 0.0:
        return 1.0
    if sigma == math.pi:
        return 0.5
    return (math.pi**2 / (math.pi**2 - sigma**2)) * (math.sin(sigma) / sigma)


def averaged_detector_params(p: DetectorParams, model: CouplingModel) -> DetectorParams:
    """Detector parameters under coupling fluctuations and unpaired emission.

    Rescales the correlation strength by the net inefficiency
    ``eta' = pair_probability * eta(sigma)`` and leaves every other field
    unchanged; downstream contextual values pick up the compensating
    ``1/eta'`` amplification.
    """
    eta_prime = model.pair_probability * damping_eta(model.sigma)
    return DetectorParams(
        beta_plus=p.beta_plus,
        beta_minus=p.beta_minus,
        visibility=p.visibility,
        Gamma=eta_prime * p.Gamma,
        Delta=p.Delta,
    )


def _uniform_block(seed: int, offset: int, count: int) -> np.ndarray:
    """Uniform doubles ``offset .. offset+count`` of the seed's Philox stream."""
    if offset % 4:
        raise ValueError("stream offset must be a multiple of 4 words")
    bit_gen = Philox(key=seed)
    if offset:
        bit_gen.advance(offset // 4)
    return Generator(bit_gen).random(count)


def _validate_seed(seed: int) -> int:
    seed = int(seed)
    if not (0 <= seed < 2**64):
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def _events_from_codes(codes: np.ndarray, first_index: int = 0) -> list[EventRecord]:
    det_codes = (codes // 2).tolist()
    sys_codes = (codes % 2).tolist()
    return [
        EventRecord(_DET_BY_CODE[d], _SYS_BY_CODE[s], first_index + i)
        for i, (d, s) in enumerate(zip(det_codes, sys_codes))
    ]


def _codes_from_uniforms(uniforms: np.ndarray, flat_probs: np.ndarray) -> np.ndarray:
    edges = np.cumsum(flat_probs)
    codes = np.searchsorted(edges, uniforms, side="right")
    return np.minimum(codes, 3)


def sample_events(stats: JointStatistics, n: int, seed: int) -> list[EventRecord]:
    """``n`` i.i.d. draws from the 4-category joint drain distribution.

    Category order is the row-major flattening ``(D1,S1), (D1,S2),
    (D2,S1), (D2,S2)``; each event consumes exactly one uniform double,
    and the full sequence is a pure function of ``seed``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    seed = _validate_seed(seed)
    uniforms = _uniform_block(seed, 0, n)
    codes = _codes_from_uniforms(uniforms, stats.joint.ravel())
    return _events_from_codes(codes)


def sample_events_sharded(
    stats: JointStatistics, n: int, seed: int, n_shards: int
) -> list[EventRecord]:
    """Shard-parallel form of :func:`sample_events`.

    Splits the event index range into contiguous shards whose stream
    offsets are multiples of 4 words, so the merged result is identical to
    the single-stream sample for every shard count.
    """
    if n_shards < 1:
        raise ValueError("n_shards must be at least 1")
    seed = _validate_seed(seed)
    cuts = sorted({0, n} | {min(n, 4 * round(i * n / n_shards / 4.0)) for i in range(1, n_shards)})
    flat = stats.joint.ravel()
    events: list[EventRecord] = []
    for start, stop in zip(cuts[:-1], cuts[1:]):
        if stop == start:
            continue
        uniforms = _uniform_block(seed, start, stop - start)
        codes = _codes_from_uniforms(uniforms, flat)
        events.extend(_events_from_codes(codes, first_index=start))
    return events


def sample_events_fluctuating(
    det: InterferometerConfig,
    sys: InterferometerConfig,
    model: CouplingModel,
    n: int,
    seed: int,
) -> list[EventRecord]:
    """Validation-mode sampler that draws a coupling phase per event.

    Each event draws its own coupling phase from the raised-cosine
    distribution (point mass at ``gamma`` when ``sigma = 0``), replaces it
    by zero for unpaired emissions (probability ``1 - pair_probability``),
    and then samples the drain pair from the exact joint distribution at
    that phase.  The stream consumes three uniform blocks of length ``n``
    (phase, pairing, category) regardless of the model, so results are a
    pure function of ``(seed, n)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    seed = _validate_seed(seed)
    rng = Generator(Philox(key=seed))
    u_phase = rng.random(n)
    u_pair = rng.random(n)
    u_cat = rng.random(n)
    if model.sigma > 0.0:
        gammas = _raised_cosine_ppf(u_phase, model)
    else:
        gammas = np.full(n, model.gamma)
    gammas = np.where(u_pair < model.pair_probability, gammas, 0.0)
    tables = joint_probability_table(det, sys, gammas).reshape(n, 4)
    edges = np.cumsum(tables, axis=1)
    codes = np.minimum((u_cat[:, None] > edges).sum(axis=1), 3)
    return _events_from_codes(codes)


def contextual_estimate(
    events: Sequence[EventRecord],
    cv: ContextualValues,
    probabilities: tuple[float, float] | None = None,
    seed: int = 0,
) -> EstimateReport:
    """Unbiased which-path estimate: the mean contextual value per event.

    Parameters
    ----------
    events : sequence of EventRecord
        Recorded drain absorptions; only the detector drain enters.
    cv : ContextualValues
        Finite drain weights from :func:`~coupled_mzi.measurement.contextual_values`.
    probabilities : (P_D1, P_D2), optional
        Exact detector drain probabilities for the predicted mean squared
        error; empirical frequencies are used when omitted.
    seed : int
        Recorded verbatim in the report for provenance.

    Returns
    -------
    EstimateReport
        With ``predicted_mse = (a1^2 P1 + a2^2 P2 - mean^2) / n`` and the
        state-free bound ``(a1^2 + a2^2) / n``.
    """
    n = len(events)
    if n == 0:
        raise ValueError("event list is empty")
    if not (math.isfinite(cv.alpha_d1) and math.isfinite(cv.alpha_d2)):
        raise AmbiguousMeasurementError(math.nan, math.nan, DIVERGENCE_THRESHOLD)
    is_d2 = np.fromiter(
        (ev.detector_drain is DetectorDrain.D2 for ev in events), dtype=bool, count=n
    )
    values = np.where(is_d2, cv.alpha_d2, cv.alpha_d1)
    estimate = float(values.mean())
    empirical = float(values.var(ddof=1) / n) if n > 1 else 0.0
    if probabilities is None:
        p2 = float(is_d2.mean())
        p1 = 1.0 - p2
    else:
        p1, p2 = probabilities
        if abs(p1 + p2 - 1.0) > 1e-9:
            raise ValueError("drain probabilities must sum to 1")
    mean_true = cv.alpha_d1 * p1 + cv.alpha_d2 * p2
    predicted = max(0.0, (cv.alpha_d1**2 * p1 + cv.alpha_d2**2 * p2 - mean_true**2) / n)
    upper = (cv.alpha_d1**2 + cv.alpha_d2**2) / n
    return EstimateReport(
        estimate=estimate,
        n=n,
        empirical_variance=empirical,
        predicted_mse=predicted,
        mse_upper_bound=upper,
        seed=_validate_seed(seed),
    )


def observation_time(cv: ContextualValues, budget: ObservationBudget) -> float:
    """Observation time guaranteeing the budget's RMS error target.

    ``T = tau_m (alpha_D1^2 + alpha_D2^2) / epsilon^2``: amplified
    contextual values (ambiguous measurements) lengthen the observation
    proportionally.  For an unambiguous measurement this is
    ``2 tau_m / epsilon^2``.
    """
    return (
        budget.mean_absorption_time
        * (cv.alpha_d1**2 + cv.alpha_d2**2)
        / budget.target_rms**2
    )
