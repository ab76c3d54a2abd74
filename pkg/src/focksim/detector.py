"""Nondestructive symmetry detection for twin-beam six-photon states.

The detector is a balanced beam splitter across the two spatial arms, a
cross-Kerr wiring that advances the probe by a full Kerr phase per photon
in arm ``a`` and half per photon in arm ``b``, a fixed probe phase gate,
and an X-homodyne readout.  Components with equal photon number per arm
end at probe phase 0 ("symmetric"); the rest end at plus/minus one full
Kerr phase ("asymmetric") and are repaired with a measurement-dependent
phase shift on arm ``b``.

Cascading the detector drives the two-parameter coefficient family through
the integer iteration matrix [[1, 3], [3, 1]], whose closed-form powers are
also provided here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elements import bs_5050
from .fock import CapacityError, FockKet, ModeRegister
from .kerr import (
    apply_cross_kerr,
    apply_probe_phase,
    attach_probe,
    make_rng,
    midpoint_threshold,
    sample_homodyne,
)

PAIR_NORM_TOLERANCE = 1e-12

# register layout shared by the whole twin-beam family
TWIN_SPATIALS = ("a", "b")
twin_beam_register = ModeRegister.polarized(*TWIN_SPATIALS)

# probe-phase weights in half-theta units: theta per photon in arm a,
# theta/2 per photon in arm b, followed by a fixed gate of -9 half-units
KERR_WEIGHTS = (2, 2, 1, 1)
PROBE_GATE = -9

MAX_CASCADE_STEPS = 30


@dataclass(frozen=True)
class CoefficientPair:
    """Parameters (m, n) of the twin-beam six-photon coefficient family."""

    m: float
    n: float

    @property
    def is_normalized(self) -> bool:
        return abs(self.m**2 + self.n**2 - 0.5) < PAIR_NORM_TOLERANCE

    def normalized(self) -> "CoefficientPair":
        scale = math.sqrt(0.5 / (self.m**2 + self.n**2))
        return CoefficientPair(self.m * scale, self.n * scale)


@dataclass(frozen=True)
class DetectorOutcome:
    branch: str  # "symmetric" | "asymmetric"
    state: FockKet
    probability: float
    measured_x: float | None = None


def twin_beam_state(pair: CoefficientPair) -> FockKet:
    """Six-photon ket m(|3,0;0,3> - |0,3;3,0>) + n(|1,2;2,1> - |2,1;1,2>)."""
    if not pair.is_normalized:
        raise ValueError("coefficient pair must satisfy m^2 + n^2 = 1/2")
    return FockKet(
        twin_beam_register,
        {
            (3, 0, 0, 3): pair.m,
            (0, 3, 3, 0): -pair.m,
            (1, 2, 2, 1): pair.n,
            (2, 1, 1, 2): -pair.n,
        },
    )


def apply_phase_correction(state: FockKet, phi: float, spatial: str) -> FockKet:
    """Multiply each term by exp(i phi/2) per photon in one spatial arm."""
    indices = state.register.spatial_indices(spatial)
    out = {}
    for occ, amp in state.items():
        count = sum(occ[i] for i in indices)
        out[occ] = amp * complex(math.cos(0.5 * phi * count), math.sin(0.5 * phi * count))
    return FockKet(state.register, out)


def detector_probe_state(state: FockKet, alpha: float, theta: float):
    """Probe-tagged state after the splitter, Kerr wiring, and phase gate."""
    mixed = bs_5050(state.register, "a", "b").apply(state)
    tagged = attach_probe(mixed, alpha, theta)
    tagged = apply_cross_kerr(tagged, KERR_WEIGHTS)
    return apply_probe_phase(tagged, PROBE_GATE)


def detect(
    state: FockKet,
    alpha: float,
    theta: float,
    *,
    force: str | None = None,
    rng=None,
) -> DetectorOutcome:
    """Run the symmetry detector on a twin-beam six-photon ket.

    ``force`` selects the ideal-threshold branch ("symmetric" or
    "asymmetric") algebraically, with the asymmetric repair phase taken at
    its peak centre.  Without ``force``, a homodyne outcome is drawn from
    ``rng`` and the branch is decided by the midpoint threshold, so
    misassignment occurs with the discrimination-error probability.
    """
    if state.register != twin_beam_register:
        raise ValueError("detector expects a ket on the twin-beam register")
    if state.photon_numbers() != {6}:
        raise ValueError("detector accepts exactly six-photon states")
    if force not in (None, "symmetric", "asymmetric"):
        raise ValueError(f"unknown forced outcome {force!r}")

    tagged = detector_probe_state(state.normalized(), alpha, theta)
    weights = tagged.group_weights()
    p_symmetric = weights.get(0, 0.0)

    if force == "symmetric":
        symmetric = tagged.branch(0)
        if symmetric is None:
            raise ValueError("state has no symmetric component")
        return DetectorOutcome("symmetric", symmetric, p_symmetric)
    if force == "asymmetric":
        kept = {occ: amp for (occ, idx), amp in tagged.items() if idx != 0}
        if not kept:
            raise ValueError("state has no asymmetric component")
        # peak-centre outcome: repair phase vanishes, opposite-phase
        # branches merge with unit relative phase
        merged = FockKet(tagged.register, kept).normalized()
        return DetectorOutcome("asymmetric", merged, 1.0 - p_symmetric)

    if rng is None:
        raise ValueError("sampled detection needs an rng or seed")
    outcome = sample_homodyne(tagged, make_rng(rng))
    if outcome.x > midpoint_threshold(alpha, theta):
        return DetectorOutcome("symmetric", outcome.conditional, p_symmetric, outcome.x)
    phi = alpha * math.sin(theta) * (outcome.x - 2.0 * alpha * math.cos(theta))
    phi %= 2.0 * math.pi
    corrected = apply_phase_correction(outcome.conditional, phi, "b")
    return DetectorOutcome("asymmetric", corrected, 1.0 - p_symmetric, outcome.x)


# -- cascade analysis ---------------------------------------------------


def a_matrix_power(k: int) -> np.ndarray:
    """k-th power of the iteration matrix [[1, 3], [3, 1]], exactly.

    Diagonal entries are (4^k + (-2)^k)/2 and off-diagonal entries
    (4^k - (-2)^k)/2, evaluated in integer arithmetic before conversion.
    """
    k = int(k)
    if k < 0:
        raise ValueError("matrix power must be non-negative")
    if k > MAX_CASCADE_STEPS:
        raise CapacityError(f"k={k} exceeds max cascade depth {MAX_CASCADE_STEPS}")
    diag = (4**k + (-2) ** k) // 2
    off = (4**k - (-2) ** k) // 2
    return np.array([[diag, off], [off, diag]], dtype=float)


@dataclass(frozen=True)
class CascadeStep:
    m_k: float
    n_k: float
    ratio: float
    c_k: float

    @property
    def normalized_pair(self) -> CoefficientPair:
        scale = 1.0 / math.sqrt(self.c_k)
        return CoefficientPair(self.m_k * scale, self.n_k * scale)

    @property
    def fidelity_with_target(self) -> float:
        """Squared overlap with the equal-coefficient six-photon state."""
        return (self.m_k + self.n_k) ** 2 / self.c_k


def cascade_closed_form(pair0: CoefficientPair, k: int) -> CascadeStep:
    """Closed-form coefficients after ``k`` successful symmetric detections.

    Returns the unnormalized pair, their ratio (signed infinity when the
    second coefficient vanishes) and the normalization constant
    ``C_k = 2^(2k-1) (4^k + 1) + 2^(2k+1) (4^k - 1) m0 n0``.
    """
    matrix = a_matrix_power(k)  # validates k range
    m0, n0 = pair0.m, pair0.n
    m_k = matrix[0, 0] * m0 + matrix[0, 1] * n0
    n_k = matrix[1, 0] * m0 + matrix[1, 1] * n0
    if n_k == 0.0:
        ratio = math.copysign(math.inf, m_k) if m_k else math.nan
    else:
        ratio = m_k / n_k
    c_k = 2.0 ** (2 * k - 1) * (4.0**k + 1.0) + 2.0 ** (2 * k + 1) * (4.0**k - 1.0) * m0 * n0
    return CascadeStep(m_k, n_k, ratio, c_k)


@dataclass(frozen=True)
class CascadeRun:
    state: FockKet
    step_probabilities: tuple[float, ...]
    cumulative_probability: float


def cascade_simulate(
    pair0: CoefficientPair,
    k: int,
    alpha: float,
    theta: float,
) -> CascadeRun:
    """Push a twin-beam state through ``k`` detectors, keeping symmetric outcomes."""
    k = int(k)
    if k > MAX_CASCADE_STEPS:
        raise CapacityError(f"k={k} exceeds max cascade depth {MAX_CASCADE_STEPS}")
    state = twin_beam_state(pair0.normalized())
    probabilities: list[float] = []
    cumulative = 1.0
    for _ in range(k):
        outcome = detect(state, alpha, theta, force="symmetric")
        state = outcome.state
        probabilities.append(outcome.probability)
        cumulative *= outcome.probability
    return CascadeRun(state, tuple(probabilities), cumulative)


def symmetric_success_probability(pair: CoefficientPair) -> float:
    """Probability of the symmetric branch for a normalized pair: (5 + 12 m n)/8."""
    return (5.0 + 12.0 * pair.m * pair.n) / 8.0
