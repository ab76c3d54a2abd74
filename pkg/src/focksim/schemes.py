"""Six-mode entangled-state preparation and GHZ extraction pipelines.

The preparation pipeline rotates one arm of the six-photon twin-beam
state, splits each arm into three spatial modes with an unbalanced and a
balanced beam splitter, and post-selects on exactly one photon per output
mode.  The extraction circuit taps the horizontal path of every output
mode into a shared coherent probe with weighted cross-Kerr cells, reads
the probe with X homodyne, and repairs the surviving branch with up to two
polarization flips plus a measurement-dependent phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .elements import bs_unbalanced, pbs, polarization_rotation
from .fock import FockKet, ModeRegister, expand_bilinear_power
from .kerr import (
    apply_cross_kerr,
    apply_probe_phase,
    attach_probe,
    homodyne_condition,
    homodyne_pdf,
    make_rng,
    sample_homodyne,
)
from .pdc import singlet_form

SCHEME_SPATIALS = ("c1", "c2", "c3", "d1", "d2", "d3")
scheme_register = ModeRegister.polarized(*SCHEME_SPATIALS)

# Kerr cell strengths on the tapped horizontal paths, in base-phase units,
# ordered as SCHEME_SPATIALS; the probe gate then rewinds 12 base units.
GHZ_KERR_THETA_WEIGHTS = (1, 2, 3, 3, 6, 9)
GHZ_PROBE_GATE = -24  # half-theta units

_PIPE_SPATIALS = ("a", "b", "c0", "c1", "c2", "c3", "d0", "d1", "d2", "d3")

# cyclic path assignments appearing in the three-way splitter output
_C_PERMS = (("c1", "c2", "c3"), ("c1", "c3", "c2"), ("c2", "c3", "c1"))
_D_PERMS = (("d1", "d2", "d3"), ("d1", "d3", "d2"), ("d2", "d3", "d1"))
_ID_C = (_C_PERMS[0],)
_ID_D = (_D_PERMS[0],)


@dataclass(frozen=True)
class SchemeResult:
    """Post-selected six-mode state with its heralding probability."""

    state: FockKet
    postselect_probability: float
    theta: float


def pattern_occupation(pattern: str) -> tuple[int, ...]:
    """Occupation vector for one photon per scheme mode with given polarizations."""
    if len(pattern) != 6 or any(ch not in "HV" for ch in pattern):
        raise ValueError(f"pattern must be six H/V letters, got {pattern!r}")
    occ = [0] * len(scheme_register)
    for spatial, pol in zip(SCHEME_SPATIALS, pattern):
        occ[scheme_register.index(spatial, pol)] = 1
    return tuple(occ)


def pattern_ket(pattern: str) -> FockKet:
    return FockKet.basis(scheme_register, pattern_occupation(pattern))


def ghz_state() -> FockKet:
    """(|HHHHHH> + |VVVVVV>) / sqrt(2) on the six scheme modes."""
    inv = 1.0 / math.sqrt(2.0)
    return FockKet(
        scheme_register,
        {pattern_occupation("H" * 6): inv, pattern_occupation("V" * 6): inv},
    )


def w_pair_state(flipped: bool = False) -> FockKet:
    """Product of two three-mode W states, one per arm triple.

    Nine equal-amplitude patterns with a single V (single H when
    ``flipped``) in each triple.
    """
    minority, majority = ("H", "V") if flipped else ("V", "H")
    terms: dict[tuple[int, ...], complex] = {}
    for i in range(3):
        for j in range(3):
            half_c = [majority] * 3
            half_c[i] = minority
            half_d = [majority] * 3
            half_d[j] = minority
            terms[pattern_occupation("".join(half_c + half_d))] = 1.0 / 3.0
    return FockKet(scheme_register, terms)


def build_psi_theta(theta: float) -> SchemeResult:
    """Run the full preparation pipeline at rotation angle ``theta``.

    Third-order twin-beam input, polarization rotation of arm b, a 1:2
    splitter into (c1, c0) and (d1, d0), a balanced splitter of c0 and d0
    into (c2, c3) / (d2, d3), then post-selection on exactly one photon in
    each of the six output spatial modes.
    """
    register = ModeRegister.polarized(*_PIPE_SPATIALS)
    ket = expand_bilinear_power(singlet_form(register), 3, register).normalized()
    ket = polarization_rotation(register, "b", theta).apply(ket)
    ket = bs_unbalanced(register, "a", "c1", "c0", 2.0 / 3.0).apply(ket)
    ket = bs_unbalanced(register, "b", "d1", "d0", 2.0 / 3.0).apply(ket)
    ket = bs_unbalanced(register, "c0", "c3", "c2", 0.5).apply(ket)
    ket = bs_unbalanced(register, "d0", "d3", "d2", 0.5).apply(ket)
    projected, probability = ket.project({s: 1 for s in SCHEME_SPATIALS})
    if projected is None:
        raise ValueError("post-selection pattern has zero probability")
    return SchemeResult(
        state=projected.restricted(SCHEME_SPATIALS),
        postselect_probability=probability,
        theta=float(theta),
    )


def psi_theta_reference(theta: float) -> FockKet:
    """The prepared state built directly from its closed-form coefficients.

    Independent of the pipeline: polarization patterns and their cyclic
    path assignments are written out term by term and normalized.
    """
    c, s = math.cos(theta), math.sin(theta)
    groups = (
        (c**3, (("HHHVVV", 1.0), ("VVVHHH", -1.0)), _ID_C, _ID_D),
        (s**3, (("HHHHHH", 1.0), ("VVVVVV", 1.0)), _ID_C, _ID_D),
        (c * (2 * s * s - c * c) / 3.0, (("HHVVVH", 1.0), ("VVHHHV", -1.0)), _C_PERMS, _D_PERMS),
        (s * (s * s - 2 * c * c) / 3.0, (("HHVHHV", 1.0), ("VVHVVH", 1.0)), _C_PERMS, _D_PERMS),
        (c * c * s, (("HHVVVV", 1.0), ("VVHHHH", 1.0)), _C_PERMS, _ID_D),
        (c * c * s, (("HHHVVH", 1.0), ("VVVHHV", 1.0)), _ID_C, _D_PERMS),
        (c * s * s, (("HHHHHV", 1.0), ("VVVVVH", -1.0)), _ID_C, _D_PERMS),
        (-c * s * s, (("HHVHHH", 1.0), ("VVHVVV", -1.0)), _C_PERMS, _ID_D),
    )
    terms: dict[tuple[int, ...], complex] = {}
    for coeff, patterns, c_perms, d_perms in groups:
        for pattern, sign in patterns:
            for c_perm in c_perms:
                for d_perm in d_perms:
                    occ = [0] * len(scheme_register)
                    for path, pol in zip(c_perm, pattern[:3]):
                        occ[scheme_register.index(path, pol)] += 1
                    for path, pol in zip(d_perm, pattern[3:]):
                        occ[scheme_register.index(path, pol)] += 1
                    key = tuple(occ)
                    terms[key] = terms.get(key, 0.0) + 0.5 * coeff * sign
    return FockKet(scheme_register, terms).normalized()


def spin_flip(state: FockKet, spatials) -> FockKet:
    """Swap the H and V occupations of the named spatial modes."""
    pairs = [
        (state.register.index(s, "H"), state.register.index(s, "V")) for s in set(spatials)
    ]
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.items():
        flipped = list(occ)
        for h, v in pairs:
            flipped[h], flipped[v] = flipped[v], flipped[h]
        key = tuple(flipped)
        out[key] = out.get(key, 0.0) + amp
    return FockKet(state.register, out)


# -- homodyne interval decoding ------------------------------------------


@dataclass(frozen=True)
class DecodeInterval:
    """One homodyne interval: bounds, surviving branch, and its repair."""

    index: int
    x_lo: float
    x_hi: float
    branch: int  # probe phase of the surviving branch, in base-phase units
    flips: frozenset[str]


@dataclass(frozen=True)
class GhzDecodeTable:
    """Partition of the quadrature axis into branch-decoding intervals."""

    alpha: float
    theta: float
    intervals: tuple[DecodeInterval, ...]

    def lookup(self, x: float) -> DecodeInterval:
        for interval in self.intervals:
            if interval.x_lo <= x < interval.x_hi:
                return interval
        return self.intervals[-1]

    def peak_center(self, interval: DecodeInterval) -> float:
        return 2.0 * self.alpha * math.cos(interval.branch * self.theta)


def _branch_patterns() -> dict[int, tuple[str, str]]:
    """Branch phase (base units) -> (more-H pattern, its complement).

    Enumerates the 20 patterns the prepared state supports (both uniform
    patterns plus every single-minority placement in each triple) and
    groups them by the magnitude of the probe phase they acquire.
    """
    patterns = ["H" * 6, "V" * 6]
    for i in range(3):
        for j in range(3):
            half_c = ["H"] * 3
            half_c[i] = "V"
            half_d = ["H"] * 3
            half_d[j] = "V"
            pattern = "".join(half_c + half_d)
            patterns.append(pattern)
            patterns.append(pattern.translate(str.maketrans("HV", "VH")))
    groups: dict[int, tuple[str, str]] = {}
    for pattern in patterns:
        phase = sum(
            w for w, pol in zip(GHZ_KERR_THETA_WEIGHTS, pattern) if pol == "H"
        ) - 12
        # the plus branch is the H-majority member; at phase 0 the pair is
        # degenerate and the H-majority choice keeps the repair at two flips
        if phase > 0 or (phase == 0 and pattern.count("H") > 3):
            partner = pattern.translate(str.maketrans("HV", "VH"))
            groups[phase] = (pattern, partner)
    return groups


def decode_table(alpha: float, theta: float) -> GhzDecodeTable:
    """Build the ten-interval decode table for given probe parameters.

    Thresholds sit halfway between neighbouring Gaussian peaks:
    ``x_0 = alpha (cos 12 theta + cos 8 theta)`` and
    ``x_i = alpha (cos (9-i) theta + cos (8-i) theta)`` for i = 1..8.
    Rejected when the peak ordering degenerates (theta too large).
    """
    if alpha <= 0 or theta <= 0:
        raise ValueError("alpha and theta must be positive")
    if 12 * theta > math.pi:
        # the largest branch phase must stay on the monotone arc of the
        # cosine, otherwise peak positions stop decreasing with the phase
        raise ValueError(
            f"theta={theta} too large: branch peak ordering needs 12*theta <= pi"
        )
    thresholds = [alpha * (math.cos(12 * theta) + math.cos(8 * theta))]
    thresholds += [
        alpha * (math.cos((9 - i) * theta) + math.cos((8 - i) * theta)) for i in range(1, 9)
    ]
    if any(lo >= hi for lo, hi in zip(thresholds, thresholds[1:])):
        raise ValueError(
            f"homodyne thresholds are not strictly increasing at theta={theta}; "
            "branch peaks overlap"
        )
    branch_of_interval = [12] + [9 - i for i in range(1, 9)] + [0]
    patterns = _branch_patterns()
    edges = [-math.inf] + thresholds + [math.inf]
    intervals = []
    for index in range(10):
        branch = branch_of_interval[index]
        plus_pattern = patterns[branch][0]
        flips = frozenset(
            spatial
            for spatial, pol in zip(SCHEME_SPATIALS, plus_pattern)
            if pol == "V"
        )
        intervals.append(
            DecodeInterval(
                index=index,
                x_lo=edges[index],
                x_hi=edges[index + 1],
                branch=branch,
                flips=flips,
            )
        )
    return GhzDecodeTable(alpha=float(alpha), theta=float(theta), intervals=tuple(intervals))


# -- the extraction circuit ----------------------------------------------

_PATH_SPATIALS = ("p1", "p2", "p3", "p4", "p5", "p6")


def _require_one_photon_per_mode(state: FockKet) -> None:
    for occ, _ in state.items():
        for spatial in SCHEME_SPATIALS:
            if sum(occ[i] for i in state.register.spatial_indices(spatial)) != 1:
                raise ValueError("circuit input needs exactly one photon per spatial mode")


def tagged_circuit_state(state: FockKet, alpha: float, theta: float):
    """Probe-tagged state after the polarizing taps and Kerr cells.

    Returns the tagged state on the path-extended register together with
    the polarizing-splitter elements needed to undo the taps after the
    probe is measured.
    """
    if state.register != scheme_register:
        raise ValueError("circuit expects a ket on the six-mode scheme register")
    _require_one_photon_per_mode(state)
    extended = state.extended((p, "H") for p in _PATH_SPATIALS)
    register = extended.register
    splitters = [
        pbs(register, spatial, path, spatial)
        for spatial, path in zip(SCHEME_SPATIALS, _PATH_SPATIALS)
    ]
    for splitter in splitters:
        extended = splitter.apply(extended)
    weights = [0] * len(register)
    for path, w in zip(_PATH_SPATIALS, GHZ_KERR_THETA_WEIGHTS):
        weights[register.index(path, "H")] = 2 * w
    tagged = attach_probe(extended, alpha, theta)
    tagged = apply_cross_kerr(tagged, weights)
    return apply_probe_phase(tagged, GHZ_PROBE_GATE), splitters


MIN_DECODABLE_DENSITY = 1e-300


def _undo_and_repair(conditioned: FockKet, x: float, table: GhzDecodeTable, splitters) -> tuple[FockKet, int]:
    for splitter in splitters:
        conditioned = splitter.apply(conditioned)
    conditioned = conditioned.restricted(SCHEME_SPATIALS)
    interval = table.lookup(x)
    repaired = spin_flip(conditioned, interval.flips)
    phi = table.alpha * math.sin(interval.branch * table.theta) * (
        x - 2.0 * table.alpha * math.cos(interval.branch * table.theta)
    )
    if phi != 0.0:
        # after the flips the surviving pair is the uniform one; a phase of
        # -2 phi on the H mode of the first output cancels the relative phase
        h_index = scheme_register.index("c1", "H")
        out: dict[tuple[int, ...], complex] = {}
        for occ, amp in repaired.items():
            angle = 2.0 * phi * occ[h_index]
            out[occ] = amp * complex(math.cos(angle), -math.sin(angle))
        repaired = FockKet(scheme_register, out)
    return repaired, interval.index


def ghz_circuit(
    state: FockKet,
    alpha: float,
    theta: float,
    x: float | None = None,
    rng=None,
) -> tuple[FockKet | None, int]:
    """Project the prepared state onto the uniform-polarization pair.

    Measures the shared probe at quadrature ``x`` (or samples one outcome
    from ``rng``), decodes the surviving branch from the interval table,
    undoes the taps, and applies the branch's spin flips and phase repair.
    Returns the corrected state and the interval index; the state is
    ``None`` when the requested ``x`` has no support.
    """
    table = decode_table(alpha, theta)
    tagged, splitters = tagged_circuit_state(state, alpha, theta)
    if x is None:
        if rng is None:
            raise ValueError("either a quadrature value or an rng is required")
        outcome = sample_homodyne(tagged, make_rng(rng))
        x = outcome.x
        conditioned = outcome.conditional
    else:
        x = float(x)
        if homodyne_pdf(tagged, x) < MIN_DECODABLE_DENSITY:
            return None, table.lookup(x).index
        conditioned = homodyne_condition(tagged, x)
        if conditioned is None:
            return None, table.lookup(x).index
    return _undo_and_repair(conditioned, x, table, splitters)


def sample_ghz_circuit(
    state: FockKet,
    alpha: float,
    theta: float,
    rng,
    samples: int,
) -> list[tuple[FockKet, int, float]]:
    """Draw repeated homodyne outcomes from one tapped state.

    Returns ``(corrected state, interval index, x)`` per draw; the probe
    interaction is computed once, so bulk statistics stay cheap.
    """
    table = decode_table(alpha, theta)
    tagged, splitters = tagged_circuit_state(state, alpha, theta)
    rng = make_rng(rng)
    results = []
    for _ in range(int(samples)):
        outcome = sample_homodyne(tagged, rng)
        repaired, interval = _undo_and_repair(outcome.conditional, outcome.x, table, splitters)
        results.append((repaired, interval, outcome.x))
    return results


def interval_probabilities(state: FockKet, alpha: float, theta: float) -> tuple[float, ...]:
    """Exact probability of each homodyne interval for the tapped state."""
    table = decode_table(alpha, theta)
    tagged, _ = tagged_circuit_state(state, alpha, theta)
    groups = tagged.group_weights()
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    probabilities = []
    for interval in table.intervals:
        total = 0.0
        for idx, weight in groups.items():
            center = 2.0 * alpha * math.cos(idx * theta / 2.0)
            hi = 1.0 if math.isinf(interval.x_hi) else 0.5 * (
                1.0 + math.erf((interval.x_hi - center) * inv_sqrt2)
            )
            lo = 0.0 if math.isinf(interval.x_lo) else 0.5 * (
                1.0 + math.erf((interval.x_lo - center) * inv_sqrt2)
            )
            total += weight * (hi - lo)
        probabilities.append(total)
    return tuple(probabilities)
