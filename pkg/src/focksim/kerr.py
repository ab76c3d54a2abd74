"""Weak cross-Kerr coupling to a coherent probe and X-homodyne readout.

Each signal branch carries an integer probe-phase index in units of half
the base Kerr phase, so branches that acquire equal probe phase merge
exactly (integer arithmetic, no floating phase drift).  The probe quadrature
convention puts the peak of ``|<x|beta>|^2`` at ``2 Re(beta)`` with unit
variance, and conditioning on an outcome ``x`` multiplies the branch at
probe phase ``phi`` by::

    exp(-(x - 2 a cos(phi))^2 / 4) * exp(i a sin(phi) (x - 2 a cos(phi)))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .fock import NORM_TOLERANCE, PRUNE_THRESHOLD, FockKet, ModeRegister

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ProbeTaggedState:
    """Signal ket whose branches are tagged with exact probe-phase indices.

    Branch keys are ``(occupation, phase_index)``; the physical probe phase
    of a branch is ``phase_index * theta / 2``.
    """

    __slots__ = ("_register", "_terms", "_alpha", "_theta")

    def __init__(
        self,
        register: ModeRegister,
        terms: Mapping[tuple[tuple[int, ...], int], complex],
        alpha: float,
        theta: float,
    ):
        if alpha < 0:
            raise ValueError("probe amplitude must be non-negative")
        if theta <= 0:
            raise ValueError("base Kerr phase must be positive")
        pruned: dict[tuple[tuple[int, ...], int], complex] = {}
        for (occ, idx), amp in terms.items():
            amp = complex(amp)
            if abs(amp) < PRUNE_THRESHOLD:
                continue
            pruned[(tuple(occ), int(idx))] = amp
        self._register = register
        self._terms = pruned
        self._alpha = float(alpha)
        self._theta = float(theta)

    @property
    def register(self) -> ModeRegister:
        return self._register

    @property
    def alpha(self) -> float:
        return self._alpha

    @property
    def theta(self) -> float:
        return self._theta

    def items(self):
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self._terms.values())

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_squared - 1.0) < NORM_TOLERANCE

    def phase_of(self, index: int) -> float:
        return index * self._theta / 2.0

    def group_weights(self) -> dict[int, float]:
        """Total squared amplitude per phase index, in index order."""
        weights: dict[int, float] = {}
        for (_, idx), amp in self._terms.items():
            weights[idx] = weights.get(idx, 0.0) + abs(amp) ** 2
        return dict(sorted(weights.items()))

    def branch(self, index: int) -> FockKet | None:
        """Renormalized signal component at one phase index, if present."""
        kept = {occ: amp for (occ, idx), amp in self._terms.items() if idx == index}
        if not kept:
            return None
        return FockKet(self._register, kept).normalized()

    def __repr__(self) -> str:
        return (
            f"ProbeTaggedState({len(self._terms)} branches, "
            f"alpha={self._alpha}, theta={self._theta})"
        )


@dataclass(frozen=True)
class HomodyneOutcome:
    """One sampled X-homodyne record.

    ``interval_index`` is the absolute phase-group index whose Gaussian
    produced the draw (branches at opposite phase share a peak and are not
    distinguishable from the quadrature value alone).
    """

    x: float
    interval_index: int
    conditional: FockKet
    probability_density: float


def attach_probe(ket: FockKet, alpha: float, theta: float) -> ProbeTaggedState:
    """Pair a signal ket with a fresh coherent probe (all branches at phase 0)."""
    return ProbeTaggedState(
        ket.register,
        {(occ, 0): amp for occ, amp in ket.items()},
        alpha,
        theta,
    )


def apply_cross_kerr(state: ProbeTaggedState, weights: Iterable[int]) -> ProbeTaggedState:
    """Advance each branch's probe phase by the weighted photon count.

    ``weights`` holds one integer per register mode, in half-theta units;
    a branch with occupation ``n`` gains ``sum_i weights[i] * n[i]``.
    """
    weights = tuple(int(w) for w in weights)
    if len(weights) != len(state.register):
        raise ValueError("weights length does not match register size")
    out: dict[tuple[tuple[int, ...], int], complex] = {}
    for (occ, idx), amp in state.items():
        shifted = idx + sum(w * n for w, n in zip(weights, occ))
        key = (occ, shifted)
        out[key] = out.get(key, 0.0) + amp
    return ProbeTaggedState(state.register, out, state.alpha, state.theta)


def apply_probe_phase(state: ProbeTaggedState, shift_index: int) -> ProbeTaggedState:
    """Shift every branch's phase index by a fixed amount (a probe phase gate)."""
    shift_index = int(shift_index)
    return ProbeTaggedState(
        state.register,
        {(occ, idx + shift_index): amp for (occ, idx), amp in state.items()},
        state.alpha,
        state.theta,
    )


def homodyne_pdf(state: ProbeTaggedState, x: float) -> float:
    """Probability density of quadrature outcome ``x``.

    A mixture of unit-variance Gaussians, one per phase group, centred at
    ``2 alpha cos(phase)`` and weighted by the group's squared amplitude.
    """
    total = 0.0
    for idx, weight in state.group_weights().items():
        center = 2.0 * state.alpha * math.cos(state.phase_of(idx))
        total += weight * _INV_SQRT_2PI * math.exp(-0.5 * (x - center) ** 2)
    return total


def homodyne_condition(state: ProbeTaggedState, x: float) -> FockKet | None:
    """Signal ket conditioned on homodyne outcome ``x``, probe discarded.

    Branches at equal occupation merge coherently after picking up their
    Gaussian weight and measurement-dependent phase.  Returns ``None`` when
    the outcome has zero density (empty outcome, not an error).
    """
    out: dict[tuple[int, ...], complex] = {}
    for (occ, idx), amp in state.items():
        phase = state.phase_of(idx)
        offset = x - 2.0 * state.alpha * math.cos(phase)
        weight = math.exp(-0.25 * offset * offset)
        if weight == 0.0:
            continue
        factor = weight * complex(
            math.cos(state.alpha * math.sin(phase) * offset),
            math.sin(state.alpha * math.sin(phase) * offset),
        )
        out[occ] = out.get(occ, 0.0) + amp * factor
    conditioned = FockKet(state.register, out)
    if conditioned.norm_squared == 0.0:
        return None
    return conditioned.normalized()


def discrimination_error(alpha: float, theta: float) -> float:
    """Misassignment probability between the phase-0 and phase-theta peaks.

    Equals the Gaussian tail mass past the midpoint threshold
    ``x0 = alpha (1 + cos(theta))``.
    """
    if alpha <= 0:
        raise ValueError("probe amplitude must be positive")
    if theta <= 0:
        raise ValueError("Kerr phase must be positive")
    return 0.5 * math.erfc(2.0 * alpha * (1.0 - math.cos(theta)) / (2.0 * math.sqrt(2.0)))


def midpoint_threshold(alpha: float, theta: float) -> float:
    """Decision threshold between the phase-0 and phase-theta homodyne peaks."""
    return alpha * (1.0 + math.cos(theta))


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator; identical seeds give identical streams."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def sample_homodyne(state: ProbeTaggedState, rng) -> HomodyneOutcome:
    """Draw one homodyne outcome and the conditioned signal state.

    The phase group is chosen by its weight, then ``x`` is drawn from that
    group's unit-variance Gaussian; conditioning uses the full mixture, so
    the conditional includes any overlap from neighbouring groups.
    """
    if not state.is_normalized:
        raise ValueError("sampling needs a normalized probe-tagged state")
    rng = make_rng(rng)
    groups = state.group_weights()
    total = sum(groups.values())
    draw = rng.random() * total
    chosen = next(iter(groups))
    acc = 0.0
    for idx, weight in groups.items():
        acc += weight
        chosen = idx
        if draw < acc:
            break
    center = 2.0 * state.alpha * math.cos(state.phase_of(chosen))
    x = float(rng.normal(loc=center, scale=1.0))
    conditional = homodyne_condition(state, x)
    if conditional is None:
        raise ValueError("sampled outcome has zero density; state inconsistent")
    return HomodyneOutcome(
        x=x,
        interval_index=abs(chosen),
        conditional=conditional,
        probability_density=homodyne_pdf(state, x),
    )
