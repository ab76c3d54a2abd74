"""Parametric down-conversion emission models.

Covers the two-mode squeezed expansion over pair order, the singlet-like
2n-photon states it emits, and the three-component six-photon mixture
parameterized by the ratio of pump duration to photon coherence time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import BilinearForm, CapacityError, FockKet, ModeRegister, expand_bilinear_power

MAX_PAIR_ORDER = 5


def singlet_form(
    register: ModeRegister, spatial_a: str = "a", spatial_b: str = "b"
) -> BilinearForm:
    """The antisymmetric pair-creation form aH^dag bV^dag - aV^dag bH^dag."""
    return BilinearForm(
        {
            (register.index(spatial_a, "H"), register.index(spatial_b, "V")): 1.0,
            (register.index(spatial_a, "V"), register.index(spatial_b, "H")): -1.0,
        }
    )


def psi_n(n: int, spatial_a: str = "a", spatial_b: str = "b") -> FockKet:
    """Normalized 2n-photon state from the n-th power of the singlet form."""
    n = int(n)
    if not 0 <= n <= MAX_PAIR_ORDER:
        raise CapacityError(f"pair order n={n} outside supported range 0..{MAX_PAIR_ORDER}")
    register = ModeRegister.polarized(spatial_a, spatial_b)
    raw = expand_bilinear_power(singlet_form(register, spatial_a, spatial_b), n, register)
    return raw.normalized()


@dataclass(frozen=True)
class SqueezedExpansion:
    """Amplitudes of the two-mode squeezed state over pair order n.

    ``weights[n] = sqrt(n+1) tanh(tau)^n / cosh(tau)^2``; the squared
    weights sum to 1 in the infinite-order limit.
    """

    tau: float
    n_max: int
    weights: tuple[float, ...]

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(w * w for w in self.weights)

    @property
    def truncated_norm(self) -> float:
        return sum(self.probabilities)

    @property
    def mean_photons_per_arm(self) -> float:
        """Mean photon count in either spatial arm, 2 sinh(tau)^2.

        Each order-n term carries n photons per arm, so this equals the
        mean emission order; the mean total photon count is twice this.
        """
        return 2.0 * math.sinh(self.tau) ** 2


def squeezed_weights(tau: float, n_max: int) -> SqueezedExpansion:
    if tau < 0:
        raise ValueError("interaction parameter must be non-negative")
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    sech2 = 1.0 / math.cosh(tau) ** 2
    t = math.tanh(tau)
    weights = tuple(math.sqrt(n + 1.0) * t**n * sech2 for n in range(n_max + 1))
    return SqueezedExpansion(tau=float(tau), n_max=n_max, weights=weights)


@dataclass(frozen=True)
class SixPhotonMixtureWeights:
    """Amplitudes of the three six-photon components at pulse ratio ``k``.

    Ordered as (single third-order process, second-order times first-order,
    three independent first-order processes).  For 1 < k < 2 the last
    closed-form radicand is negative, so amplitudes are stored complex (the
    affected one purely imaginary); the signed squares still sum to one
    identically.
    """

    k: float
    amps: tuple[complex, complex, complex]

    @property
    def squared(self) -> tuple[float, float, float]:
        return tuple((a * a).real for a in self.amps)


def six_photon_mixture(k: float) -> SixPhotonMixtureWeights:
    k = float(k)
    if k < 1.0:
        raise ValueError("pulse-duration ratio k must be at least 1")
    denom = (k + 1.0) * (k + 2.0)
    amps = (
        complex(np.sqrt(complex(6.0 / denom))),
        complex(np.sqrt(complex(6.0 * (k - 1.0) / denom))),
        complex(np.sqrt(complex((k - 1.0) * (k - 2.0) / denom))),
    )
    return SixPhotonMixtureWeights(k=k, amps=amps)


def mixture_component_ket(index: int) -> FockKet:
    """Six-photon ket of one mixture component on its natural register.

    Independent down-conversion processes occupy distinct spatial pairs:
    component 0 lives on (a, b), component 1 on (a, b, a2, b2) and
    component 2 on (a, b, a2, b2, a3, b3).
    """
    if index == 0:
        return psi_n(3)
    if index == 1:
        return psi_n(2).tensor(psi_n(1, "a2", "b2"))
    if index == 2:
        return psi_n(1).tensor(psi_n(1, "a2", "b2")).tensor(psi_n(1, "a3", "b3"))
    raise ValueError("component index must be 0, 1 or 2")
