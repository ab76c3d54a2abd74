"""Exact sparse state algebra over multimode photon-number bases.

States are stored as associative maps from occupation vectors to complex
amplitudes over an ordered mode register.  All values are immutable after
construction; every operation returns a new state, so kets can be shared
freely across threads.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping

MAX_OCCUPANCY = 15
PRUNE_THRESHOLD = 1e-14
NORM_TOLERANCE = 1e-12

# sqrt-factorial lookup, index 0..16; avoids repeated floating recomputation
_SQRT_FACT = tuple(math.sqrt(math.factorial(k)) for k in range(MAX_OCCUPANCY + 2))

_POLARIZATIONS = ("H", "V")


class CapacityError(ValueError):
    """A requested size exceeds a hard limit of the simulator."""


class ModeRegister:
    """Ordered list of optical modes, each a (spatial name, polarization) pair.

    Mode order is significant and fixed for the life of any state that
    references the register.  Labels (``spatial + polarization``, e.g.
    ``"aH"``) must be unique.
    """

    __slots__ = ("_modes", "_index")

    def __init__(self, modes: Iterable[tuple[str, str]]):
        modes = tuple((str(s), str(p)) for s, p in modes)
        for spatial, pol in modes:
            if pol not in _POLARIZATIONS:
                raise ValueError(f"polarization must be H or V, got {pol!r}")
            if not spatial:
                raise ValueError("spatial name must be non-empty")
        labels = [s + p for s, p in modes]
        if len(set(labels)) != len(labels):
            raise ValueError("mode labels must be unique within a register")
        self._modes = modes
        self._index = {lab: i for i, lab in enumerate(labels)}

    @classmethod
    def polarized(cls, *spatials: str) -> "ModeRegister":
        """Register with an H and a V mode for each spatial name, in order."""
        return cls((s, p) for s in spatials for p in _POLARIZATIONS)

    @property
    def modes(self) -> tuple[tuple[str, str], ...]:
        return self._modes

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s + p for s, p in self._modes)

    @property
    def spatials(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for s, _ in self._modes:
            seen.setdefault(s)
        return tuple(seen)

    def index(self, spatial: str, pol: str | None = None) -> int:
        """Position of a mode, addressed as ``index("aH")`` or ``index("a", "H")``."""
        label = spatial if pol is None else spatial + pol
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"no mode {label!r} in register {self.labels}") from None

    def has_mode(self, spatial: str, pol: str) -> bool:
        return spatial + pol in self._index

    def spatial_indices(self, spatial: str) -> tuple[int, ...]:
        found = tuple(i for i, (s, _) in enumerate(self._modes) if s == spatial)
        if not found:
            raise ValueError(f"no spatial mode {spatial!r} in register")
        return found

    def extended(self, extra: Iterable[tuple[str, str]]) -> "ModeRegister":
        """New register with additional modes appended."""
        return ModeRegister(self._modes + tuple(extra))

    def __len__(self) -> int:
        return len(self._modes)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ModeRegister) and self._modes == other._modes

    def __hash__(self) -> int:
        return hash(self._modes)

    def __repr__(self) -> str:
        return f"ModeRegister({' '.join(self.labels)})"


def _check_occupation(register: ModeRegister, occ: tuple[int, ...]) -> tuple[int, ...]:
    occ = tuple(int(n) for n in occ)
    if len(occ) != len(register):
        raise ValueError(
            f"occupation length {len(occ)} does not match register size {len(register)}"
        )
    for n in occ:
        if n < 0:
            raise ValueError("occupation numbers must be non-negative")
        if n > MAX_OCCUPANCY:
            raise CapacityError(f"occupation {n} exceeds per-mode cap {MAX_OCCUPANCY}")
    return occ


class FockKet:
    """Sparse superposition of occupation-number basis states.

    Amplitudes with magnitude below :data:`PRUNE_THRESHOLD` are dropped at
    construction, so every stored term is significant at double precision.
    """

    __slots__ = ("_register", "_terms")

    def __init__(self, register: ModeRegister, terms: Mapping[tuple[int, ...], complex]):
        pruned: dict[tuple[int, ...], complex] = {}
        for occ, amp in terms.items():
            amp = complex(amp)
            if abs(amp) < PRUNE_THRESHOLD:
                continue
            pruned[_check_occupation(register, occ)] = amp
        self._register = register
        self._terms = pruned

    # -- constructors -------------------------------------------------

    @classmethod
    def vacuum(cls, register: ModeRegister) -> "FockKet":
        return cls(register, {(0,) * len(register): 1.0})

    @classmethod
    def basis(cls, register: ModeRegister, occupation: Iterable[int]) -> "FockKet":
        return cls(register, {tuple(occupation): 1.0})

    # -- inspection ---------------------------------------------------

    @property
    def register(self) -> ModeRegister:
        return self._register

    def items(self) -> Iterator[tuple[tuple[int, ...], complex]]:
        return iter(self._terms.items())

    def amplitude(self, occupation: Iterable[int]) -> complex:
        return self._terms.get(tuple(int(n) for n in occupation), 0.0 + 0.0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self._terms.values())

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_squared)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_squared - 1.0) < NORM_TOLERANCE

    def photon_numbers(self) -> set[int]:
        """Distinct total photon numbers present in the superposition."""
        return {sum(occ) for occ in self._terms}

    def photon_expectation(self) -> float:
        """Mean total photon number (state need not be normalized)."""
        n2 = self.norm_squared
        if n2 == 0.0:
            return 0.0
        return sum(sum(occ) * abs(a) ** 2 for occ, a in self._terms.items()) / n2

    def __repr__(self) -> str:
        return f"FockKet({len(self._terms)} terms on {self._register!r})"

    # -- algebra ------------------------------------------------------

    def _require_same_register(self, other: "FockKet") -> None:
        if self._register != other._register:
            raise ValueError("kets are defined on different registers")

    def __add__(self, other: "FockKet") -> "FockKet":
        self._require_same_register(other)
        out = dict(self._terms)
        for occ, amp in other._terms.items():
            out[occ] = out.get(occ, 0.0) + amp
        return FockKet(self._register, out)

    def __sub__(self, other: "FockKet") -> "FockKet":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "FockKet":
        scalar = complex(scalar)
        return FockKet(self._register, {o: a * scalar for o, a in self._terms.items()})

    __rmul__ = __mul__

    def normalized(self) -> "FockKet":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero ket")
        return self * (1.0 / n)

    def inner(self, other: "FockKet") -> complex:
        """Inner product, conjugate-linear in ``self``."""
        self._require_same_register(other)
        if len(self._terms) <= len(other._terms):
            return sum(
                amp.conjugate() * other_amp
                for occ, amp in self._terms.items()
                if (other_amp := other._terms.get(occ)) is not None
            )
        return sum(
            self._terms[occ].conjugate() * other_amp
            for occ, other_amp in other._terms.items()
            if occ in self._terms
        )

    def fidelity(self, other: "FockKet") -> float:
        """Squared overlap of the two states after normalization."""
        denom = self.norm_squared * other.norm_squared
        if denom == 0.0:
            return 0.0
        return abs(self.inner(other)) ** 2 / denom

    def tensor(self, other: "FockKet") -> "FockKet":
        """Joint state on the concatenated registers."""
        register = self._register.extended(other._register.modes)
        out = {
            occ_a + occ_b: amp_a * amp_b
            for occ_a, amp_a in self._terms.items()
            for occ_b, amp_b in other._terms.items()
        }
        return FockKet(register, out)

    def apply_creation(self, powers: Iterable[int]) -> "FockKet":
        """Apply a monomial in creation operators, one power per mode.

        Each basis term picks up the usual sqrt factor
        prod_i sqrt((m_i + p_i)! / m_i!).
        """
        powers = _check_occupation(self._register, tuple(powers))
        out: dict[tuple[int, ...], complex] = {}
        for occ, amp in self._terms.items():
            new_occ = tuple(m + p for m, p in zip(occ, powers))
            _check_occupation(self._register, new_occ)
            factor = 1.0
            for m, p in zip(occ, powers):
                if p:
                    factor *= _SQRT_FACT[m + p] / _SQRT_FACT[m]
            out[new_occ] = out.get(new_occ, 0.0) + amp * factor
        return FockKet(self._register, out)

    # -- measurement --------------------------------------------------

    def project(
        self, pattern: Mapping[str, int]
    ) -> tuple["FockKet | None", float]:
        """Project onto an occupancy pattern and renormalize.

        Pattern keys are either full mode labels (``"aH"``: exact count in
        that mode) or spatial names (``"c1"``: exact total across the
        spatial mode's polarizations).  Returns the conditional ket and the
        Born probability of the pattern; a zero-probability pattern yields
        ``(None, 0.0)`` rather than an error.
        """
        mode_constraints: list[tuple[int, int]] = []
        group_constraints: list[tuple[tuple[int, ...], int]] = []
        for key, count in pattern.items():
            if key in self._register._index:
                mode_constraints.append((self._register.index(key), int(count)))
            else:
                group_constraints.append((self._register.spatial_indices(key), int(count)))

        def matches(occ: tuple[int, ...]) -> bool:
            for i, c in mode_constraints:
                if occ[i] != c:
                    return False
            for idxs, c in group_constraints:
                if sum(occ[i] for i in idxs) != c:
                    return False
            return True

        kept = {occ: amp for occ, amp in self._terms.items() if matches(occ)}
        total = self.norm_squared
        if total == 0.0:
            return None, 0.0
        weight = sum(abs(a) ** 2 for a in kept.values())
        probability = weight / total
        if weight == 0.0:
            return None, 0.0
        scale = 1.0 / math.sqrt(weight)
        return FockKet(self._register, {o: a * scale for o, a in kept.items()}), probability

    # -- register reshaping -------------------------------------------

    def restricted(self, spatials: Iterable[str]) -> "FockKet":
        """Drop all modes outside the given spatial names.

        Every term must have zero occupation in the dropped modes.
        """
        keep_set = set(spatials)
        keep = [i for i, (s, _) in enumerate(self._register.modes) if s in keep_set]
        drop = [i for i in range(len(self._register)) if i not in set(keep)]
        out: dict[tuple[int, ...], complex] = {}
        for occ, amp in self._terms.items():
            if any(occ[i] for i in drop):
                raise ValueError("cannot drop occupied modes from a ket")
            out[tuple(occ[i] for i in keep)] = amp
        register = ModeRegister(self._register.modes[i] for i in keep)
        return FockKet(register, out)

    def extended(self, extra: Iterable[tuple[str, str]]) -> "FockKet":
        """Append vacuum modes to the register."""
        extra = tuple(extra)
        register = self._register.extended(extra)
        pad = (0,) * len(extra)
        return FockKet(register, {occ + pad: amp for occ, amp in self._terms.items()})


class BilinearForm:
    """Quadratic form in creation operators: sum of c_ij a_i^dag a_j^dag."""

    __slots__ = ("_coefficients",)

    def __init__(self, coefficients: Mapping[tuple[int, int], complex]):
        self._coefficients = {
            (int(i), int(j)): complex(c) for (i, j), c in coefficients.items()
        }

    @property
    def coefficients(self) -> dict[tuple[int, int], complex]:
        return dict(self._coefficients)

    def validate_for(self, register: ModeRegister) -> None:
        n = len(register)
        for i, j in self._coefficients:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"mode pair ({i}, {j}) out of range for register size {n}")


MAX_BILINEAR_POWER = 8


def expand_bilinear_power(form: BilinearForm, n: int, register: ModeRegister) -> FockKet:
    """Expand (bilinear form)^n applied to the vacuum, unnormalized.

    Repeated polynomial multiplication in the creation-operator monomial
    basis, then conversion of each monomial a^dag^p |0> to sqrt(p!) |p>.
    """
    n = int(n)
    if n < 0:
        raise ValueError("power must be non-negative")
    if n > MAX_BILINEAR_POWER:
        raise CapacityError(f"power n={n} exceeds max photon-pair order {MAX_BILINEAR_POWER}")
    form.validate_for(register)
    size = len(register)
    monomials: dict[tuple[int, ...], complex] = {(0,) * size: 1.0}
    for _ in range(n):
        grown: dict[tuple[int, ...], complex] = {}
        for powers, coeff in monomials.items():
            for (i, j), c in form._coefficients.items():
                lifted = list(powers)
                lifted[i] += 1
                lifted[j] += 1
                key = tuple(lifted)
                grown[key] = grown.get(key, 0.0) + coeff * c
        monomials = grown
    terms = {
        powers: coeff * math.prod(_SQRT_FACT[p] for p in powers)
        for powers, coeff in monomials.items()
    }
    return FockKet(register, terms)


# -- plain-text state format ------------------------------------------


def format_float(x: float) -> str:
    """Canonical 17-significant-digit rendering used in all output files."""
    return format(float(x), ".17g")


def write_state_text(ket: FockKet) -> str:
    """Serialize a ket: header line of mode labels, then one term per line.

    Terms are ordered lexicographically by occupation vector so output is
    deterministic.
    """
    lines = ["# modes: " + " ".join(ket.register.labels)]
    for occ in sorted(ket._terms):
        amp = ket._terms[occ]
        lines.append(
            f"{format_float(amp.real)} {format_float(amp.imag)} : "
            + " ".join(str(v) for v in occ)
        )
    return "\n".join(lines) + "\n"


def read_state_text(text: str) -> FockKet:
    """Parse the plain-text state format produced by :func:`write_state_text`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# modes:"):
        raise ValueError("state text must start with a '# modes:' header line")
    labels = lines[0][len("# modes:") :].split()
    register = ModeRegister((lab[:-1], lab[-1]) for lab in labels)
    terms: dict[tuple[int, ...], complex] = {}
    for ln in lines[1:]:
        head, _, tail = ln.partition(":")
        parts = head.split()
        if len(parts) != 2 or not tail:
            raise ValueError(f"malformed term line: {ln!r}")
        amp = complex(float(parts[0]), float(parts[1]))
        occ = tuple(int(v) for v in tail.split())
        terms[occ] = terms.get(occ, 0.0) + amp
    return FockKet(register, terms)
