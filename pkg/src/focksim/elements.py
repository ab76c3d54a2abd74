"""Passive linear-optical elements as exact creation-operator substitutions.

A :class:`ModeTransform` rewrites each input creation operator as a linear
combination of output creation operators (matrix entry ``[i][j]`` is the
coefficient of output mode ``j`` when substituting input mode ``i``) and is
applied to a ket by exact multinomial re-expansion, so photon number and
norm are conserved to machine precision.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .fock import _SQRT_FACT, FockKet, ModeRegister

UNITARITY_TOLERANCE = 1e-12


class ModeTransform:
    """Unitary substitution rule on the creation operators of a register."""

    __slots__ = ("_register", "_matrix")

    def __init__(self, register: ModeRegister, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        n = len(register)
        if matrix.shape != (n, n):
            raise ValueError(f"matrix shape {matrix.shape} does not match register size {n}")
        deviation = np.max(np.abs(matrix @ matrix.conj().T - np.eye(n)))
        if deviation > UNITARITY_TOLERANCE:
            raise ValueError(f"matrix is not unitary (deviation {deviation:.3e})")
        self._register = register
        self._matrix = matrix.copy()
        self._matrix.setflags(write=False)

    @property
    def register(self) -> ModeRegister:
        return self._register

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def then(self, later: "ModeTransform") -> "ModeTransform":
        """Single transform equivalent to applying ``self`` first, then ``later``."""
        if self._register != later._register:
            raise ValueError("cannot compose transforms on different registers")
        return ModeTransform(self._register, self._matrix @ later._matrix)

    def apply(self, ket: FockKet) -> FockKet:
        """Substitute and re-expand every creation operator of the ket."""
        if ket.register != self._register:
            raise ValueError("ket register does not match transform register")
        rows = [
            [(j, self._matrix[i, j]) for j in range(len(self._register))
             if self._matrix[i, j] != 0.0]
            for i in range(len(self._register))
        ]
        out: dict[tuple[int, ...], complex] = {}
        zero = (0,) * len(self._register)
        for occ, amp in ket.items():
            prefactor = amp
            for m in occ:
                prefactor /= _SQRT_FACT[m]
            partial: dict[tuple[int, ...], complex] = {zero: prefactor}
            for i, m in enumerate(occ):
                if m == 0:
                    continue
                partial = _distribute_mode(partial, rows[i], m)
            for powers, coeff in partial.items():
                value = coeff * math.prod(_SQRT_FACT[p] for p in powers)
                out[powers] = out.get(powers, 0.0) + value
        return FockKet(self._register, out)

    def __repr__(self) -> str:
        return f"ModeTransform(on {self._register!r})"


def _distribute_mode(
    partial: dict[tuple[int, ...], complex],
    row: list[tuple[int, complex]],
    m: int,
) -> dict[tuple[int, ...], complex]:
    """Multiply by the multinomial expansion of (sum_j r_j a_j^dag)^m."""
    expansions: list[tuple[tuple[tuple[int, int], ...], complex]] = []

    def split(entry: int, remaining: int, used: list[tuple[int, int]], weight: complex) -> None:
        if entry == len(row) - 1:
            j, r = row[entry]
            w = weight * r**remaining / math.factorial(remaining)
            expansions.append((tuple(used + [(j, remaining)]) if remaining else tuple(used), w))
            return
        j, r = row[entry]
        for k in range(remaining + 1):
            w = weight * r**k / math.factorial(k)
            split(entry + 1, remaining - k, used + [(j, k)] if k else used, w)

    split(0, m, [], complex(math.factorial(m)))
    grown: dict[tuple[int, ...], complex] = {}
    for powers, coeff in partial.items():
        for assignment, weight in expansions:
            lifted = list(powers)
            for j, k in assignment:
                lifted[j] += k
            key = tuple(lifted)
            grown[key] = grown.get(key, 0.0) + coeff * weight
    return grown


def identity(register: ModeRegister) -> ModeTransform:
    return ModeTransform(register, np.eye(len(register)))


def _embedded(register: ModeRegister, entries: dict[tuple[int, int], complex]) -> ModeTransform:
    matrix = np.eye(len(register), dtype=complex)
    touched = {i for i, _ in entries} | {j for _, j in entries}
    for i in touched:
        matrix[i, i] = 0.0
    for (i, j), value in entries.items():
        matrix[i, j] = value
    return ModeTransform(register, matrix)


def bs_5050(register: ModeRegister, spatial_a: str, spatial_b: str) -> ModeTransform:
    """Balanced beam splitter across a spatial pair, identical on H and V.

    Convention (a rotation, so photon-number-symmetric twin-beam states pass
    through with their printed signs intact)::

        a^dag -> (a^dag + b^dag) / sqrt(2)
        b^dag -> (b^dag - a^dag) / sqrt(2)
    """
    if spatial_a == spatial_b:
        raise ValueError("beam splitter needs two distinct spatial modes")
    inv = 1.0 / math.sqrt(2.0)
    entries: dict[tuple[int, int], complex] = {}
    paired = False
    for pol in ("H", "V"):
        if not (register.has_mode(spatial_a, pol) and register.has_mode(spatial_b, pol)):
            continue
        paired = True
        ia, ib = register.index(spatial_a, pol), register.index(spatial_b, pol)
        entries[(ia, ia)] = inv
        entries[(ia, ib)] = inv
        entries[(ib, ib)] = inv
        entries[(ib, ia)] = -inv
    if not paired:
        raise ValueError(
            f"no common polarization between {spatial_a!r} and {spatial_b!r}"
        )
    return _embedded(register, entries)


def bs_unbalanced(
    register: ModeRegister,
    spatial_in: str,
    spatial_r: str,
    spatial_t: str,
    transmission: float,
) -> ModeTransform:
    """Beam splitter feeding a fresh reflected/transmitted mode pair.

    Maps ``in^dag -> sqrt(T) t^dag + sqrt(R) r^dag`` with ``R = 1 - T`` on
    every polarization the input mode carries; the second splitter port is
    assumed to be vacuum, and the completion rows are chosen to keep the
    whole matrix unitary.
    """
    if not 0.0 < transmission < 1.0:
        raise ValueError(f"transmission must lie strictly between 0 and 1, got {transmission}")
    if len({spatial_in, spatial_r, spatial_t}) != 3:
        raise ValueError("input, reflected and transmitted spatial modes must be distinct")
    st = math.sqrt(transmission)
    sr = math.sqrt(1.0 - transmission)
    entries: dict[tuple[int, int], complex] = {}
    routed = False
    for pol in ("H", "V"):
        if not register.has_mode(spatial_in, pol):
            continue
        routed = True
        i = register.index(spatial_in, pol)
        r = register.index(spatial_r, pol)
        t = register.index(spatial_t, pol)
        entries[(i, t)] = st
        entries[(i, r)] = sr
        entries[(r, r)] = st
        entries[(r, t)] = -sr
        entries[(t, i)] = 1.0
    if not routed:
        raise ValueError(f"input spatial mode {spatial_in!r} not present in register")
    return _embedded(register, entries)


def polarization_rotation(register: ModeRegister, spatial: str, theta: float) -> ModeTransform:
    """Rotate the polarization basis of one spatial mode by ``theta``.

    ``V^dag -> cos(theta) V^dag + sin(theta) H^dag`` and
    ``H^dag -> cos(theta) H^dag - sin(theta) V^dag``.
    """
    if not (register.has_mode(spatial, "H") and register.has_mode(spatial, "V")):
        raise ValueError(f"spatial mode {spatial!r} needs both H and V modes in the register")
    h = register.index(spatial, "H")
    v = register.index(spatial, "V")
    c, s = math.cos(theta), math.sin(theta)
    return _embedded(register, {(h, h): c, (h, v): -s, (v, v): c, (v, h): s})


def pbs(
    register: ModeRegister,
    spatial_in: str,
    spatial_out_h: str,
    spatial_out_v: str,
) -> ModeTransform:
    """Polarizing beam splitter: H routes to one output path, V to the other.

    An output may coincide with the input (that polarization then stays
    put), but the two outputs must differ.
    """
    if spatial_out_h == spatial_out_v:
        raise ValueError("the two output spatial modes must be distinct")
    entries: dict[tuple[int, int], complex] = {}
    for pol, out in (("H", spatial_out_h), ("V", spatial_out_v)):
        i = register.index(spatial_in, pol)
        o = register.index(out, pol)
        if i != o:
            # swap keeps the permutation unitary; the counter-propagating
            # entry is never exercised because output modes start in vacuum
            entries[(i, o)] = 1.0
            entries[(o, i)] = 1.0
    return _embedded(register, entries)


# -- circuit description files -----------------------------------------


def parse_circuit(text: str, register: ModeRegister) -> list[ModeTransform]:
    """Parse a circuit description into a list of transforms, in order.

    One element per line, ``#`` starts a comment.  Supported elements::

        BS50 <spatial_a> <spatial_b>
        BSU  <spatial_in> <spatial_t> <spatial_r> T=<transmission>
        ROT  <spatial> theta=<radians>
        PBS  <spatial_in> <spatial_out_h> <spatial_out_v>
    """
    elements: list[ModeTransform] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind, args = fields[0].upper(), fields[1:]
        try:
            elements.append(_parse_element(kind, args, register))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return elements


def _parse_element(kind: str, args: list[str], register: ModeRegister) -> ModeTransform:
    if kind == "BS50":
        if len(args) != 2:
            raise ValueError("BS50 takes exactly two spatial modes")
        return bs_5050(register, args[0], args[1])
    if kind == "BSU":
        if len(args) != 4:
            raise ValueError("BSU takes two spatial outputs and a T= value")
        return bs_unbalanced(register, args[0], args[2], args[1], _keyword(args[3], "T"))
    if kind == "ROT":
        if len(args) != 2:
            raise ValueError("ROT takes one spatial mode and a theta= value")
        return polarization_rotation(register, args[0], _keyword(args[1], "theta"))
    if kind == "PBS":
        if len(args) != 3:
            raise ValueError("PBS takes an input and two output spatial modes")
        return pbs(register, args[0], args[1], args[2])
    raise ValueError(f"unknown element {kind!r}")


def _keyword(token: str, name: str) -> float:
    key, _, value = token.partition("=")
    if key != name or not value:
        raise ValueError(f"expected {name}=<value>, got {token!r}")
    return float(value)


def apply_circuit(ket: FockKet, elements: Iterable[ModeTransform]) -> FockKet:
    for element in elements:
        ket = element.apply(ket)
    return ket
