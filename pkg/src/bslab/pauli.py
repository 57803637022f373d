"""Bit-mask Pauli algebra and the fixed [[9,1,3]] Bacon-Shor tables.

Qubits are addressed by 1-based labels (data 1-9, ancillas 10-13); label ``q``
is stored at bit ``q - 1`` of the X and Z masks.  A qubit with both bits set
holds a Y (the Hermitian one, ``Y = iXZ``).

Only the +/-1 part of a phase is tracked.  Products that pick up a factor of
``i`` (e.g. ``X * Z = -iY``) keep the sign of the real part of the phase
rounded towards the nearest of {+1, -1} in the order ``1, i -> +1`` and
``-1, -i -> -1``.  Nothing downstream (syndromes, membership, logical action)
depends on that choice.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal

from bslab import gf2

LogicalClass = Literal["I", "X", "Y", "Z"]

N_DATA = 9
ANCILLA_LABELS = (10, 11, 12, 13)


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _mask(labels: Iterable[int]) -> int:
    m = 0
    for q in labels:
        m |= 1 << (q - 1)
    return m


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        limit = 1 << self.n_qubits
        if self.x_mask >= limit or self.z_mask >= limit or self.x_mask < 0 or self.z_mask < 0:
            raise ValueError("mask exceeds n_qubits")

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, axis: str) -> PauliString:
        axis = axis.upper()
        bit = 1 << (qubit - 1)
        if not 1 <= qubit <= n_qubits:
            raise ValueError(f"qubit {qubit} out of range 1..{n_qubits}")
        return cls(n_qubits, bit if axis in "XY" else 0, bit if axis in "ZY" else 0)

    @classmethod
    def from_str(cls, text: str, n_qubits: int = N_DATA) -> PauliString:
        """Parse ``"X1X2"``, ``"-Y1Z2Z3X4X7"`` or ``"I"``."""
        text = text.strip()
        sign = 1
        if text[:1] in "+-":
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        if text in ("", "I"):
            return cls(n_qubits, sign=sign)
        terms = re.findall(r"([IXYZ])(\d+)", text)
        if "".join(a + b for a, b in terms) != text:
            raise ValueError(f"cannot parse Pauli string {text!r}")
        x = z = 0
        for axis, q in terms:
            q = int(q)
            if not 1 <= q <= n_qubits:
                raise ValueError(f"qubit {q} out of range 1..{n_qubits}")
            bit = 1 << (q - 1)
            if (x | z) & bit:
                raise ValueError(f"qubit {q} repeated in {text!r}")
            if axis in "XY":
                x |= bit
            if axis in "ZY":
                z |= bit
        return cls(n_qubits, x, z, sign)

    @classmethod
    def x_type(cls, n_qubits: int, labels: Iterable[int]) -> PauliString:
        return cls(n_qubits, x_mask=_mask(labels))

    @classmethod
    def z_type(cls, n_qubits: int, labels: Iterable[int]) -> PauliString:
        return cls(n_qubits, z_mask=_mask(labels))

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x_mask | self.z_mask
        return tuple(q + 1 for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def n_y(self) -> int:
        return _popcount(self.x_mask & self.z_mask)

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def axis(self, qubit: int) -> str:
        b = 1 << (qubit - 1)
        return "IXZY"[bool(self.x_mask & b) + 2 * bool(self.z_mask & b)]

    def _check(self, other: PauliString) -> None:
        if self.n_qubits != other.n_qubits:
            raise ValueError(f"size mismatch: {self.n_qubits} vs {other.n_qubits} qubits")

    def phase_exponent(self, other: PauliString) -> int:
        """Power of ``i`` (mod 4) in ``self * other`` relative to the
        Hermitian Pauli with XOR-ed masks, ignoring both signs."""
        self._check(other)
        # Write each Pauli as i^{n_y} X^x Z^z, then move other's X past self's Z.
        k = self.n_y + other.n_y + 2 * _popcount(self.z_mask & other.x_mask)
        k -= _popcount((self.x_mask ^ other.x_mask) & (self.z_mask ^ other.z_mask))
        return k % 4

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __neg__(self) -> PauliString:
        return PauliString(self.n_qubits, self.x_mask, self.z_mask, -self.sign)

    def unsigned(self) -> PauliString:
        return PauliString(self.n_qubits, self.x_mask, self.z_mask)

    def restrict(self, n_qubits: int) -> PauliString:
        """Drop qubits with label > n_qubits."""
        m = (1 << n_qubits) - 1
        return PauliString(n_qubits, self.x_mask & m, self.z_mask & m, self.sign)

    def extend(self, n_qubits: int) -> PauliString:
        if n_qubits < self.n_qubits:
            raise ValueError("extend() cannot shrink; use restrict()")
        return PauliString(n_qubits, self.x_mask, self.z_mask, self.sign)

    @property
    def symplectic(self) -> int:
        """The 2n-bit vector ``x | z << n``."""
        return self.x_mask | (self.z_mask << self.n_qubits)

    def __str__(self) -> str:
        body = "".join(
            f"{self.axis(q)}{q}" for q in range(1, self.n_qubits + 1) if self.axis(q) != "I"
        )
        return ("-" if self.sign < 0 else "") + (body or "I")


def multiply(p: PauliString, q: PauliString) -> PauliString:
    k = p.phase_exponent(q)
    sign = p.sign * q.sign * (-1 if k in (2, 3) else 1)
    return PauliString(p.n_qubits, p.x_mask ^ q.x_mask, p.z_mask ^ q.z_mask, sign)


def commutes(p: PauliString, q: PauliString) -> bool:
    p._check(q)
    return (_popcount(p.x_mask & q.z_mask) + _popcount(p.z_mask & q.x_mask)) % 2 == 0


@dataclass(frozen=True)
class CodeSpec:
    """Static tables for the 3x3 Bacon-Shor code on data qubits 1..9.

    Qubit ``i`` sits at row ``ceil(i/3)`` and column ``((i-1) mod 3) + 1``.
    Z stabilizers cover pairs of rows, X stabilizers pairs of columns; X gauges
    are horizontal neighbours and Z gauges vertical neighbours.
    """

    n_qubits: int = N_DATA
    grid: tuple[tuple[int, ...], ...] = ((1, 2, 3), (4, 5, 6), (7, 8, 9))
    stabilizers: tuple[PauliString, ...] = field(init=False)
    x_gauges: tuple[PauliString, ...] = field(init=False)
    z_gauges: tuple[PauliString, ...] = field(init=False)
    logical_z: PauliString = field(init=False)
    logical_x: PauliString = field(init=False)
    ancilla_map: dict[str, int] = field(
        init=False, default_factory=lambda: {"S1": 10, "S2": 11, "S3": 12, "S4": 13}
    )

    def __post_init__(self):
        n = self.n_qubits
        put = object.__setattr__
        put(self, "stabilizers", (
            PauliString.z_type(n, (1, 4, 2, 5, 3, 6)),
            PauliString.z_type(n, (4, 7, 5, 8, 6, 9)),
            PauliString.x_type(n, (1, 2, 4, 5, 7, 8)),
            PauliString.x_type(n, (2, 3, 5, 6, 8, 9)),
        ))
        put(self, "x_gauges", tuple(
            PauliString.x_type(n, pair)
            for pair in ((1, 2), (4, 5), (7, 8), (2, 3), (5, 6), (8, 9))
        ))
        put(self, "z_gauges", tuple(
            PauliString.z_type(n, pair)
            for pair in ((1, 4), (2, 5), (3, 6), (4, 7), (5, 8), (6, 9))
        ))
        put(self, "logical_z", PauliString.z_type(n, range(1, 10)))
        put(self, "logical_x", PauliString.x_type(n, range(1, 10)))

    @property
    def rows(self) -> tuple[tuple[int, ...], ...]:
        return self.grid

    @property
    def columns(self) -> tuple[tuple[int, ...], ...]:
        return tuple(zip(*self.grid))

    @property
    def stabilizer_names(self) -> tuple[str, ...]:
        return ("S1", "S2", "S3", "S4")

    def stabilizer(self, name: str) -> PauliString:
        return self.stabilizers[self.stabilizer_names.index(name)]

    @property
    def gauges(self) -> tuple[PauliString, ...]:
        return self.x_gauges + self.z_gauges

    @cached_property
    def _gauge_basis(self) -> dict[int, int]:
        return gf2.reduce_basis(g.symplectic for g in self.gauges)

    @cached_property
    def _gauge_elements(self) -> list[int]:
        return gf2.span([g.symplectic for g in self.gauges])

    def gauge_span_dimension(self) -> int:
        return len(self._gauge_basis)

    def position(self, qubit: int) -> tuple[int, int]:
        """(row, column), both 1-based."""
        return (qubit - 1) // 3 + 1, (qubit - 1) % 3 + 1

    def _data(self, p: PauliString) -> PauliString:
        if p.n_qubits != self.n_qubits:
            raise ValueError(
                f"size mismatch: code has {self.n_qubits} qubits, Pauli has {p.n_qubits}"
            )
        return p


BACON_SHOR = CodeSpec()


def syndrome(error: PauliString, code: CodeSpec = BACON_SHOR) -> tuple[int, int, int, int]:
    """Bit k is 1 iff ``error`` anticommutes with stabilizer S_{k+1}."""
    error = code._data(error)
    return tuple(0 if commutes(error, s) else 1 for s in code.stabilizers)


def in_gauge_stabilizer_group(p: PauliString, code: CodeSpec = BACON_SHOR) -> bool:
    """Membership in the group generated by the gauge operators, up to sign."""
    p = code._data(p)
    return gf2.reduce_vector(p.symplectic, code._gauge_basis) == 0


def gauge_decomposition(p: PauliString, code: CodeSpec = BACON_SHOR) -> list[PauliString] | None:
    """Gauge generators whose product equals ``p`` up to sign, or None."""
    p = code._data(p)
    idx = gf2.solve(p.symplectic, [g.symplectic for g in code.gauges])
    if idx is None:
        return None
    return [code.gauges[i] for i in idx]


def logical_action(p: PauliString, code: CodeSpec = BACON_SHOR) -> LogicalClass:
    p = code._data(p)
    if any(syndrome(p, code)):
        raise ValueError(f"{p} has nontrivial syndrome {syndrome(p, code)}; decode first")
    flips_z = not commutes(p, code.logical_z)
    flips_x = not commutes(p, code.logical_x)
    return {(False, False): "I", (True, False): "X", (False, True): "Z", (True, True): "Y"}[
        (flips_z, flips_x)
    ]


def gauge_reduce(p: PauliString, code: CodeSpec = BACON_SHOR) -> PauliString:
    """A minimum-weight representative of ``p`` times the gauge group.

    Exhaustive over the 2**12 gauge-group elements; sign is dropped.
    """
    p = code._data(p)
    best = p.unsigned()
    n = code.n_qubits
    full = (1 << n) - 1
    for g in _gauge_elements(code):
        v = p.symplectic ^ g
        cand = PauliString(n, v & full, v >> n)
        if cand.weight < best.weight or (
            cand.weight == best.weight and (cand.x_mask, cand.z_mask) < (best.x_mask, best.z_mask)
        ):
            best = cand
    return best


def _gauge_elements(code: CodeSpec) -> list[int]:
    return code._gauge_elements


def single_qubit_paulis(n_qubits: int = N_DATA) -> list[PauliString]:
    """All 3 * n_qubits weight-one Paulis, ordered by qubit then X, Y, Z."""
    return [PauliString.single(n_qubits, q, a) for q in range(1, n_qubits + 1) for a in "XYZ"]
