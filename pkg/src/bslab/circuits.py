"""Circuit IR over the trapped-ion native gate set, plus the circuit builders.

Qubits are addressed by label: data qubits 1-9 on the 3x3 grid, ancillas
10-13 (S1..S4).  Circuits are immutable; builders assemble an op list and
freeze it.

A circuit may carry a ``relabel`` permutation of the data labels, used by the
transversal logical rotation: after execution, logical data qubit ``L`` is
physically stored at ``relabel[L]``.  Relabelling is pure bookkeeping and is
applied to measured bits (or to the final state) in post-processing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence, Union

import numpy as np

from bslab import statevector as sv
from bslab.pauli import BACON_SHOR, N_DATA, CodeSpec, PauliString

Basis = Literal["Z", "X"]
Ordering = Literal["FT", "nFT"]

HALF_PI = math.pi / 2
QUARTER_PI = math.pi / 4
DATA_LABELS = tuple(range(1, N_DATA + 1))
N_FULL = 13


@dataclass(frozen=True)
class Timing:
    """Wall-clock cost per op kind, in seconds.  RZ is a virtual frame update."""

    two_qubit: float = 225e-6
    single_qubit: float = 10e-6


DEFAULT_TIMING = Timing()


# -- ops -----------------------------------------------------------------------

@dataclass(frozen=True)
class PrepZ:
    q: int
    bit: int = 0

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)


@dataclass(frozen=True)
class R:
    q: int
    theta: float
    phi: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)


@dataclass(frozen=True)
class RZ:
    q: int
    theta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)


@dataclass(frozen=True)
class XX:
    q1: int
    q2: int
    chi: float

    def __post_init__(self):
        if self.q1 == self.q2:
            raise ValueError("XX needs two distinct qubits")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q1, self.q2)


@dataclass(frozen=True)
class PauliExp:
    pauli: PauliString
    theta: float

    def __post_init__(self):
        if self.pauli.is_identity():
            raise ValueError("identity generator")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.pauli.support


@dataclass(frozen=True)
class InjectPauli:
    """Deliberate error exp(-i theta/2 P_axis) on one qubit.

    Metadata, not a physical gate: the noise layer never perturbs it and the
    fault auditor does not place faults after it.  ``at`` records the
    interaction count it follows inside a stabilizer measurement (-1 if n/a).
    """

    q: int
    axis: str
    theta: float
    at: int = -1

    def __post_init__(self):
        if self.axis not in ("X", "Y", "Z"):
            raise ValueError(f"axis must be X, Y or Z, got {self.axis!r}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)


@dataclass(frozen=True)
class Wait:
    duration: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return ()


@dataclass(frozen=True)
class Barrier:
    """Named marker.  ``ghz`` barriers list the row leaders whose GHZ rows are
    complete at that point; the noise layer hooks GHZ depolarization there."""

    label: str
    qubits: tuple[int, ...] = ()


@dataclass(frozen=True)
class MeasureAll:
    basis: str = "Z"

    @property
    def qubits(self) -> tuple[int, ...]:
        return ()


GateOp = Union[PrepZ, R, RZ, XX, PauliExp, InjectPauli, Wait, Barrier, MeasureAll]
PHYSICAL_GATES = (R, XX)


def wall_clock_cost(op: GateOp, timing: Timing = DEFAULT_TIMING) -> float:
    if isinstance(op, XX):
        return timing.two_qubit
    if isinstance(op, R):
        return timing.single_qubit
    if isinstance(op, PauliExp):
        return timing.two_qubit * max(op.pauli.weight - 1, 1)
    if isinstance(op, Wait):
        return op.duration
    return 0.0


def _map_op(op: GateOp, f) -> GateOp:
    """Relabel every qubit of ``op`` through ``f``."""
    if isinstance(op, (PrepZ, R, RZ, InjectPauli)):
        return replace(op, q=f(op.q))
    if isinstance(op, XX):
        return replace(op, q1=f(op.q1), q2=f(op.q2))
    if isinstance(op, Barrier):
        return replace(op, qubits=tuple(f(q) for q in op.qubits))
    if isinstance(op, PauliExp):
        p = op.pauli
        x = z = 0
        for q in p.support:
            bit = 1 << (f(q) - 1)
            a = p.axis(q)
            x |= bit if a in "XY" else 0
            z |= bit if a in "ZY" else 0
        return replace(op, pauli=PauliString(p.n_qubits, x, z, p.sign))
    return op


# -- permutations ----------------------------------------------------------------

@dataclass(frozen=True)
class Permutation:
    """Bijection on data labels 1..9; ``images[i]`` is the image of label i+1."""

    images: tuple[int, ...] = DATA_LABELS

    def __post_init__(self):
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"not a permutation of 1..{len(self.images)}: {self.images}")

    def __call__(self, label: int) -> int:
        if 1 <= label <= len(self.images):
            return self.images[label - 1]
        return label

    def compose(self, inner: Permutation) -> Permutation:
        """self after inner: L -> self(inner(L))."""
        return Permutation(tuple(self(inner(L)) for L in range(1, len(self.images) + 1)))

    def inverse(self) -> Permutation:
        inv = [0] * len(self.images)
        for i, im in enumerate(self.images):
            inv[im - 1] = i + 1
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return self.images == tuple(range(1, len(self.images) + 1))

    def apply_to_pauli(self, p: PauliString) -> PauliString:
        """Move the factor on label L to label self(L)."""
        return _map_op(PauliExp(p, 0.0), self).pauli if not p.is_identity() else p


IDENTITY = Permutation()
# grid transpose: (row, col) <-> (col, row)
TRANSPOSE = Permutation((1, 4, 7, 2, 5, 8, 3, 6, 9))


# -- circuits --------------------------------------------------------------------

@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple[GateOp, ...] = ()
    relabel: Permutation = IDENTITY
    timing: Timing = field(default=DEFAULT_TIMING, compare=False)

    def __post_init__(self):
        for i, op in enumerate(self.ops):
            for q in getattr(op, "qubits", ()):
                if not 1 <= q <= self.n_qubits:
                    raise ValueError(f"op {i} ({op}) uses qubit {q} outside 1..{self.n_qubits}")
            if isinstance(op, MeasureAll) and i != len(self.ops) - 1:
                raise ValueError("MeasureAll must be the last op")
            if isinstance(op, PauliExp) and op.pauli.n_qubits != self.n_qubits:
                raise ValueError("PauliExp generator size does not match circuit")

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def measured(self) -> bool:
        return bool(self.ops) and isinstance(self.ops[-1], MeasureAll)

    @property
    def measure_basis(self) -> str | None:
        return self.ops[-1].basis if self.measured else None

    @property
    def touched(self) -> frozenset[int]:
        qs: set[int] = set()
        for op in self.ops:
            qs.update(getattr(op, "qubits", ()))
        return frozenset(qs)

    @property
    def roles(self) -> dict[int, str]:
        """data 1-9; ancilla if any op touches it; otherwise an idle flag qubit."""
        touched = self.touched
        out = {}
        for q in range(1, self.n_qubits + 1):
            if q <= N_DATA:
                out[q] = "data"
            else:
                out[q] = "ancilla" if q in touched else "flag"
        return out

    @property
    def flag_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, r in self.roles.items() if r == "flag")

    def duration(self) -> float:
        return sum(wall_clock_cost(op, self.timing) for op in self.ops)

    def count(self, kind: type) -> int:
        return sum(isinstance(op, kind) for op in self.ops)

    def then(self, other: Circuit) -> Circuit:
        """Append ``other``, whose data labels refer to this circuit's logical frame."""
        if self.measured:
            raise ValueError("cannot append after MeasureAll")
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        mapped = tuple(_map_op(op, self.relabel) for op in other.ops)
        return Circuit(self.n_qubits, self.ops + mapped, self.relabel.compose(other.relabel), self.timing)

    def with_ops(self, ops: Iterable[GateOp]) -> Circuit:
        return Circuit(self.n_qubits, tuple(ops), self.relabel, self.timing)


def _ry(q: int, theta: float) -> R:
    return R(q, theta, HALF_PI)


def _rx(q: int, theta: float) -> R:
    return R(q, theta, 0.0)


def decompose_cnot(control: int, target: int) -> list[GateOp]:
    """CNOT from one XX(pi/4) and four single-qubit rotations (exact up to global phase)."""
    if control == target:
        raise ValueError("control and target must differ")
    return [
        _ry(control, HALF_PI),
        XX(control, target, QUARTER_PI),
        _rx(control, -HALF_PI),
        _rx(target, -HALF_PI),
        _ry(control, -HALF_PI),
    ]


def _rows(code: CodeSpec) -> tuple[tuple[int, ...], ...]:
    return code.rows


def _ghz_rows(code: CodeSpec) -> list[GateOp]:
    ops: list[GateOp] = []
    for leader, *rest in _rows(code):
        ops.append(_ry(leader, HALF_PI))
        for q in rest:
            ops += decompose_cnot(leader, q)
    ops.append(Barrier("ghz", tuple(r[0] for r in _rows(code))))
    return ops


def build_ft_encode(basis: Basis = "Z", sign: str = "+", n_qubits: int = N_FULL,
                    code: CodeSpec = BACON_SHOR) -> Circuit:
    """Fault-tolerant preparation of |0>, |1> (basis Z) or |+>, |-> (basis X).

    Each row leader starts in |0> (sign +) or |1> (sign -) and fans out into a
    row GHZ state; no gate couples different rows.  For basis Z a final
    RY(-pi/2) on every data qubit turns each row into (|+++> +- |--->)/sqrt2.
    For basis X the final stage is omitted and the grid transpose is attached
    as a relabel, so the row GHZ states become the column GHZ states of |+/->_L.
    """
    if basis not in ("Z", "X") or sign not in ("+", "-"):
        raise ValueError(f"bad basis/sign {basis!r}/{sign!r}")
    leaders = {r[0] for r in _rows(code)}
    ops: list[GateOp] = [PrepZ(q, int(sign == "-" and q in leaders)) for q in DATA_LABELS]
    ops += _ghz_rows(code)
    if basis == "Z":
        ops += [_ry(q, -HALF_PI) for q in DATA_LABELS]
        return Circuit(n_qubits, tuple(ops))
    return Circuit(n_qubits, tuple(ops), TRANSPOSE)


def build_nft_encode(theta: float, phi: float, n_qubits: int = N_FULL,
                     code: CodeSpec = BACON_SHOR) -> Circuit:
    """Encode R(theta, phi)|0> on qubit 1 into alpha|0>_L + beta|1>_L.

    Qubit 1 is copied onto the other row leaders before the FT stage, which
    is what lets a single early fault reach all three rows.
    """
    leaders = [r[0] for r in _rows(code)]
    ops: list[GateOp] = [PrepZ(q, 0) for q in DATA_LABELS]
    ops.append(R(leaders[0], theta, phi))
    for q in leaders[1:]:
        ops += decompose_cnot(leaders[0], q)
    ops += _ghz_rows(code)
    ops += [_ry(q, -HALF_PI) for q in DATA_LABELS]
    return Circuit(n_qubits, tuple(ops))


def build_transversal_yl(direction: float = HALF_PI, n_qubits: int = N_FULL) -> tuple[Circuit, Permutation]:
    """Y_L(+-pi/2) as RY(+-pi/2) on every data qubit followed by the grid transpose."""
    if not math.isclose(abs(direction), HALF_PI):
        raise ValueError("transversal Y_L exists only for +-pi/2")
    ops = tuple(_ry(q, direction) for q in DATA_LABELS)
    return Circuit(n_qubits, ops, TRANSPOSE), TRANSPOSE


# basis change V with V P V^dag = Z, as (before, after) rotations
_TO_Z = {
    "X": ((HALF_PI * -1, HALF_PI), (HALF_PI, HALF_PI)),  # RY(-pi/2) ... RY(pi/2)
    "Y": ((HALF_PI, 0.0), (-HALF_PI, 0.0)),  # RX(pi/2) ... RX(-pi/2)
}


def compile_pauli_rotation(pauli: PauliString, theta: float, pivot: int | None = None) -> list[GateOp]:
    """Native ops for exp(-i theta/2 P): basis change, CNOT ladder onto the
    pivot, one R(theta, 0) wrapped to act as a Z rotation, then undo."""
    support = pauli.support
    if not support:
        raise ValueError("identity generator")
    pivot = support[0] if pivot is None else pivot
    if pivot not in support:
        raise ValueError("pivot must be in the support")
    before: list[GateOp] = []
    after: list[GateOp] = []
    for q in support:
        a = pauli.axis(q)
        if a in _TO_Z:
            (t0, p0), (t1, p1) = _TO_Z[a]
            before.append(R(q, t0, p0))
            after.append(R(q, t1, p1))
    ladder: list[GateOp] = []
    for q in support:
        if q != pivot:
            ladder += decompose_cnot(q, pivot)
    unladder: list[GateOp] = []
    for q in reversed(support):
        if q != pivot:
            unladder += decompose_cnot(q, pivot)
    # exp(-i t Z/2) = RY(-pi/2) RX(t) RY(pi/2)  (time order: RY(pi/2) first)
    s = -pauli.sign  # -P rotates the other way
    center = [_ry(pivot, HALF_PI), R(pivot, theta if s < 0 else -theta, 0.0), _ry(pivot, -HALF_PI)]
    return before + ladder + center + unladder + after


NFT_YL_GENERATOR = "Y1Z2Z3X4X7"


def build_nft_yl(theta: float, n_qubits: int = N_FULL) -> Circuit:
    """Continuous logical rotation exp(-i theta/2 Y1Z2Z3X4X7) in native gates."""
    p = PauliString.from_str(NFT_YL_GENERATOR, n_qubits)
    return Circuit(n_qubits, tuple(compile_pauli_rotation(p, theta, pivot=1)))


def stabilizer_ordering(stab: str, ordering: Ordering, code: CodeSpec = BACON_SHOR) -> tuple[int, ...]:
    """Data interaction order for a stabilizer measurement.

    FT visits the stabilizer's support gauge-pair by gauge-pair (for S3:
    1,2,4,5,7,8), so any ancilla fault spreads to a gauge operator times at
    most one data qubit.  nFT visits the same support transposed (S3:
    1,4,7,2,5,8), which spreads a mid-measurement ancilla Z into a logical
    operator.
    """
    s = code.stabilizer(stab)
    gauges = code.x_gauges if s.x_mask else code.z_gauges
    pairs = [g.support for g in gauges if (g.x_mask | g.z_mask) & ~(s.x_mask | s.z_mask) == 0]
    pairs.sort()
    ft = tuple(q for pair in pairs for q in pair)
    if ordering == "FT":
        return ft
    if ordering == "nFT":
        return tuple(pair[0] for pair in pairs) + tuple(pair[1] for pair in pairs)
    raise ValueError(f"ordering must be FT or nFT, got {ordering!r}")


@dataclass(frozen=True)
class Injection:
    axis: str = "Z"
    theta: float = math.pi
    after: int = 3
    qubit: int | None = None  # defaults to the stabilizer's ancilla


def build_stab_measure(stab: str, ordering: Ordering = "FT", inject: Injection | None = None,
                       n_qubits: int = N_FULL, code: CodeSpec = BACON_SHOR) -> Circuit:
    """Map one weight-6 stabilizer onto its ancilla with six CNOT interactions.

    Z-type: CNOT data -> ancilla.  X-type: each data qubit is rotated by
    RY(-pi/2) into the Z basis around its CNOT.  The ancilla ends in |1> iff
    the stabilizer eigenvalue is -1.
    """
    s = code.stabilizer(stab)
    anc = code.ancilla_map[stab]
    order = stabilizer_ordering(stab, ordering, code)
    if inject is not None:
        if inject.qubit not in (None, anc):
            raise ValueError(f"injection allowed only on ancilla {anc}, got qubit {inject.qubit}")
        if not 0 <= inject.after <= len(order):
            raise ValueError(f"after must be in 0..{len(order)}")
    x_type = bool(s.x_mask)
    ops: list[GateOp] = [PrepZ(anc, 0)]

    def maybe_inject(k: int) -> None:
        if inject is not None and inject.after == k:
            ops.append(InjectPauli(anc, inject.axis, inject.theta, at=k))

    maybe_inject(0)
    for k, d in enumerate(order, start=1):
        if x_type:
            ops.append(_ry(d, -HALF_PI))
        ops.extend(decompose_cnot(d, anc))
        if x_type:
            ops.append(_ry(d, HALF_PI))
        maybe_inject(k)
    return Circuit(n_qubits, tuple(ops))


FULL_SYNDROME_ORDER = ("S3", "S4", "S1", "S2")


def build_full_syndrome(inject: tuple[int, str] | None = None, encode: bool = True,
                        n_qubits: int = N_FULL) -> Circuit:
    """FT |0>_L, an optional single-qubit Pauli on one data qubit, then S3, S4,
    S1, S2 mapped onto ancillas 12, 13, 10, 11 with FT orderings."""
    circ = build_ft_encode("Z", "+", n_qubits) if encode else Circuit(n_qubits)
    if inject is not None:
        q, axis = inject
        if not 1 <= q <= N_DATA:
            raise ValueError(f"injected qubit must be a data qubit, got {q}")
        circ = circ.then(Circuit(n_qubits, (InjectPauli(q, axis, math.pi),)))
    for stab in FULL_SYNDROME_ORDER:
        circ = circ.then(build_stab_measure(stab, "FT", n_qubits=n_qubits))
    return measure(circ, "Z")


def measure(circuit: Circuit, basis: Basis = "Z") -> Circuit:
    """Append readout; basis X first rotates every data qubit by RY(-pi/2)."""
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be Z or X, got {basis!r}")
    ops: list[GateOp] = []
    if basis == "X":
        ops = [_ry(q, -HALF_PI) for q in DATA_LABELS]
    return circuit.then(Circuit(circuit.n_qubits, tuple(ops) + (MeasureAll(basis),)))


def phase_sweep(phi: float, n_qubits: int = N_FULL) -> Circuit:
    """RZ(phi) on every data qubit (virtual gates)."""
    return Circuit(n_qubits, tuple(RZ(q, phi) for q in DATA_LABELS))


# -- noiseless execution ---------------------------------------------------------------

def op_unitary(op: GateOp) -> tuple[tuple[int, ...], np.ndarray] | None:
    """(labels, matrix) for 1- and 2-qubit unitary ops; labels[0] is the low bit."""
    if isinstance(op, R):
        return (op.q,), sv.r_matrix(op.theta, op.phi)
    if isinstance(op, RZ):
        return (op.q,), sv.rz_matrix(op.theta)
    if isinstance(op, XX):
        return (op.q1, op.q2), sv.xx_matrix(op.chi)
    if isinstance(op, InjectPauli):
        p = {"X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
             "Z": np.diag([1, -1])}[op.axis]
        u = np.cos(op.theta / 2) * np.eye(2) - 1j * np.sin(op.theta / 2) * p
        return (op.q,), u
    return None


def apply_op(state: sv.StateVector, op: GateOp) -> None:
    """Noiseless action of one op on a state indexed by label - 1."""
    if isinstance(op, PrepZ):
        if op.bit:
            sv.apply_1q_batch(state._batch(), state.n_qubits, op.q - 1, np.array([[0, 1], [1, 0]]))
    elif isinstance(op, R):
        sv.apply_r(state, op.q - 1, op.theta, op.phi)
    elif isinstance(op, RZ):
        sv.apply_rz(state, op.q - 1, op.theta)
    elif isinstance(op, XX):
        sv.apply_xx(state, op.q1 - 1, op.q2 - 1, op.chi)
    elif isinstance(op, PauliExp):
        sv.apply_pauli_exp(state, op.pauli, op.theta)
    elif isinstance(op, InjectPauli):
        labels, u = op_unitary(op)
        sv.apply_1q_batch(state._batch(), state.n_qubits, op.q - 1, u)
    # Wait, Barrier, MeasureAll: no noiseless action


def relabel_state(state: sv.StateVector, relabel: Permutation) -> sv.StateVector:
    """Reorder amplitudes so position L-1 holds logical label L."""
    if relabel.is_identity():
        return state
    return state.permute_qubits({relabel(L) - 1: L - 1 for L in DATA_LABELS})


def simulate(circuit: Circuit, state: sv.StateVector | None = None, logical_frame: bool = True) -> sv.StateVector:
    """Run every op noiselessly (measurement excluded); PrepZ assumes a fresh |0>."""
    state = sv.StateVector.zero(circuit.n_qubits) if state is None else state.copy()
    for op in circuit.ops:
        apply_op(state, op)
    return relabel_state(state, circuit.relabel) if logical_frame else state


def data_state(state: sv.StateVector, n_data: int = N_DATA) -> sv.StateVector:
    """Drop qubits above ``n_data`` assuming they are in |0> (checked)."""
    amps = state.amplitudes.reshape(-1, 1 << n_data)
    rest = np.linalg.norm(amps[1:])
    if rest > 1e-9:
        raise ValueError("qubits beyond the data register are not in |0>")
    return sv.StateVector(n_data, amps[0].copy())


# -- text serialization ------------------------------------------------------------------

def _num(x: float) -> str:
    return repr(float(x))


def to_text(circuit: Circuit) -> str:
    lines = [f"CIRCUIT n_qubits={circuit.n_qubits}"]
    if not circuit.relabel.is_identity():
        lines.append("RELABEL " + ",".join(str(i) for i in circuit.relabel.images))
    for op in circuit.ops:
        if isinstance(op, PrepZ):
            lines.append(f"PREP q={op.q} bit={op.bit}")
        elif isinstance(op, R):
            lines.append(f"R q={op.q} theta={_num(op.theta)} phi={_num(op.phi)}")
        elif isinstance(op, RZ):
            lines.append(f"RZ q={op.q} theta={_num(op.theta)}")
        elif isinstance(op, XX):
            lines.append(f"XX q1={op.q1} q2={op.q2} chi={_num(op.chi)}")
        elif isinstance(op, PauliExp):
            lines.append(f"PAULIEXP pauli={op.pauli} theta={_num(op.theta)}")
        elif isinstance(op, InjectPauli):
            lines.append(f"INJECT q={op.q} axis={op.axis} theta={_num(op.theta)} at={op.at}")
        elif isinstance(op, Wait):
            lines.append(f"WAIT t={_num(op.duration)}")
        elif isinstance(op, Barrier):
            lines.append(f"BARRIER label={op.label} qubits={','.join(map(str, op.qubits))}")
        elif isinstance(op, MeasureAll):
            lines.append(f"MEASURE basis={op.basis}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    n_qubits = None
    relabel = IDENTITY
    ops: list[GateOp] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "RELABEL":
            relabel = Permutation(tuple(int(v) for v in rest[0].split(",")))
            continue
        kv = dict(item.split("=", 1) for item in rest)
        try:
            if head == "CIRCUIT":
                n_qubits = int(kv["n_qubits"])
            elif head == "PREP":
                ops.append(PrepZ(int(kv["q"]), int(kv.get("bit", 0))))
            elif head == "R":
                ops.append(R(int(kv["q"]), float(kv["theta"]), float(kv["phi"])))
            elif head == "RZ":
                ops.append(RZ(int(kv["q"]), float(kv["theta"])))
            elif head == "XX":
                ops.append(XX(int(kv["q1"]), int(kv["q2"]), float(kv["chi"])))
            elif head == "PAULIEXP":
                ops.append(PauliExp(PauliString.from_str(kv["pauli"], n_qubits), float(kv["theta"])))
            elif head == "INJECT":
                ops.append(InjectPauli(int(kv["q"]), kv["axis"], float(kv["theta"]), int(kv.get("at", -1))))
            elif head == "WAIT":
                ops.append(Wait(float(kv["t"])))
            elif head == "BARRIER":
                qs = tuple(int(v) for v in kv.get("qubits", "").split(",") if v)
                ops.append(Barrier(kv["label"], qs))
            elif head == "MEASURE":
                ops.append(MeasureAll(kv.get("basis", "Z")))
            else:
                raise ValueError(f"unknown op {head!r}")
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {raw!r}: {exc}") from exc
    if n_qubits is None:
        raise ValueError("missing CIRCUIT header")
    return Circuit(n_qubits, tuple(ops), relabel)


# -- reference states --------------------------------------------------------------------

def logical_basis_state(basis: Basis, sign: str, code: CodeSpec = BACON_SHOR) -> sv.StateVector:
    """Gauge-fixed basis states as products of three-qubit GHZ-type states.

    |0/1>_L (x) |X>_G: rows in (|+++> +- |--->)/sqrt2.
    |+/->_L (x) |Z>_G: columns in (|000> +- |111>)/sqrt2.
    """
    s = 1.0 if sign == "+" else -1.0
    amps = np.zeros(1 << N_DATA, dtype=complex)
    if basis == "X":
        groups = code.columns
        for bits in range(8):
            idx = 0
            phase = 1.0
            for g, grp in enumerate(groups):
                if (bits >> g) & 1:
                    phase *= s
                    for q in grp:
                        idx |= 1 << (q - 1)
            amps[idx] += phase
        amps /= np.sqrt(8)
        return sv.StateVector(N_DATA, amps)
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    row_state = {}
    for r in code.rows:
        v = np.kron(np.kron(plus, plus), plus) + s * np.kron(np.kron(minus, minus), minus)
        row_state[r] = v / np.sqrt(2)
    # assemble 9-qubit state: each row's 3-qubit vector has its first listed
    # qubit as the least significant bit after this reshape
    full = np.zeros(1 << N_DATA, dtype=complex)
    for idx in range(1 << N_DATA):
        a = 1.0 + 0j
        for r in code.rows:
            local = sum(((idx >> (q - 1)) & 1) << j for j, q in enumerate(r))
            a *= row_state[r][_kron_index(local)]
        full[idx] = a
    return sv.StateVector(N_DATA, full)


def _kron_index(local: int) -> int:
    """np.kron(a, b, c) puts ``a`` on the most significant bit; ``local`` has
    the first qubit on the least significant bit."""
    b0, b1, b2 = local & 1, (local >> 1) & 1, (local >> 2) & 1
    return (b0 << 2) | (b1 << 1) | b2
