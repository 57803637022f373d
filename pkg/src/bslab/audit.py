"""Exhaustive single-fault audit of Clifford circuits.

Every location gets every nontrivial Pauli on its support: after each R, RZ
and XX, X flips after each preparation, and bit flips on each measured
qubit.  Each fault is pushed to the end of the circuit and classified by the
bits it flips in the measured basis:

* Benign: raw parity and both checks unchanged;
* Correctable: the correction protocol still returns the ideal outcome;
* LogicalFault: anything else.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from bslab import circuits as C
from bslab import clifford as K
from bslab import decode as D
from bslab.pauli import BACON_SHOR, N_DATA, CodeSpec, PauliString, gauge_reduce


class FaultClass(str, Enum):
    BENIGN = "Benign"
    CORRECTABLE = "Correctable"
    LOGICAL = "LogicalFault"


@dataclass(frozen=True)
class FaultLocation:
    op_index: int  # fault acts after ops[op_index]; len(ops) - 1 is the measurement
    kind: str  # "gate", "prep" or "meas"
    pauli: PauliString

    def describe(self) -> str:
        return f"{self.kind}@{self.op_index}:{self.pauli}"


@dataclass(frozen=True)
class FaultRecord:
    location: FaultLocation
    residual: PauliString  # data-qubit Pauli at readout, logical labels
    reduced: PauliString  # measured-basis projection after gauge reduction
    ancilla_flips: tuple[int, ...]
    fault_class: FaultClass

    def to_dict(self) -> dict:
        return {"op_index": self.location.op_index, "kind": self.location.kind,
                "pauli": str(self.location.pauli), "residual": str(self.residual),
                "reduced": str(self.reduced), "ancilla_flips": list(self.ancilla_flips),
                "class": self.fault_class.value}


@dataclass
class AuditReport:
    name: str
    basis: str
    records: list[FaultRecord] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(r.fault_class.value for r in self.records)
        return {k.value: c.get(k.value, 0) for k in FaultClass}

    @property
    def is_ft(self) -> bool:
        return self.counts[FaultClass.LOGICAL.value] == 0

    @property
    def verdict(self) -> str:
        return "FT" if self.is_ft else "not FT"

    @property
    def logical_faults(self) -> list[FaultRecord]:
        return [r for r in self.records if r.fault_class is FaultClass.LOGICAL]

    def to_dict(self) -> dict:
        return {"name": self.name, "basis": self.basis, "verdict": self.verdict,
                "counts": self.counts, "n_locations": len(self.records),
                "records": [r.to_dict() for r in self.records]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def table(self, limit: int = 20) -> str:
        lines = [f"{self.name} [{self.basis}]: {self.verdict}  " +
                 "  ".join(f"{k}={v}" for k, v in self.counts.items())]
        for r in self.logical_faults[:limit]:
            lines.append(f"  {r.location.describe():<28} residual={r.residual}  "
                         f"reduced={r.reduced}  ancillas={list(r.ancilla_flips)}")
        return "\n".join(lines)


def _all_paulis(labels: tuple[int, ...], n: int) -> list[PauliString]:
    out = []
    k = len(labels)
    for code in range(1, 4 ** k):
        x = z = 0
        for j, q in enumerate(labels):
            a = (code >> (2 * j)) & 3
            if a & 1:
                x |= 1 << (q - 1)
            if a & 2:
                z |= 1 << (q - 1)
        out.append(PauliString(n, x, z))
    return out


def enumerate_faults(circuit: C.Circuit) -> list[FaultLocation]:
    n = circuit.n_qubits
    locs: list[FaultLocation] = []
    for i, op in enumerate(circuit.ops):
        if isinstance(op, C.PrepZ):
            locs.append(FaultLocation(i, "prep", PauliString.single(n, op.q, "X")))
        elif isinstance(op, (C.R, C.RZ, C.XX, C.PauliExp)):
            if isinstance(op, C.PauliExp) and len(op.qubits) > 2:
                continue  # abstract multi-qubit rotations carry no native fault sites
            locs += [FaultLocation(i, "gate", p) for p in _all_paulis(op.qubits, n)]
        elif isinstance(op, C.MeasureAll):
            for q in sorted(circuit.touched):
                locs.append(FaultLocation(i, "meas", PauliString.single(n, q, "X")))
    return locs


def _ideal_triple(circuit: C.Circuit, basis: str, code: CodeSpec) -> tuple[int, int, int]:
    state = C.simulate(circuit.with_ops(op for op in circuit.ops if not isinstance(op, C.MeasureAll)))
    probs = state.probabilities()
    support = np.nonzero(probs > 1e-12)[0]
    bits = ((support[:, None] >> np.arange(N_DATA)) & 1).astype(np.uint8)
    raw, sa, sb = D.parity_and_stabs(bits, basis, code)
    triples = set(zip(raw.tolist(), sa.tolist(), sb.tolist()))
    if len(triples) != 1:
        raise ValueError("noiseless circuit does not give a deterministic parity and syndrome")
    return triples.pop()


def classify(flip_mask: int, ideal: tuple[int, int, int] = (1, 1, 1), basis: str = "Z",
             code: CodeSpec = BACON_SHOR) -> FaultClass:
    """Classify the data bit-flip pattern a residual leaves in the measured basis."""
    bits = np.array([[(flip_mask >> j) & 1 for j in range(N_DATA)]], dtype=np.uint8)
    fr, fa, fb = (int(v[0]) for v in D.parity_and_stabs(bits, basis, code))
    raw, sa, sb = ideal
    if (fr, fa, fb) == (1, 1, 1):
        return FaultClass.BENIGN
    good = D.decode(raw, sa, sb, D.Protocol.CORRECTION)
    got = D.decode(raw * fr, sa * fa, sb * fb, D.Protocol.CORRECTION)
    return FaultClass.CORRECTABLE if got == good else FaultClass.LOGICAL


def classify_residual(residual: PauliString, basis: str = "Z", code: CodeSpec = BACON_SHOR,
                      ideal: tuple[int, int, int] = (1, 1, 1)) -> FaultClass:
    """Classify a data Pauli present just before readout in ``basis``.

    In the Z basis its X part flips bits; in the X basis its Z part does.
    """
    mask = residual.x_mask if basis == "Z" else residual.z_mask
    return classify(mask & ((1 << N_DATA) - 1), ideal, basis, code)


def _relabel_mask(mask: int, relabel: C.Permutation) -> int:
    out = mask & ~((1 << N_DATA) - 1)
    for L in C.DATA_LABELS:
        if (mask >> (relabel(L) - 1)) & 1:
            out |= 1 << (L - 1)
    return out


def propagate_fault(circuit: C.Circuit, loc: FaultLocation) -> tuple[PauliString, tuple[int, ...]]:
    """Residual data Pauli (logical labels) at readout and the flipped ancilla labels."""
    ops = [op for op in circuit.ops if not isinstance(op, C.MeasureAll)]
    start = min(loc.op_index + 1, len(ops))
    for op in ops[start:]:
        if not K.is_clifford(op):
            raise K.NonCliffordError(f"non-Clifford op {op}")
    x, z = K.propagate(ops, start, loc.pauli.x_mask, loc.pauli.z_mask)
    return _finish(circuit, x, z)


def _finish(circuit: C.Circuit, x: int, z: int) -> tuple[PauliString, tuple[int, ...]]:
    dm = (1 << N_DATA) - 1
    x, z = _relabel_mask(x, circuit.relabel), _relabel_mask(z, circuit.relabel)
    residual = PauliString(N_DATA, x & dm, z & dm)
    anc = tuple(q for q in range(N_DATA + 1, circuit.n_qubits + 1) if (x >> (q - 1)) & 1)
    return residual, anc


def audit(circuit: C.Circuit, code: CodeSpec = BACON_SHOR, name: str = "circuit",
          basis: str | None = None) -> AuditReport:
    """Exhaustive single-fault audit; unmeasured circuits are read out in ``basis`` (default Z)."""
    if not circuit.measured:
        circuit = C.measure(circuit, basis or "Z")
    basis = circuit.measure_basis
    ops = circuit.ops[:-1]
    bad = [op for op in ops if not K.is_clifford(op)]
    if bad:
        raise K.NonCliffordError(f"circuit contains non-Clifford op {bad[0]}")
    ideal = _ideal_triple(circuit, basis, code)
    maps = K.suffix_maps(ops, circuit.n_qubits)
    report = AuditReport(name, basis)
    for loc in enumerate_faults(circuit):
        start = min(loc.op_index + 1, len(ops))
        x, z = K.apply_map(maps[start], loc.pauli.x_mask, loc.pauli.z_mask)
        residual, anc = _finish(circuit, x, z)
        # only the X part is visible to a computational-basis readout at this point;
        # in the X basis those flips stand for Z errors before the basis change
        flips = residual.x_mask
        pattern = PauliString(N_DATA, flips, 0) if basis == "Z" else PauliString(N_DATA, 0, flips)
        reduced = gauge_reduce(pattern, code)
        cls = classify(flips, ideal, basis, code)
        report.records.append(FaultRecord(loc, residual, reduced, anc, cls))
    return report


def canonical_circuits() -> dict[str, tuple[C.Circuit, bool]]:
    """Named circuits with whether each is expected to be FT."""
    enc0 = C.build_ft_encode("Z", "+")
    return {
        "ft_encode_Z+": (C.measure(enc0, "Z"), True),
        "ft_encode_X+": (C.measure(C.build_ft_encode("X", "+"), "X"), True),
        "nft_encode": (C.measure(C.build_nft_encode(0.0, 0.0), "Z"), False),
        "stab_S3_FT": (C.measure(enc0.then(C.build_stab_measure("S3", "FT")), "Z"), True),
        "stab_S3_nFT": (C.measure(enc0.then(C.build_stab_measure("S3", "nFT")), "Z"), False),
    }


def rows_touched(p: PauliString, code: CodeSpec = BACON_SHOR) -> int:
    return sum(any(q in row for q in p.support) for row in code.rows)
