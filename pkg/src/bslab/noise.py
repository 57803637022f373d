"""Error model and the noisy Monte Carlo executor.

Noise channels:

* coherent overrotation: ``eps_1q`` added to every R angle, ``eps_2q`` to
  every XX angle (deterministic, identical in every shot);
* asymmetric SPAM bit flips on readout, plus optional preparation flips;
* collective dephasing: a Wiener phase walk with variance 2 dt / T2* per op
  duration dt, applied as the same RZ on every active qubit;
* GHZ depolarization: a Z on each row leader with probability p/2 at the
  ``ghz`` barrier of an encoder;
* ``p_pauli``: a uniformly random nontrivial Pauli on the support of each
  R/XX gate with that probability (stochastic gate faults for scaling sweeps).

Shots are processed in fixed-size chunks, each with its own RNG stream
derived from (seed, key, chunk index), so results never depend on how work
is split.  Shots that share the same discrete fault pattern and no dephasing
share one simulated trajectory.  Fully Clifford circuits without dephasing
take a Pauli-frame shortcut: faults are pushed to the end of the circuit and
XORed onto samples of the noiseless state, which is exact.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Iterable, Mapping

import numpy as np

from bslab import circuits as C
from bslab import clifford as K
from bslab import statevector as sv
from bslab.pauli import N_DATA

CHUNK_SHOTS = 4096
MAX_BATCH_AMPLITUDES = 1 << 22


# -- configuration -----------------------------------------------------------------------

def overrotation_from_fidelity(fidelity: float, kind: str = "2q") -> float:
    """Overrotation angle whose state overlap equals ``fidelity``.

    Two-qubit: |<00| XX(chi)^dag XX(chi + eps) |00>|^2 = cos^2 eps.
    Single-qubit: |<0| R(th)^dag R(th + eps) |0>|^2 = cos^2(eps / 2).
    """
    if not 0.0 < fidelity <= 1.0:
        raise ValueError(f"fidelity must be in (0, 1], got {fidelity}")
    base = math.acos(math.sqrt(fidelity))
    if kind == "2q":
        return base
    if kind == "1q":
        return 2 * base
    raise ValueError(f"kind must be '1q' or '2q', got {kind!r}")


@dataclass(frozen=True)
class NoiseConfig:
    eps_1q: float = 0.0
    eps_2q: float = 0.0
    p_prep: float = 0.0
    p_dark_flip: float = 0.0
    p_bright_flip: float = 0.0
    t2_star: float | None = None  # None disables dephasing
    ghz_depol_p: float = 0.0
    flag_filter: bool = True
    seed: int = 0
    p_pauli: float = 0.0

    def __post_init__(self):
        for name in ("p_prep", "p_dark_flip", "p_bright_flip", "ghz_depol_p", "p_pauli"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")
        for name in ("eps_1q", "eps_2q"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.t2_star is not None and not self.t2_star > 0:
            raise ValueError("t2_star must be positive (or null to disable)")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ValueError("seed must fit in 64 bits")

    @classmethod
    def noiseless(cls, seed: int = 0) -> NoiseConfig:
        return cls(seed=seed)

    @classmethod
    def hardware_like(cls, seed: int = 0) -> NoiseConfig:
        """Hardware-scale defaults: 98.9% XX fidelity, 1.8e-4 single-qubit error,
        measured SPAM asymmetry and T2* = 0.61 s."""
        return cls(
            eps_1q=overrotation_from_fidelity(1 - 1.8e-4, "1q"),
            eps_2q=overrotation_from_fidelity(0.989, "2q"),
            p_dark_flip=0.0022,
            p_bright_flip=0.0071,
            t2_star=0.61,
            seed=seed,
        )

    @property
    def dephasing(self) -> bool:
        return self.t2_star is not None

    @property
    def is_noiseless(self) -> bool:
        return (self.eps_1q == 0 and self.eps_2q == 0 and self.p_prep == 0 and self.p_dark_flip == 0
                and self.p_bright_flip == 0 and not self.dephasing and self.ghz_depol_p == 0
                and self.p_pauli == 0)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> NoiseConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown noise fields: {sorted(unknown)}")
        return cls(**dict(data))

    def with_(self, **kw) -> NoiseConfig:
        return replace(self, **kw)


@dataclass
class ShotContext:
    """RNG stream and elapsed wall-clock time for one chunk of shots."""

    rng: np.random.Generator
    elapsed: float = 0.0

    @classmethod
    def for_chunk(cls, seed: int, key: tuple[int, ...], chunk: int) -> ShotContext:
        ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key) + (chunk,))
        return cls(np.random.default_rng(ss))


# -- channel primitives --------------------------------------------------------------------

def perturb_gate(op: C.GateOp, cfg: NoiseConfig) -> C.GateOp:
    if isinstance(op, C.R):
        return replace(op, theta=op.theta + cfg.eps_1q) if cfg.eps_1q else op
    if isinstance(op, C.XX):
        return replace(op, chi=op.chi + cfg.eps_2q) if cfg.eps_2q else op
    return op


def perturb_circuit(circuit: C.Circuit, cfg: NoiseConfig) -> C.Circuit:
    return circuit.with_ops(perturb_gate(op, cfg) for op in circuit.ops)


def sample_spam(bits: np.ndarray, cfg: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """Independent readout flips: 0 -> 1 with p_dark_flip, 1 -> 0 with p_bright_flip."""
    bits = np.asarray(bits, dtype=np.uint8)
    if cfg.p_dark_flip == 0 and cfg.p_bright_flip == 0:
        return bits.copy()
    u = rng.random(bits.shape)
    p = np.where(bits == 1, cfg.p_bright_flip, cfg.p_dark_flip)
    return bits ^ (u < p).astype(np.uint8)


def calibrate_delta_z(t: float, t2_star: float) -> float:
    """Gaussian phase width with E[cos delta] = exp(-t / t2_star)."""
    if not t2_star > 0:
        raise ValueError("t2_star must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return math.sqrt(2.0 * t / t2_star)


def apply_collective_dephasing(state: sv.StateVector, t: float, cfg: NoiseConfig,
                               rng: np.random.Generator,
                               qubits: tuple[int, ...] | None = None) -> float:
    """Draw one delta ~ N(0, Delta(t)^2) and apply RZ(delta) on each listed
    qubit (0-based positions; default: the data qubits present).  Returns delta."""
    if cfg.t2_star is None:
        return 0.0
    delta = float(rng.normal(0.0, calibrate_delta_z(t, cfg.t2_star)))
    if qubits is None:
        qubits = tuple(range(min(N_DATA, state.n_qubits)))
    sv.apply_collective_rz(state, delta, qubits)
    return delta


def ghz_depolarize(state: sv.StateVector, p: float, rng: np.random.Generator,
                   leaders: tuple[int, ...] = (0, 3, 6)) -> tuple[bool, ...]:
    """Per row, with probability p/2 apply Z to the row leader (0-based)."""
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    flips = tuple(bool(f) for f in rng.random(len(leaders)) < p / 2)
    for q, f in zip(leaders, flips):
        if f:
            sv.apply_pauli(state, _single(state.n_qubits, q, "Z"))
    return flips


def _single(n: int, pos: int, axis: str):
    from bslab.pauli import PauliString
    return PauliString.single(n, pos + 1, axis)


@dataclass(frozen=True)
class FilterResult:
    bits: np.ndarray
    n_total: int
    n_discarded: int

    @property
    def discarded_fraction(self) -> float:
        return self.n_discarded / self.n_total if self.n_total else 0.0


def flag_filter(bits: np.ndarray, circuit: C.Circuit) -> FilterResult:
    """Drop shots in which any idle flag qubit reads 1."""
    bits = np.asarray(bits)
    flags = [q - 1 for q in circuit.flag_qubits]
    if not flags:
        return FilterResult(bits, len(bits), 0)
    bad = bits[:, flags].any(axis=1)
    return FilterResult(bits[~bad], len(bits), int(bad.sum()))


# -- executor --------------------------------------------------------------------------------

@dataclass(frozen=True)
class ShotRecord:
    """Measured bits per shot, columns indexed by logical label - 1."""

    bits: np.ndarray
    basis: str
    flag_qubits: tuple[int, ...] = ()
    n_discarded: int = 0

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def data(self) -> np.ndarray:
        return self.bits[:, :N_DATA]

    def qubit(self, label: int) -> np.ndarray:
        return self.bits[:, label - 1]

    def filtered(self) -> ShotRecord:
        if not self.flag_qubits:
            return self
        bad = self.bits[:, [q - 1 for q in self.flag_qubits]].any(axis=1)
        return ShotRecord(self.bits[~bad], self.basis, self.flag_qubits, self.n_discarded + int(bad.sum()))


@dataclass
class _Sites:
    """Stochastic fault sites of a circuit, in local (active-qubit) positions."""

    after_op: list[int] = field(default_factory=list)
    prob: list[float] = field(default_factory=list)
    choices: list[list[tuple[int, int]]] = field(default_factory=list)  # (x, z) local masks


def _local_paulis(positions: tuple[int, ...]) -> list[tuple[int, int]]:
    out = []
    k = len(positions)
    for code in range(1, 4 ** k):
        x = z = 0
        for j, pos in enumerate(positions):
            a = (code >> (2 * j)) & 3  # 1=X, 2=Z, 3=Y
            if a & 1:
                x |= 1 << pos
            if a & 2:
                z |= 1 << pos
        out.append((x, z))
    return out


def _fault_sites(ops, local: dict[int, int], cfg: NoiseConfig) -> _Sites:
    s = _Sites()
    for i, op in enumerate(ops):
        if isinstance(op, C.PrepZ) and cfg.p_prep > 0:
            s.after_op.append(i)
            s.prob.append(cfg.p_prep)
            s.choices.append([(1 << local[op.q], 0)])
        elif isinstance(op, (C.R, C.XX)) and cfg.p_pauli > 0:
            s.after_op.append(i)
            s.prob.append(cfg.p_pauli)
            s.choices.append(_local_paulis(tuple(local[q] for q in op.qubits)))
        elif isinstance(op, C.Barrier) and op.label == "ghz" and cfg.ghz_depol_p > 0:
            for q in op.qubits:
                s.after_op.append(i)
                s.prob.append(cfg.ghz_depol_p / 2)
                s.choices.append([(0, 1 << local[q])])
    return s


def _sample_events(sites: _Sites, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, n_sites) int16: 0 = no fault, c > 0 = choices[site][c - 1]."""
    k = len(sites.prob)
    if k == 0:
        return np.zeros((n, 0), dtype=np.int16)
    u = rng.random((n, k))
    hit = u < np.asarray(sites.prob)
    which = rng.integers(0, [len(c) for c in sites.choices], size=(n, k))
    return np.where(hit, which + 1, 0).astype(np.int16)


def _local_op(op, local: dict[int, int]):
    """Unitary action of op in local positions, or None."""
    if isinstance(op, C.PauliExp):
        return op
    got = C.op_unitary(op)
    if got is None:
        return None
    labels, u = got
    return tuple(local[q] for q in labels), u


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _positions(mask: int) -> list[int]:
    return [p for p in range(mask.bit_length()) if (mask >> p) & 1]


def _apply_local(psi: np.ndarray, n: int, act) -> None:
    if isinstance(act, C.PauliExp):
        raise AssertionError
    pos, u = act
    if len(pos) == 1:
        sv.apply_1q_batch(psi, n, pos[0], u)
    else:
        # generic two-qubit unitary via tensor reshape
        b = psi.shape[0]
        t = psi.reshape((b,) + (2,) * n)
        axes = [1 + n - 1 - p for p in reversed(pos)]  # most significant op qubit first
        t = np.moveaxis(t, axes, list(range(1, 1 + len(pos))))
        shp = t.shape
        t = (u @ t.reshape(b, 1 << len(pos), -1))
        t = np.moveaxis(t.reshape(shp), list(range(1, 1 + len(pos))), axes)
        psi[:] = t.reshape(b, -1)


class _Program:
    """A circuit lowered to local positions over its active qubits."""

    def __init__(self, circuit: C.Circuit, cfg: NoiseConfig):
        self.circuit = circuit
        self.cfg = cfg
        pert = perturb_circuit(circuit, cfg)
        self.ops = pert.ops
        self.active = tuple(sorted(circuit.touched))
        self.local = {q: i for i, q in enumerate(self.active)}
        self.n = len(self.active)
        self.basis = circuit.measure_basis or "Z"
        self.sites = _fault_sites(self.ops, self.local, cfg)
        self.durations = np.array([C.wall_clock_cost(op, circuit.timing) for op in self.ops])
        self.actions = []
        for op in self.ops:
            if isinstance(op, C.PauliExp):
                lp = self._localize_pauli(op)
                self.actions.append(("pexp", lp, op.theta))
            elif isinstance(op, C.PrepZ):
                self.actions.append(("prep", self.local[op.q], op.bit))
            else:
                act = _local_op(op, self.local)
                self.actions.append(("u", act) if act is not None else ("noop",))
        self.clifford = all(K.is_clifford(op) for op in self.ops)

    def _localize_pauli(self, op: C.PauliExp):
        from bslab.pauli import PauliString
        x = z = 0
        for q in op.pauli.support:
            a = op.pauli.axis(q)
            if a in "XY":
                x |= 1 << self.local[q]
            if a in "ZY":
                z |= 1 << self.local[q]
        return PauliString(self.n, x, z, op.pauli.sign)

    # -- state evolution ---------------------------------------------------------------------

    def evolve(self, events: np.ndarray, deltas: np.ndarray | None) -> np.ndarray:
        """Evolve a batch of trajectories; returns probabilities (B, 2^n).

        Collective dephasing is a product of single-qubit Z phases, so each
        qubit carries its own pending phase until the next op that does not
        commute with it.  Phases still pending at readout are diagonal and drop out.
        """
        b = events.shape[0]
        n = self.n
        psi = np.zeros((b, 1 << n), dtype=complex)
        psi[:, 0] = 1.0
        site_at: dict[int, list[int]] = {}
        for j, i in enumerate(self.sites.after_op):
            site_at.setdefault(i, []).append(j)
        pending = np.zeros((b, n)) if deltas is not None else None
        dirty = np.zeros(n, dtype=bool)

        def flush(positions):
            if pending is None:
                return
            for p in positions:
                if dirty[p]:
                    sv.apply_phase_rows(psi, n, p, np.exp(1j * pending[:, p]))
                    pending[:, p] = 0.0
                    dirty[p] = False

        from bslab.pauli import PauliString
        for i, act in enumerate(self.actions):
            kind = act[0]
            if kind == "prep":
                if act[2]:
                    flush((act[1],))
                    sv.apply_1q_batch(psi, n, act[1], _PAULI_X)
            elif kind == "u":
                pos, u = act[1]
                if len(pos) == 1:
                    flush(pos)
                    sv.apply_1q_batch(psi, n, pos[0], u)
                else:
                    flush(pos)
                    if isinstance(self.ops[i], C.XX):
                        sv.apply_xx_batch(psi, n, pos[0], pos[1], self.ops[i].chi)
                    else:
                        _apply_local(psi, n, act[1])
            elif kind == "pexp":
                flush(_positions(act[1].x_mask))
                sv.apply_pauli_exp_batch(psi, n, act[1], act[2])
            if pending is not None and self.durations[i] > 0:
                pending += deltas[:, i][:, None]
                dirty[:] = True
            for j in site_at.get(i, ()):
                col = events[:, j]
                rows = np.nonzero(col)[0]
                if rows.size == 0:
                    continue
                for c in np.unique(col[rows]):
                    sel = rows[col[rows] == c]
                    x, z = self.sites.choices[j][c - 1]
                    flush(_positions(x))
                    sub = psi[sel]
                    sv.apply_pauli_batch(sub, n, PauliString(n, x, z))
                    psi[sel] = sub
        norms = np.einsum("ij,ij->i", psi.conj(), psi).real
        if np.any(np.abs(norms - 1) > 1e-8):
            raise RuntimeError("norm drift in noisy executor")
        return (psi.conj() * psi).real

    def frame_flips(self) -> list[np.ndarray]:
        """Per site, the X-mask each fault choice leaves on the measured qubits."""
        maps = K.suffix_maps(self.ops, self.circuit.n_qubits)
        out = []
        for j, i in enumerate(self.sites.after_op):
            masks = [0]
            for x, z in self.sites.choices[j]:
                gx = gz = 0
                for pos in range(self.n):
                    if (x >> pos) & 1:
                        gx |= 1 << (self.active[pos] - 1)
                    if (z >> pos) & 1:
                        gz |= 1 << (self.active[pos] - 1)
                fx, _ = K.apply_map(maps[i + 1], gx, gz)
                masks.append(sum(1 << pos for pos, q in enumerate(self.active) if (fx >> (q - 1)) & 1))
            out.append(np.array(masks, dtype=np.int64))
        return out


def _inverse_cdf(probs: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = np.inf
    out = np.empty(len(rows), dtype=np.int64)
    for r in np.unique(rows):
        sel = rows == r
        out[sel] = np.searchsorted(cdf[r], u[sel], side="right")
    return out


def _batch_rows(n: int) -> int:
    return max(1, MAX_BATCH_AMPLITUDES >> n)


def run_circuit(circuit: C.Circuit, cfg: NoiseConfig, shots: int, key: tuple[int, ...] = (),
                seed: int | None = None, frame: bool = True) -> ShotRecord:
    """Execute a measured circuit under ``cfg``; bits are in logical labels.

    ``key`` separates RNG streams of different conditions sharing one seed.
    ``frame=False`` disables the Pauli-frame shortcut (for cross-checks).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not circuit.measured:
        raise ValueError("circuit must end in MeasureAll")
    seed = cfg.seed if seed is None else seed
    prog = _Program(circuit, cfg)
    n = prog.n
    flips = prog.frame_flips() if (frame and prog.clifford and not cfg.dephasing and prog.sites.prob) else None
    base_probs = None
    bits = np.empty((shots, circuit.n_qubits), dtype=np.uint8)
    for chunk, start in enumerate(range(0, shots, CHUNK_SHOTS)):
        m = min(CHUNK_SHOTS, shots - start)
        ctx = ShotContext.for_chunk(seed, key, chunk)
        events = _sample_events(prog.sites, m, ctx.rng)
        deltas = None
        if cfg.dephasing:
            sd = np.sqrt(2.0 * prog.durations / cfg.t2_star)
            deltas = ctx.rng.standard_normal((m, len(prog.ops))) * sd
        u = ctx.rng.random(m)
        if flips is not None:
            if base_probs is None:
                base_probs = prog.evolve(np.zeros((1, len(prog.sites.prob)), dtype=np.int16), None)
            idx = _inverse_cdf(base_probs, np.zeros(m, dtype=np.int64), u)
            for j, table in enumerate(flips):
                idx ^= table[events[:, j]]
        elif deltas is None:
            uniq, inv = np.unique(events, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
            idx = np.empty(m, dtype=np.int64)
            step = _batch_rows(n)
            for b0 in range(0, len(uniq), step):
                probs = prog.evolve(uniq[b0:b0 + step], None)
                sel = (inv >= b0) & (inv < b0 + step)
                idx[sel] = _inverse_cdf(probs, inv[sel] - b0, u[sel])
        else:
            idx = np.empty(m, dtype=np.int64)
            step = _batch_rows(n)
            for b0 in range(0, m, step):
                sl = slice(b0, min(m, b0 + step))
                probs = prog.evolve(events[sl], deltas[sl])
                rows = np.arange(probs.shape[0])
                idx[sl] = _inverse_cdf(probs, rows, u[sl])
        # SPAM consumes the same chunk stream after sampling
        bits[start:start + m] = sample_spam(_expand(idx, prog, circuit.n_qubits), cfg, ctx.rng)
    bits = _relabel_bits(bits, circuit.relabel)
    return ShotRecord(bits, prog.basis, circuit.flag_qubits)


def _expand(idx: np.ndarray, prog: _Program, n_qubits: int) -> np.ndarray:
    bits = np.zeros((len(idx), n_qubits), dtype=np.uint8)
    for pos, q in enumerate(prog.active):
        bits[:, q - 1] = (idx >> pos) & 1
    return bits


def _relabel_bits(bits: np.ndarray, relabel: C.Permutation) -> np.ndarray:
    if relabel.is_identity():
        return bits
    out = bits.copy()
    for L in C.DATA_LABELS:
        out[:, L - 1] = bits[:, relabel(L) - 1]
    return out
