"""Dense state-vector simulation for up to 16 qubits.

Amplitudes are little-endian: qubit position 0 is the least significant bit of
the basis-state index.  Positions here are 0-based; circuits address qubits by
1-based label and convert with ``label - 1``.

The ``*_batch`` kernels operate in place on a 2-D array of shape
``(batch, 2**n)`` so that many stochastic trajectories can share one call.
The public ``apply_*`` functions wrap them for a single :class:`StateVector`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bslab.pauli import PauliString

MAX_QUBITS = 16
NORM_TOL = 1e-10

_POPCOUNT_CACHE: dict[int, np.ndarray] = {}


def popcounts(n_qubits: int) -> np.ndarray:
    """Hamming weight of every basis index, cached per size."""
    if n_qubits not in _POPCOUNT_CACHE:
        idx = np.arange(1 << n_qubits, dtype=np.uint32)
        w = np.zeros(1 << n_qubits, dtype=np.int64)
        for q in range(n_qubits):
            w += (idx >> q) & 1
        _POPCOUNT_CACHE[n_qubits] = w
    return _POPCOUNT_CACHE[n_qubits]


def r_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -1j * np.exp(-1j * phi) * s], [-1j * np.exp(1j * phi) * s, c]], dtype=complex
    )


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def xx_matrix(chi: float) -> np.ndarray:
    """exp(-i chi X(x)X); chi = pi/4 is maximally entangling."""
    xx = np.fliplr(np.eye(4))
    return np.cos(chi) * np.eye(4) - 1j * np.sin(chi) * xx


# -- batched in-place kernels -------------------------------------------------

def apply_1q_batch(psi: np.ndarray, n_qubits: int, q: int, u: np.ndarray) -> None:
    b = psi.shape[0]
    if q <= 2:
        # low qubits: one GEMM against U (x) I keeps the inner loop in BLAS
        k = np.kron(u, np.eye(1 << q))
        psi[:] = (psi.reshape(-1, 2 << q) @ k.T).reshape(b, -1)
    else:
        psi[:] = np.matmul(u, psi.reshape(-1, 2, 1 << q)).reshape(b, -1)


def apply_phase_rows(psi: np.ndarray, n_qubits: int, q: int, phase: np.ndarray) -> None:
    """Multiply the |1> half of qubit q by a per-row phase."""
    b = psi.shape[0]
    v = psi.reshape(b, 1 << (n_qubits - q - 1), 2, 1 << q)
    v[:, :, 1, :] *= phase[:, None, None]


def apply_xx_batch(psi: np.ndarray, n_qubits: int, q1: int, q2: int, chi: float) -> None:
    """exp(-i chi X_q1 X_q2) on every row, in place."""
    lo, hi = sorted((q1, q2))
    b = psi.shape[0]
    v = psi.reshape(b, 1 << (n_qubits - hi - 1), 2, 1 << (hi - lo - 1), 2, 1 << lo)
    c, s = np.cos(chi), -1j * np.sin(chi)
    for a in (0, 1):
        x = v[:, :, 0, :, a, :]
        y = v[:, :, 1, :, 1 - a, :]
        x0 = x.copy()
        x *= c
        x += s * y
        y *= c
        y += s * x0


def apply_diagonal_batch(psi: np.ndarray, phases: np.ndarray) -> None:
    """Multiply by a diagonal; ``phases`` broadcasts against ``psi``."""
    psi *= phases


def _pauli_action(n_qubits: int, p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Index map and phases so that (P psi)[b] = phase[b] * psi[src[b]]."""
    idx = np.arange(1 << n_qubits)
    src = idx ^ p.x_mask
    # P|c> = sign * i^{n_y} * (-1)^{|c & z|} |c ^ x| with c = src[b]
    parity = popcounts(n_qubits)[src & p.z_mask] & 1
    phase = p.sign * (1j ** p.n_y) * (1 - 2 * parity)
    return src, phase.astype(complex)


def apply_pauli_batch(psi: np.ndarray, n_qubits: int, p: PauliString) -> None:
    src, phase = _pauli_action(n_qubits, p)
    psi[:] = phase * psi[:, src]


def apply_pauli_exp_batch(psi: np.ndarray, n_qubits: int, p: PauliString, theta: float) -> None:
    src, phase = _pauli_action(n_qubits, p)
    psi[:] = np.cos(theta / 2) * psi - 1j * np.sin(theta / 2) * phase * psi[:, src]


def collective_rz_phases(n_qubits: int, deltas: np.ndarray, qubit_mask: int | None = None) -> np.ndarray:
    """Phases of RZ(delta) applied to every qubit in ``qubit_mask``.

    Returns shape ``(len(deltas), 2**n)``.  For k qubits set out of m targets
    the phase is exp(i delta (k - m/2)).
    """
    if qubit_mask is None:
        qubit_mask = (1 << n_qubits) - 1
    m = bin(qubit_mask).count("1")
    k = popcounts(n_qubits)[np.arange(1 << n_qubits) & qubit_mask]
    deltas = np.asarray(deltas, dtype=float).reshape(-1, 1)
    table = np.exp(1j * deltas * (np.arange(m + 1) - m / 2))
    return table[:, k]


# -- single-state API ----------------------------------------------------------

@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_bits(cls, bits: str) -> StateVector:
        """``"10"`` means qubit 0 in |1>, qubit 1 in |0> (string read by position)."""
        index = sum(int(b) << q for q, b in enumerate(bits))
        return cls.basis(len(bits), index)

    @classmethod
    def product(cls, single_qubit_states: list[np.ndarray]) -> StateVector:
        """Tensor product; element 0 of the list is qubit position 0."""
        amps = np.array([1.0 + 0j])
        for s in single_qubit_states:
            amps = np.kron(np.asarray(s, dtype=complex), amps)
        return cls(len(single_qubit_states), amps)

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def check_norm(self, tol: float = NORM_TOL) -> None:
        drift = abs(self.norm - 1.0)
        if drift > tol:
            raise RuntimeError(f"state norm drifted by {drift:.3e}")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def _batch(self) -> np.ndarray:
        return self.amplitudes.reshape(1, -1)

    def _check_qubit(self, q: int) -> None:
        if not 0 <= q < self.n_qubits:
            raise ValueError(f"qubit position {q} out of range for {self.n_qubits} qubits")

    def to_bytes(self) -> bytes:
        """Little-endian index order, interleaved real/imag float64."""
        return np.asarray(self.amplitudes, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> StateVector:
        amps = np.frombuffer(data, dtype="<c16").astype(complex)
        n = int(round(np.log2(len(amps))))
        return cls(n, amps)

    def permute_qubits(self, perm: dict[int, int]) -> StateVector:
        """Move the qubit at position ``p`` to position ``perm[p]``."""
        full = [perm.get(q, q) for q in range(self.n_qubits)]
        if sorted(full) != list(range(self.n_qubits)):
            raise ValueError("not a permutation")
        t = self.amplitudes.reshape([2] * self.n_qubits)
        # numpy axis a holds position n-1-a
        axes = [0] * self.n_qubits
        for p, dest in enumerate(full):
            axes[self.n_qubits - 1 - dest] = self.n_qubits - 1 - p
        return StateVector(self.n_qubits, np.transpose(t, axes).reshape(-1).copy())


def apply_r(state: StateVector, q: int, theta: float, phi: float) -> StateVector:
    """R(theta, phi) = exp(-i theta/2 (cos phi X + sin phi Y))."""
    state._check_qubit(q)
    apply_1q_batch(state._batch(), state.n_qubits, q, r_matrix(theta, phi))
    return state


def apply_rz(state: StateVector, q: int, theta: float) -> StateVector:
    state._check_qubit(q)
    apply_1q_batch(state._batch(), state.n_qubits, q, rz_matrix(theta))
    return state


def apply_xx(state: StateVector, q1: int, q2: int, chi: float) -> StateVector:
    state._check_qubit(q1)
    state._check_qubit(q2)
    if q1 == q2:
        raise ValueError("XX needs two distinct qubits")
    apply_xx_batch(state._batch(), state.n_qubits, q1, q2, chi)
    return state


def apply_unitary(state: StateVector, qubits: tuple[int, ...], u: np.ndarray) -> StateVector:
    """Generic k-qubit unitary; ``qubits[0]`` is the least significant index bit of ``u``."""
    for q in qubits:
        state._check_qubit(q)
    if len(set(qubits)) != len(qubits):
        raise ValueError("repeated qubit")
    n = state.n_qubits
    k = len(qubits)
    t = state.amplitudes.reshape([2] * n)
    axes = [n - 1 - q for q in reversed(qubits)]  # most significant first
    t = np.moveaxis(t, axes, list(range(k)))
    shape = t.shape
    t = (u @ t.reshape(1 << k, -1)).reshape(shape)
    state.amplitudes = np.moveaxis(t, list(range(k)), axes).reshape(-1).copy()
    return state


def _check_pauli(state: StateVector, p: PauliString) -> None:
    if p.n_qubits != state.n_qubits:
        raise ValueError(f"Pauli on {p.n_qubits} qubits, state has {state.n_qubits}")


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    _check_pauli(state, p)
    apply_pauli_batch(state._batch(), state.n_qubits, p)
    return state


def apply_pauli_exp(state: StateVector, p: PauliString, theta: float) -> StateVector:
    """exp(-i theta/2 P)."""
    _check_pauli(state, p)
    if p.is_identity():
        raise ValueError("identity generator has no nontrivial exponential")
    apply_pauli_exp_batch(state._batch(), state.n_qubits, p, theta)
    return state


def apply_collective_rz(state: StateVector, delta: float, qubits: tuple[int, ...] | None = None) -> StateVector:
    mask = None if qubits is None else sum(1 << q for q in qubits)
    apply_diagonal_batch(state._batch(), collective_rz_phases(state.n_qubits, [delta], mask))
    return state


def expectation(state: StateVector, p: PauliString) -> float:
    _check_pauli(state, p)
    src, phase = _pauli_action(state.n_qubits, p)
    val = np.vdot(state.amplitudes, phase * state.amplitudes[src])
    return float(val.real)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def sample_indices(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling; ``probs`` may be (2**n,) or (batch, 2**n) with one
    draw per row when batched."""
    if probs.ndim == 1:
        cdf = np.cumsum(probs)
        cdf /= cdf[-1]
        return np.minimum(np.searchsorted(cdf, rng.random(shots), side="right"), len(probs) - 1)
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    u = rng.random(probs.shape[0])[:, None]
    return np.minimum((cdf <= u).sum(axis=1), probs.shape[1] - 1)


def indices_to_bits(indices: np.ndarray, n_qubits: int) -> np.ndarray:
    """(shots, n_qubits) uint8; column j is qubit position j."""
    indices = np.asarray(indices, dtype=np.int64)
    return ((indices[:, None] >> np.arange(n_qubits)) & 1).astype(np.uint8)


def sample_measure_all(state: StateVector, shots: int, rng_seed: int | np.random.Generator | None = None) -> np.ndarray:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return indices_to_bits(sample_indices(state.probabilities(), shots, rng), state.n_qubits)
