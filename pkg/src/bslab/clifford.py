"""Numeric Clifford conjugation of Pauli masks through native ops.

Each op's unitary is conjugated against the local Pauli generators once and
the result is cached.  Signs are dropped: every consumer (fault propagation,
Pauli-frame sampling) only needs which bits flip.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from bslab import circuits as C

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_TOL = 1e-9


class NonCliffordError(ValueError):
    """An op does not map Paulis to Paulis."""


def _local_pauli(k: int, x: int, z: int) -> np.ndarray:
    """Unsigned local Pauli X^x Z^z; bit 0 is the first op qubit (low bit)."""
    m = np.ones((1, 1), dtype=complex)
    for j in range(k):
        f = _I
        if (x >> j) & 1 and (z >> j) & 1:
            f = _X @ _Z
        elif (x >> j) & 1:
            f = _X
        elif (z >> j) & 1:
            f = _Z
        m = np.kron(f, m)
    return m


def _identify(m: np.ndarray, k: int) -> tuple[int, int]:
    dim = 1 << k
    for x in range(dim):
        for z in range(dim):
            ov = np.trace(_local_pauli(k, x, z).conj().T @ m) / dim
            if abs(abs(ov) - 1) < _TOL:
                return x, z
    raise NonCliffordError("conjugated generator is not a Pauli")


@lru_cache(maxsize=4096)
def _table(key: tuple, u_bytes: bytes, k: int) -> tuple[tuple[int, int], ...]:
    u = np.frombuffer(u_bytes, dtype=complex).reshape(1 << k, 1 << k)
    images = []
    for j in range(k):
        images.append(_identify(u @ _local_pauli(k, 1 << j, 0) @ u.conj().T, k))
        images.append(_identify(u @ _local_pauli(k, 0, 1 << j) @ u.conj().T, k))
    return tuple(images)


def conjugation_table(op) -> tuple[tuple[int, ...], tuple[tuple[int, int], ...]] | None:
    """(labels, images) with images[2j] = U X_j U^dag, images[2j+1] = U Z_j U^dag.

    Returns None for ops with no unitary action on Paulis (prep, wait,
    barrier, measurement).  Raises NonCliffordError otherwise-unsupported ops.
    """
    if isinstance(op, C.PauliExp):
        raise TypeError("PauliExp is handled by propagate_masks directly")
    got = C.op_unitary(op)
    if got is None:
        return None
    labels, u = got
    u = np.ascontiguousarray(u, dtype=complex)
    key = (type(op).__name__, u.tobytes())
    return labels, _table(key, u.tobytes(), len(labels))


def is_clifford(op) -> bool:
    try:
        if isinstance(op, C.PauliExp):
            r = (op.theta / (math.pi / 2)) % 1.0
            return min(r, 1 - r) < 1e-9
        conjugation_table(op)
        return True
    except NonCliffordError:
        return False


def propagate_masks(op, x: int, z: int) -> tuple[int, int]:
    """Conjugate the unsigned Pauli (x, z) over labels (bit = label-1) through op."""
    if isinstance(op, C.PauliExp):
        q = (op.theta / (math.pi / 2))
        r = q % 2.0
        if min(r % 1.0, 1 - r % 1.0) > 1e-9:
            raise NonCliffordError(f"PauliExp at theta={op.theta} is not Clifford")
        odd = round(q) % 2 == 1
        px, pz = op.pauli.x_mask, op.pauli.z_mask
        anti = (bin(x & pz).count("1") + bin(z & px).count("1")) & 1
        if odd and anti:
            return x ^ px, z ^ pz
        return x, z
    tab = conjugation_table(op)
    if tab is None:
        return x, z
    labels, images = tab
    nx, nz = x, z
    for q in labels:
        b = 1 << (q - 1)
        nx &= ~b
        nz &= ~b
    for j, q in enumerate(labels):
        b = 1 << (q - 1)
        for present, (ix, iz) in (((x & b), images[2 * j]), ((z & b), images[2 * j + 1])):
            if not present:
                continue
            for i, ql in enumerate(labels):
                if (ix >> i) & 1:
                    nx ^= 1 << (ql - 1)
                if (iz >> i) & 1:
                    nz ^= 1 << (ql - 1)
    return nx, nz


def propagate(ops, start: int, x: int, z: int) -> tuple[int, int]:
    """Push (x, z) through ops[start:]."""
    for op in ops[start:]:
        x, z = propagate_masks(op, x, z)
    return x, z


def suffix_maps(ops, n_qubits: int) -> list[list[tuple[int, int]]]:
    """maps[i][2j], maps[i][2j+1]: images of X and Z on label j+1 through ops[i:].

    Built by one backward sweep; a fault after op i propagates with
    ``apply_map(maps[i + 1], x, z)``.
    """
    ident = []
    for j in range(n_qubits):
        ident += [(1 << j, 0), (0, 1 << j)]
    maps: list[list[tuple[int, int]]] = [None] * (len(ops) + 1)  # type: ignore[list-item]
    maps[len(ops)] = ident
    for i in range(len(ops) - 1, -1, -1):
        nxt = maps[i + 1]
        op = ops[i]
        cur = nxt
        qs = getattr(op, "qubits", ())
        if qs and not isinstance(op, (C.PrepZ, C.Barrier)):
            cur = list(nxt)
            for q in qs:
                for k, (gx, gz) in enumerate(((1 << (q - 1), 0), (0, 1 << (q - 1)))):
                    cx, cz = propagate_masks(op, gx, gz)
                    cur[2 * (q - 1) + k] = apply_map(nxt, cx, cz)
        maps[i] = cur
    return maps


def apply_map(m: list[tuple[int, int]], x: int, z: int) -> tuple[int, int]:
    rx = rz = 0
    j = 0
    while x or z:
        if x & 1:
            ix, iz = m[2 * j]
            rx ^= ix
            rz ^= iz
        if z & 1:
            ix, iz = m[2 * j + 1]
            rx ^= ix
            rz ^= iz
        x >>= 1
        z >>= 1
        j += 1
    return rx, rz
