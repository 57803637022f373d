"""Small GF(2) helpers over integer bit-masks.

Vectors are plain Python ints (bit ``j`` is coordinate ``j``), which keeps the
18-bit symplectic vectors of the 9-qubit code cheap to hash and XOR.
"""

from __future__ import annotations

from typing import Iterable, Sequence


def reduce_basis(vectors: Iterable[int]) -> dict[int, int]:
    """Return an echelon basis keyed by pivot bit (highest set bit)."""
    basis: dict[int, int] = {}
    for v in vectors:
        v = reduce_vector(v, basis)
        if v:
            pivot = v.bit_length() - 1
            # keep the basis fully reduced so reduce_vector is a single pass
            for p, b in list(basis.items()):
                if (b >> pivot) & 1:
                    basis[p] = b ^ v
            basis[pivot] = v
    return basis


def reduce_vector(v: int, basis: dict[int, int]) -> int:
    for pivot in sorted(basis, reverse=True):
        if (v >> pivot) & 1:
            v ^= basis[pivot]
    return v


def rank(vectors: Iterable[int]) -> int:
    return len(reduce_basis(vectors))


def in_span(v: int, vectors: Sequence[int]) -> bool:
    return reduce_vector(v, reduce_basis(vectors)) == 0


def solve(target: int, vectors: Sequence[int]) -> list[int] | None:
    """Indices of ``vectors`` whose XOR equals ``target``, or None.

    Plain Gaussian elimination on the augmented system; each row carries a
    bit-set recording which input vectors were combined into it.
    """
    rows: list[tuple[int, int]] = []  # (vector, combination mask)
    for i, v in enumerate(vectors):
        combo = 1 << i
        for rv, rc in rows:
            if v & (1 << (rv.bit_length() - 1)):
                v ^= rv
                combo ^= rc
        if v:
            pivot = 1 << (v.bit_length() - 1)
            rows = [(rv ^ v, rc ^ combo) if rv & pivot else (rv, rc) for rv, rc in rows]
            rows.append((v, combo))
    used = 0
    for rv, rc in rows:
        if target & (1 << (rv.bit_length() - 1)):
            target ^= rv
            used ^= rc
    if target:
        return None
    return [i for i in range(len(vectors)) if (used >> i) & 1]


def span(vectors: Sequence[int]) -> list[int]:
    """Every element of the span (2**rank of them)."""
    elems = [0]
    for b in reduce_basis(vectors).values():
        elems += [e ^ b for e in elems]
    return elems
