"""Shot decoding (raw / correction / detection) and the statistics built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy import stats

from bslab.pauli import BACON_SHOR, N_DATA, CodeSpec


class Protocol(str, Enum):
    RAW = "Raw"
    CORRECTION = "Correction"
    DETECTION = "Detection"


PROTOCOLS = (Protocol.RAW, Protocol.CORRECTION, Protocol.DETECTION)
DISCARD = 0


class EmptySampleError(ValueError):
    """No shots left to estimate from."""


def _support_mask(labels) -> np.ndarray:
    m = np.zeros(N_DATA, dtype=bool)
    m[[q - 1 for q in labels]] = True
    return m


def _checks(basis: str, code: CodeSpec) -> tuple[np.ndarray, np.ndarray]:
    if basis == "Z":
        a, b = code.stabilizer("S1"), code.stabilizer("S2")
    elif basis == "X":
        a, b = code.stabilizer("S3"), code.stabilizer("S4")
    else:
        raise ValueError(f"basis must be Z or X, got {basis!r}")
    return _support_mask(a.support), _support_mask(b.support)


def parity_and_stabs(bits, basis: str = "Z", code: CodeSpec = BACON_SHOR):
    """(raw parity, sA, sB) as +-1 values from the nine data bits.

    Accepts one shot (length >= 9) or a (shots, >= 9) array; extra columns
    (ancillas) are ignored.
    """
    arr = np.asarray(bits)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] < N_DATA:
        raise ValueError(f"need {N_DATA} data bits, got {arr.shape[1]}")
    d = arr[:, :N_DATA].astype(np.int64)
    ma, mb = _checks(basis, code)
    sign = lambda v: 1 - 2 * (v & 1)  # noqa: E731
    raw = sign(d.sum(axis=1))
    sa = sign(d[:, ma].sum(axis=1))
    sb = sign(d[:, mb].sum(axis=1))
    if single:
        return int(raw[0]), int(sa[0]), int(sb[0])
    return raw, sa, sb


def decode(raw, sa, sb, protocol: Protocol | str):
    """Apply the protocol table; Detection returns 0 (DISCARD) for rejected shots."""
    protocol = Protocol(protocol)
    raw, sa, sb = (np.asarray(v) for v in (raw, sa, sb))
    bad = (sa == -1) | (sb == -1)
    if protocol is Protocol.RAW:
        out = raw
    elif protocol is Protocol.CORRECTION:
        out = np.where(bad, -raw, raw)
    else:
        out = np.where(bad, DISCARD, raw)
    return int(out) if out.ndim == 0 else out


def decode_bits(bits, basis: str, protocol: Protocol | str, code: CodeSpec = BACON_SHOR) -> np.ndarray:
    return decode(*parity_and_stabs(np.atleast_2d(bits), basis, code), protocol)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise EmptySampleError("no trials")
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class ProcessedStats:
    protocol: Protocol
    n_total: int
    n_kept: int
    n_error: int

    def __post_init__(self):
        if not 0 <= self.n_error <= self.n_kept <= self.n_total:
            raise ValueError("need 0 <= n_error <= n_kept <= n_total")

    @property
    def error_rate(self) -> float:
        return self.n_error / self.n_kept

    @property
    def ci95(self) -> tuple[float, float]:
        return wilson_interval(self.n_error, self.n_kept)

    @property
    def expectation(self) -> float:
        """Mean decoded value relative to the ideal: 1 - 2 * error_rate."""
        return 1 - 2 * self.error_rate

    def row(self) -> dict:
        lo, hi = self.ci95
        return {"protocol": self.protocol.value, "n_total": self.n_total, "n_kept": self.n_kept,
                "n_error": self.n_error, "rate": self.error_rate, "ci_lo": lo, "ci_hi": hi}


def logical_error_rate(bits, basis: str, ideal: int, protocol: Protocol | str,
                       code: CodeSpec = BACON_SHOR) -> ProcessedStats:
    protocol = Protocol(protocol)
    if ideal not in (1, -1):
        raise ValueError("ideal must be +1 or -1")
    out = decode_bits(bits, basis, protocol, code)
    kept = out != DISCARD
    n_kept = int(kept.sum())
    if n_kept == 0:
        raise EmptySampleError("every shot was discarded")
    return ProcessedStats(protocol, len(out), n_kept, int((out[kept] != ideal).sum()))


def stats_from_counts(protocol: Protocol | str, n_total: int, n_kept: int, n_error: int) -> ProcessedStats:
    if n_kept == 0:
        raise EmptySampleError("every shot was discarded")
    return ProcessedStats(Protocol(protocol), n_total, n_kept, n_error)


# -- magic-state fidelity ---------------------------------------------------------------

def magic_fidelity(exp_x: float, exp_z: float) -> float:
    """Overlap of a state with Bloch (x, ., z) and the target (1/sqrt2, 0, 1/sqrt2)."""
    if abs(exp_x) > 1 or abs(exp_z) > 1:
        raise ValueError("expectation values must lie in [-1, 1]")
    return 0.5 * (1 + (exp_x + exp_z) / math.sqrt(2))


def fidelity_bound(exp_x: float, exp_z: float, target_y: float, target_x: float = 0.0,
                   target_z: float | None = None, y_sign_known: bool = False) -> tuple[float, float]:
    """Range of F = (1 + t . r) / 2 when <Y> is unmeasured.

    <Y> ranges over [-r, r] with r = sqrt(1 - x^2 - z^2).  With
    ``y_sign_known`` it is restricted to [0, r] (the unmeasured component is
    assumed to share the target's sign).  ``target_z`` defaults to the value
    completing a unit Bloch vector.
    """
    rr = 1 - exp_x ** 2 - exp_z ** 2
    if rr < -1e-12:
        raise ValueError("infeasible expectations: x^2 + z^2 > 1")
    r = math.sqrt(max(rr, 0.0))
    if target_z is None:
        tz2 = 1 - target_x ** 2 - target_y ** 2
        if tz2 < -1e-12:
            raise ValueError("target is not a unit Bloch vector")
        target_z = math.sqrt(max(tz2, 0.0))
    fixed = target_x * exp_x + target_z * exp_z
    ys = (0.0, math.copysign(r, target_y)) if y_sign_known else (-r, r)
    ends = [fixed + target_y * y for y in ys]
    return 0.5 * (1 + min(ends)), 0.5 * (1 + max(ends))


# -- stabilizer error budget -------------------------------------------------------------

class StabBudget(NamedTuple):
    eps_s1: float
    eps_s2: float
    eps_s3: float
    eps_s4: float
    out_of_range: bool


def stab_error_budget(eps_enc: float, eps_x: float, eps_z: float, eps_t2: float) -> StabBudget:
    """Per-ancilla error from encoding, X-type, Z-type and dephasing contributions."""
    for v in (eps_enc, eps_x, eps_z, eps_t2):
        if not 0 <= v <= 1:
            raise ValueError("inputs must be probabilities")
    s1 = eps_enc + 2 * eps_x + eps_z
    s2 = eps_enc + 2 * eps_x + 2 * eps_z
    s3 = eps_enc + eps_t2 + eps_x
    s4 = eps_enc + eps_t2 + 2 * eps_x
    return StabBudget(s1, s2, s3, s4, any(v > 1 for v in (s1, s2, s3, s4)))


# -- significance --------------------------------------------------------------------------

def two_proportion_test(k1: int, n1: int, k2: int, n2: int) -> float:
    """Two-sided Fisher exact p-value for k1/n1 vs k2/n2."""
    if n1 <= 0 or n2 <= 0:
        raise EmptySampleError("both samples need at least one trial")
    if not (0 <= k1 <= n1 and 0 <= k2 <= n2):
        raise ValueError("need 0 <= k <= n")
    return float(stats.fisher_exact([[k1, n1 - k1], [k2, n2 - k2]], alternative="two-sided").pvalue)


def shots_from_sigma(rate: float, uncertainty: float, z: float = 1.0) -> int:
    """Shot count whose binomial half-width z * sigma at ``rate`` equals ``uncertainty``.

    z = 1 reads an uncertainty as one standard error; z = 1.96 reads it
    as the half-width of a 95% interval.
    """
    if not (0 < rate < 1 and uncertainty > 0 and z > 0):
        raise ValueError("need 0 < rate < 1, uncertainty > 0, z > 0")
    return round(rate * (1 - rate) / (uncertainty / z) ** 2)


# -- per-row views ------------------------------------------------------------------------

def row_parities(bits, code: CodeSpec = BACON_SHOR) -> np.ndarray:
    """(shots, 3) array of +-1 parities for each grid row."""
    d = np.atleast_2d(np.asarray(bits))[:, :N_DATA].astype(np.int64)
    return np.stack([1 - 2 * (d[:, [q - 1 for q in row]].sum(axis=1) & 1) for row in code.rows], axis=1)
