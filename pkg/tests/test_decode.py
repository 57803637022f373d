import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bslab import decode as D
from bslab.decode import Protocol

ZERO = np.zeros(9, dtype=np.uint8)


def flips(*qubits):
    b = ZERO.copy()
    for q in qubits:
        b[q - 1] ^= 1
    return b


def test_parity_and_stabs_examples():
    assert D.parity_and_stabs(ZERO) == (1, 1, 1)
    assert D.parity_and_stabs(flips(5)) == (-1, -1, -1)
    assert D.parity_and_stabs(np.array([1, 1, 0, 0, 0, 0, 0, 0, 0])) == (1, 1, 1)
    with pytest.raises(ValueError):
        D.parity_and_stabs(np.zeros(8))


def test_x_basis_uses_column_checks():
    # qubit 1 lies in S3's support only; qubit 2 in both S3 and S4
    assert D.parity_and_stabs(flips(1), "X") == (-1, -1, 1)
    assert D.parity_and_stabs(flips(2), "X") == (-1, -1, -1)
    assert D.parity_and_stabs(flips(1), "Z") == (-1, -1, 1)
    assert D.parity_and_stabs(flips(7), "Z") == (-1, 1, -1)


def test_decode_table():
    assert D.decode(-1, -1, -1, Protocol.CORRECTION) == 1
    for proto in D.PROTOCOLS:
        assert D.decode(1, 1, 1, proto) == 1
    assert D.decode(1, -1, 1, Protocol.DETECTION) == D.DISCARD
    assert D.decode(-1, 1, -1, Protocol.RAW) == -1
    assert D.decode(-1, 1, -1, "Correction") == 1


# odd codewords: one flip per row in Z, one per column in X
@pytest.mark.parametrize("basis,ideal_bits", [("Z", ZERO), ("Z", flips(1, 4, 7)),
                                              ("X", ZERO), ("X", flips(1, 2, 3))])
def test_correction_fixes_every_single_flip(basis, ideal_bits):
    ideal = D.decode_bits(ideal_bits, basis, "Raw")[0]
    assert D.parity_and_stabs(ideal_bits, basis)[1:] == (1, 1)
    for q in range(9):
        b = ideal_bits.copy()
        b[q] ^= 1
        assert D.decode_bits(b, basis, "Correction")[0] == ideal


def test_detection_never_wrong_on_weight_one_or_two():
    for k in (1, 2):
        for qs in itertools.combinations(range(1, 10), k):
            raw, sa, sb = D.parity_and_stabs(flips(*qs))
            out = D.decode(raw, sa, sb, Protocol.DETECTION)
            assert out in (1, D.DISCARD)
            if (sa, sb) == (1, 1):
                assert k == 2 and raw == 1  # trivial-syndrome pairs are gauge-benign


@given(st.lists(st.integers(0, 1), min_size=9, max_size=9))
def test_raw_parity_is_bit_sum(bits):
    raw, _, _ = D.parity_and_stabs(np.array(bits))
    assert raw == (-1) ** sum(bits)


def test_logical_error_rate_counts():
    bits = np.zeros((50, 9), dtype=np.uint8)
    st0 = D.logical_error_rate(bits, "Z", 1, "Raw")
    assert st0.error_rate == 0 and st0.ci95[0] == 0
    assert D.stats_from_counts("Detection", 14000, 13288, 2).error_rate == pytest.approx(1.5e-4, rel=0.01)
    assert D.stats_from_counts("Detection", 13000, 12105, 197).error_rate == pytest.approx(1.63e-2, rel=0.01)
    with pytest.raises(D.EmptySampleError):
        D.stats_from_counts("Detection", 10, 0, 0)
    with pytest.raises(ValueError):
        D.stats_from_counts("Raw", 10, 12, 0)


def test_detection_discards_and_counts_kept():
    bits = np.vstack([np.zeros((8, 9)), flips(5)[None, :], flips(1, 4, 7)[None, :]]).astype(np.uint8)
    st0 = D.logical_error_rate(bits, "Z", 1, "Detection")
    assert (st0.n_total, st0.n_kept, st0.n_error) == (10, 9, 1)


def test_wilson_coverage():
    rng = np.random.default_rng(0)
    n, p = 100, 0.05
    ks = rng.binomial(n, p, 1000)
    covered = sum(lo <= p <= hi for lo, hi in (D.wilson_interval(int(k), n) for k in ks))
    assert covered / 1000 >= 0.93


@given(st.integers(1, 500), st.data())
def test_wilson_contains_point_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = D.wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_magic_fidelity_examples():
    r = 1 / math.sqrt(2)
    assert D.magic_fidelity(r, r) == pytest.approx(1)
    assert D.magic_fidelity(0, 0) == pytest.approx(0.5)
    # symmetric corrected expectations of 0.6675 give 0.972
    assert D.magic_fidelity(0.6675, 0.6675) == pytest.approx(0.972, abs=5e-4)
    with pytest.raises(ValueError):
        D.magic_fidelity(1.2, 0)


def test_fidelity_bound_examples():
    lo, hi = D.fidelity_bound(0.0, 0.0, 1 / math.sqrt(2))
    assert lo == pytest.approx(0.5 * (1 - 1 / math.sqrt(2)), abs=1e-4)
    assert hi == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)), abs=1e-4)
    lo, hi = D.fidelity_bound(0.6, 0.8, -1 / math.sqrt(2))
    assert lo == pytest.approx(hi)


def test_fidelity_bound_range_with_known_sign():
    lo, hi = D.fidelity_bound(0.2, 1 / math.sqrt(2), -1 / math.sqrt(2), y_sign_known=True)
    assert lo == pytest.approx(0.75, abs=5e-3)
    assert hi == pytest.approx(0.99, abs=5e-3)
    # with <Y> free over [-r, r] no feasible (x, z) yields that pair
    for x in np.linspace(-1, 1, 81):
        for z in np.linspace(-1, 1, 81):
            if x * x + z * z > 1:
                continue
            lo_u, hi_u = D.fidelity_bound(float(x), float(z), -1 / math.sqrt(2))
            assert not (abs(lo_u - 0.75) < 0.01 and abs(hi_u - 0.99) < 0.01)


@given(st.floats(0, 2 * math.pi))
def test_bound_agrees_with_magic_fidelity_when_y_is_pinned(a):
    x, z = math.cos(a), math.sin(a)  # x^2 + z^2 = 1 forces <Y> = 0
    lo, hi = D.fidelity_bound(x, z, 0.0, target_x=1 / math.sqrt(2))
    assert lo == pytest.approx(hi, abs=1e-9)
    assert lo == pytest.approx(D.magic_fidelity(x, z), abs=1e-9)


def test_stab_error_budget():
    got = D.stab_error_budget(0.038, 0.069, 0.064, 0.072)
    assert got[:4] == pytest.approx((0.240, 0.304, 0.179, 0.248), abs=1e-9)
    for g, measured in zip(got[:4], (0.244, 0.298, 0.179, 0.248)):
        assert abs(g - measured) <= 0.010
    assert not got.out_of_range
    assert D.stab_error_budget(0, 0, 0, 0)[:4] == (0, 0, 0, 0)
    big = D.stab_error_budget(0, 1, 0, 0)
    assert big[:4] == (2, 2, 1, 2) and big.out_of_range
    with pytest.raises(ValueError):
        D.stab_error_budget(-0.1, 0, 0, 0)


def test_two_proportion_test_basics():
    assert D.two_proportion_test(50, 1000, 50, 1000) == pytest.approx(1.0)
    assert D.two_proportion_test(0, 100, 50, 100) < 1e-10
    with pytest.raises(D.EmptySampleError):
        D.two_proportion_test(0, 0, 1, 10)


def test_shot_reconstruction_both_readings():
    # reading the uncertainties as one standard error
    n1, n2 = D.shots_from_sigma(0.0076, 0.0022), D.shots_from_sigma(0.0020, 0.0013)
    assert (n1, n2) == (1558, 1181)
    k1, k2 = round(0.0076 * n1), round(0.0020 * n2)
    p_1sigma = D.two_proportion_test(k1, n1, k2, n2)
    assert p_1sigma == pytest.approx(0.031, abs=0.002)
    # reading them as 95% half-widths gives about 3.8x more shots
    n1, n2 = D.shots_from_sigma(0.0076, 0.0022, z=1.96), D.shots_from_sigma(0.0020, 0.0013, z=1.96)
    assert (n1, n2) == (5986, 4537)
    p_95 = D.two_proportion_test(round(0.0076 * n1), n1, round(0.0020 * n2), n2)
    assert p_95 < 0.015


def test_row_parities():
    rp = D.row_parities(np.vstack([ZERO, flips(1), flips(4, 5)]))
    assert rp.tolist() == [[1, 1, 1], [-1, 1, 1], [1, 1, 1]]
