import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bslab import statevector as sv
from bslab.pauli import PauliString

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return sv.StateVector(n, a / np.linalg.norm(a))


def z(n, q):
    return PauliString.single(n, q, "Z")


def test_r_examples():
    s = sv.apply_r(sv.StateVector.zero(1), 0, math.pi, 0.0)
    assert np.allclose(s.amplitudes, [0, -1j])
    s = sv.apply_r(sv.StateVector.zero(1), 0, math.pi / 2, math.pi / 2)
    assert np.allclose(s.amplitudes, np.array([1, 1]) / math.sqrt(2))
    s = sv.apply_r(sv.StateVector.zero(1), 0, math.pi / 4, math.pi / 2)
    assert sv.expectation(s, z(1, 1)) == pytest.approx(math.cos(math.pi / 4), abs=1e-12)


def test_rz_examples():
    plus = sv.StateVector(1, np.array([1, 1]) / math.sqrt(2))
    minus = sv.StateVector(1, np.array([1, -1]) / math.sqrt(2))
    assert sv.fidelity(sv.apply_rz(plus.copy(), 0, math.pi), minus) == pytest.approx(1)
    assert sv.fidelity(sv.apply_rz(sv.StateVector.zero(1), 0, 1.234), sv.StateVector.zero(1)) == pytest.approx(1)


def test_ramsey_identity():
    s = sv.StateVector.zero(1)
    sv.apply_r(s, 0, math.pi / 2, math.pi / 2)
    sv.apply_rz(s, 0, math.pi / 3)
    sv.apply_r(s, 0, -math.pi / 2, math.pi / 2)
    assert s.probabilities()[1] == pytest.approx(0.25, abs=1e-12)


def test_xx_examples():
    s = sv.apply_xx(sv.StateVector.zero(2), 0, 1, math.pi / 4)
    assert np.allclose(s.amplitudes, np.array([1, 0, 0, -1j]) / math.sqrt(2))
    assert np.allclose(sv.apply_xx(sv.StateVector.zero(2), 0, 1, 0.0).amplitudes, [1, 0, 0, 0])
    a = sv.apply_xx(sv.apply_xx(random_state(3, 1), 0, 2, math.pi / 8), 0, 2, math.pi / 8)
    b = sv.apply_xx(random_state(3, 1), 0, 2, math.pi / 4)
    assert np.allclose(a.amplitudes, b.amplitudes)
    with pytest.raises(ValueError):
        sv.apply_xx(sv.StateVector.zero(2), 1, 1, 0.3)


def test_pauli_exp_examples():
    s = random_state(2, 2)
    assert np.allclose(sv.apply_pauli_exp(s.copy(), PauliString.from_str("X1Y2", 2), 0.0).amplitudes, s.amplitudes)
    a = sv.apply_pauli_exp(sv.StateVector.zero(1), PauliString.from_str("Y1", 1), math.pi / 2)
    b = sv.apply_r(sv.StateVector.zero(1), 0, math.pi / 2, math.pi / 2)
    assert np.allclose(a.amplitudes, b.amplitudes)


@settings(max_examples=40, deadline=None)
@given(angles, st.integers(0, 2**32 - 1))
def test_pauli_exp_matches_dense_exponential(theta, seed):
    from scipy.linalg import expm
    p = PauliString.from_str("Y1Z2X3", 3)
    s = random_state(3, seed)
    mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
            "Z": np.diag([1, -1])}
    m = np.ones((1, 1))
    for q in (3, 2, 1):  # kron puts the first factor on the highest bit
        m = np.kron(m, mats[p.axis(q)])
    expect = expm(-0.5j * theta * m) @ s.amplitudes
    assert np.allclose(sv.apply_pauli_exp(s.copy(), p, theta).amplitudes, expect, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(angles, angles, angles, st.integers(0, 2**32 - 1))
def test_gates_preserve_norm(theta, phi, chi, seed):
    s = random_state(4, seed)
    sv.apply_r(s, 1, theta, phi)
    sv.apply_xx(s, 0, 3, chi)
    sv.apply_rz(s, 2, theta)
    sv.apply_pauli_exp(s, PauliString.from_str("X1Z3Y4", 4), phi)
    sv.apply_collective_rz(s, chi)
    s.check_norm()


def test_norm_check_raises():
    s = sv.StateVector(1, np.array([1.0, 1.0]))
    with pytest.raises(RuntimeError):
        s.check_norm()


def test_expectation_and_fidelity_basics():
    zero, one = sv.StateVector.basis(1, 0), sv.StateVector.basis(1, 1)
    plus = sv.StateVector(1, np.array([1, 1]) / math.sqrt(2))
    assert sv.fidelity(zero, zero) == pytest.approx(1)
    assert sv.fidelity(zero, one) == pytest.approx(0)
    assert sv.fidelity(plus, zero) == pytest.approx(0.5)
    assert sv.expectation(one, z(1, 1)) == pytest.approx(-1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expectation_bounded(seed):
    s = random_state(3, seed)
    for text in ("X1", "Y2Z3", "X1X2X3"):
        assert -1 - 1e-12 <= sv.expectation(s, PauliString.from_str(text, 3)) <= 1 + 1e-12


def test_sampling():
    bits = sv.sample_measure_all(sv.StateVector.zero(3), 50, 7)
    assert bits.shape == (50, 3) and not bits.any()
    bell = sv.StateVector(2, np.array([1, 0, 0, 1]) / math.sqrt(2))
    bits = sv.sample_measure_all(bell, 100_000, 11)
    assert np.all(bits[:, 0] == bits[:, 1])
    frac = float((bits.sum(axis=1) == 0).mean())
    assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / 100_000)


def test_sampling_is_seeded():
    s = random_state(4, 3)
    assert np.array_equal(sv.sample_measure_all(s, 500, 5), sv.sample_measure_all(s, 500, 5))


def test_permute_qubits_moves_excitation():
    s = sv.StateVector.from_bits("100")
    t = s.permute_qubits({0: 2, 2: 0})
    assert t.probabilities()[0b100] == pytest.approx(1)


def test_bytes_roundtrip():
    s = random_state(3, 9)
    assert np.array_equal(sv.StateVector.from_bytes(s.to_bytes()).amplitudes, s.amplitudes)


def test_size_limits():
    with pytest.raises(ValueError):
        sv.StateVector.zero(sv.MAX_QUBITS + 1)
    with pytest.raises(ValueError):
        sv.apply_r(sv.StateVector.zero(2), 2, 0.1, 0.0)
