import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from bslab import circuits as C
from bslab import decode as D
from bslab import noise as N
from bslab import statevector as sv
from bslab.pauli import PauliString


def binom_sigma(p, n):
    return math.sqrt(max(p * (1 - p), 1e-12) / n)


# -- fidelity -> angle map -----------------------------------------------------------------

def _overlap_2q(eps):
    a = sv.apply_xx(sv.StateVector.zero(2), 0, 1, math.pi / 4)
    b = sv.apply_xx(sv.StateVector.zero(2), 0, 1, math.pi / 4 + eps)
    return sv.fidelity(a, b)


def _overlap_1q(eps):
    a = sv.apply_r(sv.StateVector.zero(1), 0, math.pi / 2, 0.0)
    b = sv.apply_r(sv.StateVector.zero(1), 0, math.pi / 2 + eps, 0.0)
    return sv.fidelity(a, b)


def test_overrotation_matches_brute_force_overlap():
    eps = N.overrotation_from_fidelity(0.989, "2q")
    oracle = brentq(lambda e: _overlap_2q(e) - 0.989, 0.0, 1.0)
    assert eps == pytest.approx(oracle, abs=1e-9)
    assert eps == pytest.approx(0.105, abs=1e-3)
    eps1 = N.overrotation_from_fidelity(1 - 1.8e-4, "1q")
    assert eps1 == pytest.approx(brentq(lambda e: _overlap_1q(e) - (1 - 1.8e-4), 0.0, 1.0), abs=1e-9)
    with pytest.raises(ValueError):
        N.overrotation_from_fidelity(0.0)


def test_perturb_gate():
    cfg = N.NoiseConfig(eps_1q=0.01, eps_2q=0.02)
    assert N.perturb_gate(C.R(1, 0.5, 0.2), cfg) == C.R(1, 0.51, 0.2)
    assert N.perturb_gate(C.XX(1, 2, 0.5), cfg) == C.XX(1, 2, 0.52)
    assert N.perturb_gate(C.RZ(1, 0.5), cfg) == C.RZ(1, 0.5)
    circ = C.build_ft_encode()
    assert N.perturb_circuit(circ, N.NoiseConfig()) == circ


def test_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        N.NoiseConfig(p_dark_flip=1.5)
    with pytest.raises(ValueError):
        N.NoiseConfig(eps_2q=math.inf)
    with pytest.raises(ValueError):
        N.NoiseConfig(t2_star=0.0)
    with pytest.raises(ValueError):
        N.NoiseConfig.from_dict({"eps_3q": 0.1})
    cfg = N.NoiseConfig.hardware_like(seed=4)
    assert N.NoiseConfig.from_dict(cfg.to_dict()) == cfg
    assert N.NoiseConfig().is_noiseless and not cfg.is_noiseless


# -- SPAM --------------------------------------------------------------------------------

def test_spam_bright_flip_rate():
    cfg = N.NoiseConfig.hardware_like()
    n = 1_000_000
    out = N.sample_spam(np.ones(n, dtype=np.uint8), cfg, np.random.default_rng(1))
    rate = 1 - out.mean()
    assert abs(rate - 0.0071) < 3 * binom_sigma(0.0071, n)
    out0 = N.sample_spam(np.zeros(n, dtype=np.uint8), cfg, np.random.default_rng(2))
    assert (out0.mean() + rate) / 2 == pytest.approx(0.00465, abs=3e-4)


def test_spam_disabled_is_identity():
    bits = np.random.default_rng(0).integers(0, 2, (100, 9)).astype(np.uint8)
    assert np.array_equal(N.sample_spam(bits, N.NoiseConfig(), np.random.default_rng(0)), bits)


# -- dephasing ---------------------------------------------------------------------------

def test_calibrate_delta_z():
    assert N.calibrate_delta_z(0.0, 0.61) == 0.0
    d = N.calibrate_delta_z(0.61, 0.61)
    draws = np.random.default_rng(3).normal(0, d, 1_000_000)
    assert abs(np.cos(draws).mean() - math.exp(-1)) < 3 * np.cos(draws).std() / 1000
    with pytest.raises(ValueError):
        N.calibrate_delta_z(-1, 0.61)


def test_collective_dephasing_on_zero_state_is_a_phase():
    cfg = N.NoiseConfig(t2_star=0.61)
    s = sv.StateVector.zero(9)
    N.apply_collective_dephasing(s, 0.3, cfg, np.random.default_rng(0))
    assert sv.fidelity(s, sv.StateVector.zero(9)) == pytest.approx(1)


def test_ghz_row_contrast_decays_nine_times_faster():
    cfg = N.NoiseConfig(t2_star=0.61)
    t = 0.02
    rng = np.random.default_rng(5)
    ghz = sv.StateVector(3, np.eye(8)[0] / math.sqrt(2) + np.eye(8)[7] / math.sqrt(2))
    xxx = PauliString.from_str("X1X2X3", 3)
    vals = []
    for _ in range(4000):
        s = ghz.copy()
        N.apply_collective_dephasing(s, t, cfg, rng, qubits=(0, 1, 2))
        vals.append(sv.expectation(s, xxx))
    vals = np.array(vals)
    assert abs(vals.mean() - math.exp(-9 * t / 0.61)) < 3 * vals.std() / math.sqrt(len(vals))


def _ramsey(t):
    ops = (C.R(1, math.pi / 2, math.pi / 2), C.Wait(t), C.R(1, -math.pi / 2, math.pi / 2), C.MeasureAll("Z"))
    return C.Circuit(13, ops)


@pytest.mark.parametrize("frac", [0.1, 0.5, 1.0])
def test_single_qubit_ramsey_calibration(frac):
    t2 = 0.61
    n = 100_000
    rec = N.run_circuit(_ramsey(frac * t2), N.NoiseConfig(t2_star=t2, flag_filter=False), n, key=(7,))
    contrast = 1 - 2 * rec.qubit(1).mean()
    sigma = 2 * binom_sigma((1 - contrast) / 2, n)
    assert abs(contrast - math.exp(-frac)) < 3 * sigma + 1e-4  # gates add 20 us of wall clock


# -- GHZ depolarisation ------------------------------------------------------------------

def test_ghz_depolarize_limits():
    s = sv.StateVector.zero(9)
    assert N.ghz_depolarize(s, 0.0, np.random.default_rng(0)) == (False, False, False)
    rng = np.random.default_rng(1)
    flips = np.array([N.ghz_depolarize(sv.StateVector.zero(9), 1.0, rng) for _ in range(4000)])
    # each row flips with probability 1/2, so contrast (1 - 2 * 0.5) = 0
    assert abs(1 - 2 * flips.mean()) < 0.05
    with pytest.raises(ValueError):
        N.ghz_depolarize(s, 1.2, rng)


def _fringe_point(cfg, shots, key):
    enc = C.build_ft_encode("X", "+")
    ro, _ = C.build_transversal_yl(-math.pi / 2)
    rec = N.run_circuit(C.measure(enc.then(ro), "Z"), cfg, shots, key=key)
    return D.decode_bits(rec.bits, "Z", "Raw").mean()


def test_ghz_depol_raw_amplitude_scaling():
    p, n = 0.2, 20_000
    got = _fringe_point(N.NoiseConfig(ghz_depol_p=p), n, (1,))
    want = (1 - p) ** 3
    assert abs(got - want) < 3 * math.sqrt((1 - want**2) / n)


# -- flag filter -------------------------------------------------------------------------

def test_flag_filter_identity_without_flags():
    circ = C.Circuit(9, (C.MeasureAll("Z"),))
    bits = np.ones((10, 9), dtype=np.uint8)
    res = N.flag_filter(bits, circ)
    assert res.n_discarded == 0 and res.bits.shape == (10, 9)


def test_flag_filter_discards_forced_flags():
    circ = C.measure(C.build_ft_encode(), "Z")
    n = 20_000
    rng = np.random.default_rng(0)
    bits = np.zeros((n, 13), dtype=np.uint8)
    bits[rng.random(n) < 0.03, 11] = 1
    res = N.flag_filter(bits, circ)
    assert abs(res.discarded_fraction - 0.03) < 3 * binom_sigma(0.03, n)


def test_hardware_noise_discards_under_four_percent():
    circ = C.measure(C.build_ft_encode(), "Z")
    rec = N.run_circuit(circ, N.NoiseConfig.hardware_like(seed=2), 4000, key=(1,)).filtered()
    assert rec.n_discarded / (len(rec) + rec.n_discarded) < 0.04


# -- executor ----------------------------------------------------------------------------

def test_same_seed_same_bits_and_keys_separate_streams():
    circ = C.measure(C.build_nft_encode(0.4, 0.3), "Z")
    cfg = N.NoiseConfig.hardware_like(seed=9)
    a = N.run_circuit(circ, cfg, 600, key=(1, 2))
    b = N.run_circuit(circ, cfg, 600, key=(1, 2))
    c = N.run_circuit(circ, cfg, 600, key=(1, 3))
    assert np.array_equal(a.bits, b.bits)
    assert not np.array_equal(a.bits, c.bits)


def test_chunking_does_not_depend_on_total_shots():
    circ = C.measure(C.build_ft_encode(), "Z")
    cfg = N.NoiseConfig(p_pauli=0.02, seed=1)
    a = N.run_circuit(circ, cfg, 5000, key=(2,))
    b = N.run_circuit(circ, cfg, 9000, key=(2,))
    # every complete chunk is a pure function of (seed, key, chunk index)
    assert np.array_equal(a.bits[:N.CHUNK_SHOTS], b.bits[:N.CHUNK_SHOTS])


def test_noiseless_execution_matches_exact_probabilities():
    circ = C.build_nft_encode(1.1, 0.4)
    probs = C.data_state(C.simulate(circ, logical_frame=False)).probabilities()
    rec = N.run_circuit(C.measure(circ, "Z"), N.NoiseConfig(), 50_000, key=(3,))
    idx = (rec.data.astype(np.int64) << np.arange(9)).sum(axis=1)
    freq = np.bincount(idx, minlength=512) / len(idx)
    assert freq[probs < 1e-12].sum() == 0
    # 128 outcomes at 50k draws give total variation ~0.019; theta off by 0.1 gives ~0.044
    assert 0.5 * np.abs(freq - probs).sum() < 0.025


def test_coherent_error_matches_perturbed_simulation():
    cfg = N.NoiseConfig(eps_2q=0.1, eps_1q=0.02)
    circ = C.build_ft_encode()
    probs = C.data_state(C.simulate(N.perturb_circuit(circ, cfg), logical_frame=False)).probabilities()
    rec = N.run_circuit(C.measure(circ, "Z"), cfg, 40_000, key=(4,))
    idx = (rec.data.astype(np.int64) << np.arange(9)).sum(axis=1)
    p_even = probs[[i for i in range(512) if bin(i).count("1") % 2 == 0]].sum()
    got = float((np.array([bin(i).count("1") % 2 for i in idx]) == 0).mean())
    assert abs(got - p_even) < 4 * binom_sigma(p_even, 40_000)


@settings(max_examples=5, deadline=None)
@given(st.floats(0.005, 0.05))
def test_frame_and_trajectory_paths_agree(p):
    circ = C.measure(C.build_ft_encode(), "Z")
    cfg = N.NoiseConfig(p_pauli=p, seed=5)
    n = 8000
    a = N.run_circuit(circ, cfg, n, key=(1,), frame=True)
    b = N.run_circuit(circ, cfg, n, key=(2,), frame=False)
    ra = (D.decode_bits(a.bits, "Z", "Raw") == -1).mean()
    rb = (D.decode_bits(b.bits, "Z", "Raw") == -1).mean()
    assert abs(ra - rb) < 4 * math.sqrt(2) * binom_sigma(max(ra, rb), n) + 1e-3


def test_shot_context_is_reproducible():
    a = N.ShotContext.for_chunk(3, (1, 2), 0).rng.random(5)
    b = N.ShotContext.for_chunk(3, (1, 2), 0).rng.random(5)
    c = N.ShotContext.for_chunk(3, (1, 2), 1).rng.random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_run_circuit_rejects_unmeasured():
    with pytest.raises(ValueError):
        N.run_circuit(C.build_ft_encode(), N.NoiseConfig(), 10)
    with pytest.raises(ValueError):
        N.run_circuit(C.measure(C.build_ft_encode()), N.NoiseConfig(), 0)
