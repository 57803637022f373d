import json
import math

import numpy as np
import pytest

from bslab import audit as AU
from bslab import circuits as C
from bslab import clifford as K
from bslab import decode as D
from bslab.pauli import PauliString


@pytest.fixture(scope="module")
def reports():
    return {name: AU.audit(circ, name=name) for name, (circ, _) in AU.canonical_circuits().items()}


def _stab_with_marker(ordering):
    """|0>_L then S3 extraction with a zero-angle marker after interaction 3."""
    enc = C.build_ft_encode("Z", "+")
    circ = C.measure(enc.then(C.build_stab_measure("S3", ordering, C.Injection("Z", 0.0, 3))), "Z")
    idx = next(i for i, op in enumerate(circ.ops) if isinstance(op, C.InjectPauli))
    return circ, idx


@pytest.mark.parametrize("ordering,residual", [("FT", "X5X7X8"), ("nFT", "X2X5X8")])
def test_ancilla_z_mid_measurement(ordering, residual):
    circ, idx = _stab_with_marker(ordering)
    res, anc = AU.propagate_fault(circ, AU.FaultLocation(idx, "gate", PauliString.single(13, 12, "Z")))
    assert res == PauliString.from_str(residual)
    cls = AU.classify_residual(res, "Z")
    assert cls is (AU.FaultClass.CORRECTABLE if ordering == "FT" else AU.FaultClass.LOGICAL)


def test_classify_examples():
    assert AU.classify_residual(PauliString.from_str("X1X2")) is AU.FaultClass.BENIGN
    assert AU.classify_residual(PauliString.from_str("X5")) is AU.FaultClass.CORRECTABLE
    assert AU.classify_residual(PauliString.from_str("X2X5X8")) is AU.FaultClass.LOGICAL
    # Z errors are invisible to a Z readout and X-type flips are invisible to an X readout
    assert AU.classify_residual(PauliString.from_str("Z1Z2Z3")) is AU.FaultClass.BENIGN
    assert AU.classify_residual(PauliString.from_str("Z1Z2Z3"), "X") is AU.FaultClass.LOGICAL


def test_canonical_verdicts(reports):
    for name, (_, expect_ft) in AU.canonical_circuits().items():
        assert reports[name].is_ft == expect_ft, name


def test_counterexamples(reports):
    nft = reports["nft_encode"]
    assert any(AU.rows_touched(r.residual) >= 2 for r in nft.logical_faults)
    first = nft.logical_faults[0]
    assert first.location.kind == "prep" and str(first.residual) == "X1X4X7"
    stab = reports["stab_S3_nFT"]
    hits = [r for r in stab.logical_faults
            if str(r.location.pauli) == "Z12" and str(r.residual) == "X2X5X8"]
    assert hits


def test_ft_circuits_leave_weight_one_reduced_residuals(reports):
    for name, (_, expect_ft) in AU.canonical_circuits().items():
        if expect_ft:
            assert max(r.reduced.weight for r in reports[name].records) <= 1, name


def test_ft_encode_faults_stay_in_one_row(reports):
    for r in reports["ft_encode_Z+"].records:
        assert AU.rows_touched(r.residual) <= 1


def test_enumeration_covers_every_site():
    circ, _ = AU.canonical_circuits()["ft_encode_Z+"]
    locs = AU.enumerate_faults(circ)
    n_xx = circ.count(C.XX)
    n_r = circ.count(C.R)
    n_prep = circ.count(C.PrepZ)
    assert len(locs) == 15 * n_xx + 3 * n_r + n_prep + len(circ.touched)
    assert {loc.kind for loc in locs} == {"gate", "meas"} | ({"prep"} if n_prep else set())


def test_report_is_deterministic_and_serialisable(reports):
    circ, _ = AU.canonical_circuits()["stab_S3_FT"]
    again = AU.audit(circ, name="stab_S3_FT")
    assert again.to_json() == reports["stab_S3_FT"].to_json()
    doc = json.loads(again.to_json())
    assert {"op_index", "pauli", "residual", "class"} <= set(doc["records"][0])
    assert doc["verdict"] == "FT"
    assert "LogicalFault=0" in again.table()


def test_verdict_stable_under_barrier_insertion(reports):
    circ, _ = AU.canonical_circuits()["ft_encode_Z+"]
    ops = []
    for op in circ.ops[:-1]:
        ops += [op, C.Barrier("pad", ())]
    padded = circ.with_ops(ops + [circ.ops[-1]])
    rep = AU.audit(padded, name="padded")
    assert rep.counts == reports["ft_encode_Z+"].counts


def test_non_clifford_rejected():
    circ = C.measure(C.build_nft_encode(0.3, 0.0), "Z")
    with pytest.raises(K.NonCliffordError):
        AU.audit(circ)
    with pytest.raises(K.NonCliffordError):
        AU.propagate_fault(circ, AU.FaultLocation(0, "prep", PauliString.single(13, 1, "X")))


def _simulated_triple(circ, insert_at, pauli):
    ops = list(circ.ops[:-1])
    if pauli is not None:
        ops.insert(insert_at + 1, C.PauliExp(pauli, math.pi))
    state = C.simulate(circ.with_ops(ops), logical_frame=True)
    probs = state.probabilities()
    support = np.nonzero(probs > 1e-12)[0]
    bits = ((support[:, None] >> np.arange(circ.n_qubits)) & 1).astype(np.uint8)
    raw, sa, sb = D.parity_and_stabs(bits, circ.measure_basis)
    return set(zip(raw.tolist(), sa.tolist(), sb.tolist())), bits


def test_symbolic_propagation_matches_state_vector():
    rng = np.random.default_rng(2024)
    canon = AU.canonical_circuits()
    names = sorted(canon)
    for _ in range(100):
        name = names[rng.integers(len(names))]
        circ, _ = canon[name]
        locs = [loc for loc in AU.enumerate_faults(circ) if loc.kind != "meas"]
        loc = locs[rng.integers(len(locs))]
        residual, anc = AU.propagate_fault(circ, loc)
        ideal, _ = _simulated_triple(circ, -1, None)
        got, bits = _simulated_triple(circ, loc.op_index, loc.pauli)
        assert len(got) == 1, (name, loc)
        (r0, a0, b0), = ideal
        mask = residual.x_mask
        fbits = np.array([[(mask >> j) & 1 for j in range(9)]], dtype=np.uint8)
        fr, fa, fb = (int(v[0]) for v in D.parity_and_stabs(fbits, circ.measure_basis))
        assert got == {(r0 * fr, a0 * fa, b0 * fb)}, (name, loc)
        for q in range(10, 14):
            if q in circ.touched:
                assert set(bits[:, q - 1].tolist()) == {int(q in anc)}, (name, loc, q)
