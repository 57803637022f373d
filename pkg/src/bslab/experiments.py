"""Seeded Monte Carlo experiments, one runner per experiment id.

Every runner returns an :class:`ExperimentResult` holding plot-ready rows,
a JSON summary, fit results and (for the audit) certificates.  RNG streams
are keyed by (experiment, condition), so adding shots to one condition never
perturbs another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from bslab import __version__
from bslab import audit as AU
from bslab import circuits as C
from bslab import decode as D
from bslab import fits as F
from bslab.config import EXPERIMENTS, ExperimentConfig
from bslab.noise import NoiseConfig, ShotRecord, run_circuit
from bslab.pauli import PauliString, syndrome

HALF_PI = math.pi / 2
NFT_ANGLES = {"0": (0.0, 0.0), "1": (math.pi, 0.0), "+": (HALF_PI, HALF_PI), "-": (-HALF_PI, HALF_PI)}
MAGIC_ANGLES = {"Hx": (math.pi / 4, HALF_PI), "Hy": (math.pi / 4, 0.0)}
MAGIC_TARGET_Y = {"Hx": 0.0, "Hy": -1 / math.sqrt(2)}


@dataclass
class Row:
    series: str
    x: float | str | None = None
    protocol: str = ""
    n_total: int | None = None
    n_kept: int | None = None
    n_error: int | None = None
    rate: float | None = None
    ci_lo: float | None = None
    ci_hi: float | None = None
    y: float | None = None
    y_lo: float | None = None
    y_hi: float | None = None


CSV_COLUMNS = tuple(f.name for f in fields(Row))


@dataclass
class ExperimentResult:
    experiment: str
    config: ExperimentConfig
    rows: list[Row] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    fits: dict[str, dict] = field(default_factory=dict)
    audits: list[AU.AuditReport] = field(default_factory=list)
    nonconverged: list[str] = field(default_factory=list)
    unexpected_logical: list[str] = field(default_factory=list)

    @property
    def provenance(self) -> dict:
        return {"config_hash": self.config.config_hash, "seed": self.config.seed,
                "version": __version__, "shots": self.config.shots}

    def add_fit(self, name: str, fit: F.FitResult) -> F.FitResult:
        self.fits[name] = fit.to_dict()
        if not fit.converged:
            self.nonconverged.append(name)
        return fit

    def series(self, name: str, protocol: str | None = None) -> list[Row]:
        return [r for r in self.rows if r.series == name and (protocol is None or r.protocol == protocol)]


# -- shared helpers ------------------------------------------------------------------------

def _key(cfg: ExperimentConfig, *idx: int) -> tuple[int, ...]:
    return (EXPERIMENTS.index(cfg.experiment),) + tuple(idx)


def _run(cfg: ExperimentConfig, circuit: C.Circuit, key: tuple[int, ...],
         noise: NoiseConfig | None = None) -> ShotRecord:
    noise = cfg.noise if noise is None else noise
    rec = run_circuit(circuit, noise, cfg.shots, key=key)
    return rec.filtered() if noise.flag_filter else rec


def _signed_counts(rec: ShotRecord, basis: str, protocol: D.Protocol) -> tuple[int, int]:
    """(# kept shots decoding to +1, # kept shots)."""
    out = D.decode_bits(rec.bits, basis, protocol)
    kept = out != D.DISCARD
    return int((out[kept] == 1).sum()), int(kept.sum())


def _expectation(k_plus: int, n: int) -> tuple[float, float, float]:
    """Mean of +-1 outcomes with a Wilson-derived 95% interval."""
    lo, hi = D.wilson_interval(k_plus, n)
    return 2 * k_plus / n - 1, 2 * lo - 1, 2 * hi - 1


def _rate_rows(series: str, x, rec: ShotRecord, basis: str, ideal: int) -> tuple[list[Row], dict]:
    rows, out = [], {}
    for proto in D.PROTOCOLS:
        try:
            st = D.logical_error_rate(rec.bits, basis, ideal, proto)
        except D.EmptySampleError:
            rows.append(Row(series, x, proto.value, len(rec) + rec.n_discarded, 0, 0))
            continue
        lo, hi = st.ci95
        y = ideal * st.expectation
        ylo, yhi = sorted((ideal * (1 - 2 * lo), ideal * (1 - 2 * hi)))
        rows.append(Row(series, x, proto.value, st.n_total + rec.n_discarded, st.n_kept, st.n_error,
                        st.error_rate, lo, hi, y, ylo, yhi))
        out[proto.value] = st
    return rows, out


def _expectation_rows(series: str, x, rec: ShotRecord, basis: str) -> tuple[list[Row], dict]:
    rows, out = [], {}
    for proto in D.PROTOCOLS:
        k, n = _signed_counts(rec, basis, proto)
        if n == 0:
            rows.append(Row(series, x, proto.value, len(rec) + rec.n_discarded, 0))
            continue
        y, lo, hi = _expectation(k, n)
        rows.append(Row(series, x, proto.value, len(rec) + rec.n_discarded, n, None, None, None, None, y, lo, hi))
        out[proto.value] = (k, n, y, lo, hi)
    return rows, out


def _sigma_from_ci(lo: float, hi: float, floor: float = 1e-3) -> float:
    return max((hi - lo) / (2 * 1.959963984540054), floor)


# -- runners --------------------------------------------------------------------------------

def run_state_prep(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    p = cfg.params
    for pi, prep in enumerate(p["preparations"]):
        for si, st in enumerate(p["states"]):
            basis = "Z" if st in "01" else "X"
            sign = "+" if st in "0+" else "-"
            ideal = 1 if sign == "+" else -1
            if prep == "FT":
                enc = C.build_ft_encode(basis, sign)
            else:
                enc = C.build_nft_encode(*NFT_ANGLES[st])
            rec = _run(cfg, C.measure(enc, basis), _key(cfg, pi, si))
            rows, stats = _rate_rows(f"{prep}|{st}", st, rec, basis, ideal)
            res.rows += rows
            res.summary[f"{prep}|{st}"] = {k: v.error_rate for k, v in stats.items()}
            res.summary[f"{prep}|{st}"]["discarded"] = rec.n_discarded / (len(rec) + rec.n_discarded)
    return res


def run_magic(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    for si, st in enumerate(cfg.params["states"]):
        enc = C.build_nft_encode(*MAGIC_ANGLES[st])
        vals = {}
        for bi, basis in enumerate("ZX"):
            rec = _run(cfg, C.measure(enc, basis), _key(cfg, si, bi))
            rows, ex = _expectation_rows(f"{st}|<{basis}>", basis, rec, basis)
            res.rows += rows
            vals[basis] = ex
        summ = {}
        for proto in D.PROTOCOLS:
            pv = proto.value
            if pv not in vals["Z"] or pv not in vals["X"]:
                continue
            _, _, z, zlo, zhi = vals["Z"][pv]
            _, _, x, xlo, xhi = vals["X"][pv]
            if st == "Hx":
                f = D.magic_fidelity(x, z)
                flo, fhi = D.magic_fidelity(xlo, zlo), D.magic_fidelity(xhi, zhi)
                res.rows.append(Row(f"{st}|F", "F", pv, y=f, y_lo=flo, y_hi=fhi))
                summ[pv] = {"exp_x": x, "exp_z": z, "fidelity": f}
            else:
                scale = math.hypot(x, z)
                xs, zs = (x / scale, z / scale) if scale > 1 else (x, z)
                lo, hi = D.fidelity_bound(xs, zs, MAGIC_TARGET_Y[st])
                slo, shi = D.fidelity_bound(xs, zs, MAGIC_TARGET_Y[st], y_sign_known=True)
                res.rows.append(Row(f"{st}|F_bound", "F", pv, y=0.5 * (lo + hi), y_lo=lo, y_hi=hi))
                res.rows.append(Row(f"{st}|F_bound_signed", "F", pv, y=0.5 * (slo + shi), y_lo=slo, y_hi=shi))
                summ[pv] = {"exp_x": x, "exp_z": z, "bound": [lo, hi], "bound_signed": [slo, shi]}
        res.summary[st] = summ
    return res


RAMSEY_MODELS = {"Raw": "RamseyRaw", "Correction": "RamseyCorr", "Detection": "RamseyDet"}
RAMSEY_DEPOL_MODELS = {"Raw": "RamseyRawDepol", "Correction": "RamseyCorrDepol",
                       "Detection": "RamseyDetDepolExact"}


def run_t2star(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    p = cfg.params
    waits, phases = p["waits"], p["phases"]
    models = RAMSEY_DEPOL_MODELS if p.get("fit_depol") else RAMSEY_MODELS
    enc = C.build_ft_encode("X", "+")
    readout, _ = C.build_transversal_yl(-HALF_PI)
    amps: dict[str, list[tuple[float, float, float, float]]] = {k: [] for k in list(models) + ["GHZ"]}
    for wi, t in enumerate(waits):
        counts = {k: ([], []) for k in models}
        ghz_k, ghz_n = [], []
        for pj, phi in enumerate(phases):
            circ = enc.then(C.Circuit(enc.n_qubits, (C.Wait(t),))).then(C.phase_sweep(phi)).then(readout)
            rec = _run(cfg, C.measure(circ, "Z"), _key(cfg, wi, pj))
            rows, ex = _expectation_rows(f"fringe|t={t!r}", phi, rec, "Z")
            res.rows += rows
            for proto in models:
                k, n = ex[proto][:2] if proto in ex else (0, 0)
                counts[proto][0].append(k)
                counts[proto][1].append(n)
            rp = D.row_parities(rec.bits)
            ghz_k.append(int((rp == 1).sum()))
            ghz_n.append(rp.size)
        for proto, model in models.items():
            k, n = (np.array(v) for v in counts[proto])
            ok = n > 0
            fit = res.add_fit(f"fringe|{proto}|t={t!r}", F.fit_binomial_mle(model, np.asarray(phases)[ok], k[ok], n[ok]))
            a = fit.params["A"] * ((1 - fit.params["p"]) ** 3 if proto == "Raw" and "p" in fit.params else 1)
            lo, hi = fit.ci["A"]
            amps[proto].append((t, a, lo, hi))
            res.rows.append(Row(f"amplitude|{proto}", t, proto, y=a, y_lo=lo, y_hi=hi))
        fit = res.add_fit(f"ghz_fringe|t={t!r}", F.fit_binomial_mle("GhzFringe", phases, ghz_k, ghz_n))
        amps["GHZ"].append((t, fit.params["A"], *fit.ci["A"]))
        res.rows.append(Row("amplitude|GHZ", t, "Raw", y=fit.params["A"], y_lo=fit.ci["A"][0], y_hi=fit.ci["A"][1]))
    t2 = {}
    for proto, pts in amps.items():
        ts = np.array([q[0] for q in pts])
        ys = np.array([q[1] for q in pts])
        sig = np.array([_sigma_from_ci(q[2], q[3]) for q in pts])
        fit = res.add_fit(f"decay|{proto}", F.fit_least_squares("ExpDecay", ts, ys, sig, init=[max(ys[0], 1e-3), 0.05]))
        t2[proto] = fit.params["T"]
    res.summary["t2_star"] = t2
    return res


def run_logical_gates(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    p = cfg.params
    enc = C.build_ft_encode("Z", "+")
    step, _ = C.build_transversal_yl(HALF_PI)
    branches: dict[str, list[tuple[float, C.Circuit]]] = {"FT": [], "nFT": []}
    for n in p["ft_steps"]:
        circ = enc
        for _ in range(n):
            circ = circ.then(step)
        branches["FT"].append((n * HALF_PI, circ))
    for th in p["nft_thetas"]:
        branches["nFT"].append((float(th), enc.then(C.build_nft_yl(th))))
    for bi, (branch, items) in enumerate(branches.items()):
        curves = {proto.value: [] for proto in D.PROTOCOLS}
        for ti, (th, circ) in enumerate(items):
            rec = _run(cfg, C.measure(circ, "Z"), _key(cfg, bi, ti))
            rows, ex = _expectation_rows(branch, th, rec, "Z")
            res.rows += rows
            for proto, v in ex.items():
                curves[proto].append((th, v[2], v[3], v[4]))
            if math.isclose(th % (2 * math.pi), math.pi, abs_tol=1e-9):
                rrows, st = _rate_rows(f"{branch}|theta=pi", th, rec, "Z", -1)
                res.rows += rrows
                res.summary[f"{branch}|theta=pi"] = {k: v.error_rate for k, v in st.items()}
        for proto, pts in curves.items():
            if len(pts) < 2:
                continue
            th = np.array([q[0] for q in pts])
            y = np.array([q[1] for q in pts])
            sig = np.array([_sigma_from_ci(q[2], q[3]) for q in pts])
            fit = res.add_fit(f"{branch}|{proto}", F.fit_least_squares("DecaySinusoid", th, y, sig, init=[0.99, 0.01]))
            res.summary.setdefault(f"{branch}|fit", {})[proto] = fit.params
    return res


def run_stab_inject(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    p = cfg.params
    stab = p["stabilizer"]
    x_type = stab in ("S3", "S4")
    basis = "Z" if x_type else "X"
    enc = C.build_ft_encode(basis, "+")
    anc = C.BACON_SHOR.ancilla_map[stab]
    at_zero = {}
    if p.get("baseline", True):
        rec = _run(cfg, C.measure(enc, basis), _key(cfg, 99, 0))
        rows, st = _rate_rows("baseline", 0.0, rec, basis, 1)
        res.rows += rows
        res.summary["baseline"] = {k: v.error_rate for k, v in st.items()}
    for oi, ordering in enumerate(p["orderings"]):
        for ti, th in enumerate(p["thetas"]):
            circ = enc.then(C.build_stab_measure(stab, ordering, C.Injection("Z", float(th), p["after"])))
            rec = _run(cfg, C.measure(circ, basis), _key(cfg, oi, ti))
            rows, st = _rate_rows(ordering, th, rec, basis, 1)
            res.rows += rows
            flips = rec.qubit(anc)
            lo, hi = D.wilson_interval(int(flips.sum()), len(flips))
            res.rows.append(Row(f"{ordering}|ancilla{anc}", th, "", len(flips), len(flips), int(flips.sum()),
                                float(flips.mean()), lo, hi))
            if ti == 0:
                at_zero[ordering] = st
            if math.isclose(th, math.pi, abs_tol=1e-9):
                res.summary[f"{ordering}|theta=pi"] = {k: v.error_rate for k, v in st.items()}
    if {"FT", "nFT"} <= set(at_zero) and math.isclose(p["thetas"][0], 0.0, abs_tol=1e-12):
        a, b = at_zero["nFT"]["Correction"], at_zero["FT"]["Correction"]
        res.summary["theta0_corrected"] = {
            "nFT": a.error_rate, "FT": b.error_rate,
            "p_value": D.two_proportion_test(a.n_error, a.n_kept, b.n_error, b.n_kept)}
    return res


def run_syndrome_table(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    p = cfg.params
    cases: list[tuple[str, tuple[int, str] | None]] = [("none", None)]
    cases += [(f"{a}{q}", (q, a)) for q in p["qubits"] for a in p["axes"]]
    code = C.BACON_SHOR
    order = [code.ancilla_map[s] for s in code.stabilizer_names]  # 10, 11, 12, 13
    dev_sum = dict.fromkeys(order, 0.0)
    exact = True
    for ci, (label, inj) in enumerate(cases):
        err = PauliString.identity(9) if inj is None else PauliString.single(9, inj[0], inj[1])
        oracle = dict(zip(order, syndrome(err, code)))
        rec = _run(cfg, C.build_full_syndrome(inj), _key(cfg, ci))
        pattern = []
        for anc in order:
            bits = rec.qubit(anc)
            n_err = int((bits != oracle[anc]).sum())
            lo, hi = D.wilson_interval(n_err, len(bits))
            res.rows.append(Row(label, anc, "", len(bits) + rec.n_discarded, len(bits), n_err, n_err / len(bits),
                                lo, hi, float(bits.mean())))
            dev_sum[anc] += n_err / len(bits)
            exact &= n_err == 0
            pattern.append(oracle[anc])
        res.summary.setdefault("oracle", {})[label] = pattern
    res.summary["exact_match"] = exact
    res.summary["mean_deviation"] = {str(a): dev_sum[a] / len(cases) for a in order}
    return res


def run_ft_audit(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    canon = AU.canonical_circuits()
    for name in cfg.params["circuits"]:
        circ, expect_ft = canon[name]
        rep = AU.audit(circ, name=name)
        res.audits.append(rep)
        for cls, n in rep.counts.items():
            res.rows.append(Row(name, cls, rep.verdict, len(rep.records), len(rep.records), n, n / len(rep.records)))
        res.summary[name] = {"verdict": rep.verdict, "expected": "FT" if expect_ft else "not FT",
                             "counts": rep.counts,
                             "example": rep.logical_faults[0].to_dict() if rep.logical_faults else None}
        if expect_ft and not rep.is_ft:
            res.unexpected_logical.append(name)
    return res


def loglog_slope(p_values, rates) -> float:
    p_values, rates = np.asarray(p_values, float), np.asarray(rates, float)
    ok = rates > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(p_values[ok]), np.log(rates[ok]), 1)[0])


def run_detection_scaling(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.experiment, cfg)
    p = cfg.params
    for pi, prep in enumerate(p["preparations"]):
        enc = C.build_ft_encode("Z", "+") if prep == "FT" else C.build_nft_encode(0.0, 0.0)
        circ = C.measure(enc, "Z")
        rates = []
        for i, pv in enumerate(p["p_values"]):
            noise = (NoiseConfig(p_pauli=pv, seed=cfg.seed) if p.get("isolate", True)
                     else cfg.noise.with_(p_pauli=pv))
            rec = _run(cfg, circ, _key(cfg, pi, i), noise)
            rows, st = _rate_rows(prep, pv, rec, "Z", 1)
            res.rows += rows
            rates.append(st["Detection"].error_rate if "Detection" in st else 0.0)
        res.summary[f"{prep}|detection_slope"] = loglog_slope(p["p_values"], rates)
        res.summary[f"{prep}|detection_rates"] = rates
    return res


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "state-prep": run_state_prep,
    "magic": run_magic,
    "t2star": run_t2star,
    "logical-gates": run_logical_gates,
    "stab-inject": run_stab_inject,
    "syndrome-table": run_syndrome_table,
    "ft-audit": run_ft_audit,
    "detection-scaling": run_detection_scaling,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)
