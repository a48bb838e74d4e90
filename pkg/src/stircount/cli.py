"""Scenario runner: configure protocols, run named experiments, emit data.

Configuration format (INI, flat key = value per section)::

    [run]
    scenario = stir-cycle        ; levels | lz-sweep | single-path |
                                 ; double-path | stir-cycle | fcs | multi-cycle
    out = results

    [system]
    sites = 3

    [protocol]
    kind = StirCycle             ; LinearRampLZ | StirCycle
    c = 0.05                     ; effective coupling [hop]
    udot = 5.236e-3              ; sweep rate [hop^2]; for presets built from
                                 ; an exponent, see the scenario sections
    lambda_ccw = 0.8             ; splitting ratio, first half-cycle
    lambda_cw = 0.3              ; splitting ratio, second half-cycle
    dwell = 0.0                  ; hold between crossings [1/hop]
    u_span = 8.0                 ; LinearRampLZ: full sweep width of u
    u_delta = 0.5                ; StirCycle: sweep amplitude around u = 1
    edge_frac = 0.25             ; tapered fraction of the coupling envelope
    t_start = 0.0                ; informational; presets start at 0
    t_end = 0.0                  ; informational; presets fix the duration

    [numerics]
    dt_max = 0.1
    step_tol = 1e-10
    frame_points = 2001

    [scenario.lz-sweep]
    exponents = 0.5,1,2,3,4      ; values of 2 pi c^2 / udot

    [scenario.single-path]
    p_targets = 0.25,0.5,0.9

    [scenario.double-path]
    lambdas = -0.7,0.3,0.5,1.0,1.7
    exponent = 7.5

    [scenario.stir-cycle]
    run_doubled = true

    [scenario.fcs]
    q_max = 2.0
    n_r = 33

    [scenario.multi-cycle]
    n_cycles = 16
    exponent = 4.5

Every scenario writes one or more CSV files (17 significant digits, comma
separated, one header row with a unit tag per column) plus a JSON
verification report listing each check with its analytic-oracle provenance,
predicted and measured values, tolerance and pass/fail.  Files are written
atomically (write-then-rename).  Exit status: 0 all checks passed,
1 a check failed, 2 configuration error, 3 numerical failure.

CSV schemas (consumed by the figure scripts):

* levels:      t[1/hop], E_branch0[hop], ..., followed[hop]
* lz-sweep:    exponent[1], p_numeric[1], p_formula[1], rel_err[1]
* single-path: p_target[1], p_measured[1], eig_minus[particles],
               eig_plus[particles], weight_minus[1], weight_plus[1],
               mean[particles], variance[particles^2]
* double-path: lambda[1], p_measured[1], mean[particles],
               mean_predicted[particles], variance[particles^2],
               variance_predicted[particles^2], variance_classical[particles^2]
* stir-cycle:  lambda_ccw[1], lambda_cw[1], dwell[1/hop], phi[rad],
               mean[particles], mean_predicted[particles],
               variance[particles^2], variance_two_term[particles^2],
               resid[1], resid_predicted[1], p_lz[1],
               continuity_defect[particles]
* fcs (two files): <name>_chi.csv: r[1/particles], chi_re[1], chi_im[1], taper[1]
                   <name>_p0.csv:  Q[particles], P0[1/particles]
* multi-cycle: preparation[label], n[1], mean[particles], std[particles]

A numeric axis can be swept with ``--sweep AXIS=start:stop:count``; the rows
of every run are concatenated in value order behind a leading axis column.
"""

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytic
from .counting import (
    charge_and_propagator,
    continuity_check,
    counting_result_record,
    counting_stats,
    fcs_default_grids,
    fcs_quasi,
    multi_cycle_spreading,
    quasi_distribution_record,
)
from .errors import ConfigError, EngineError
from .model import (
    SystemSpec,
    adiabaticity_report,
    linear_ramp_lz,
    protocol_digest,
    protocol_from_dict,
    stir_cycle,
)
from .propagation import (
    adiabatic_frame,
    dynamical_phase,
    floquet_states,
    propagate,
)

SCENARIOS = (
    "levels", "lz-sweep", "single-path", "double-path",
    "stir-cycle", "fcs", "multi-cycle",
)

AXIS_UNITS = {
    "dwell": "1/hop", "c": "hop", "udot": "hop^2", "u_span": "1",
    "u_delta": "1", "edge_frac": "1", "lambda_ccw": "1", "lambda_cw": "1",
    "exponent": "1", "q_max": "particles",
}


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def load_config(path: str | Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    return cp


def _get(cfg, section, key, cast, default):
    if cfg.has_option(section, key):
        raw = cfg.get(section, key)
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    return default


def _get_list(cfg, section, key, default):
    if cfg.has_option(section, key):
        raw = cfg.get(section, key)
        try:
            return [float(tok) for tok in raw.replace(";", ",").split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    return list(default)


def config_hash(cfg: configparser.ConfigParser) -> str:
    lines = []
    for section in sorted(cfg.sections()):
        for key in sorted(cfg.options(section)):
            lines.append(f"{section}.{key}={cfg.get(section, key)}")
    digest = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    return f"sha256:{digest}"


def build_protocol(cfg, *, sites, kind_default="StirCycle"):
    d = {
        "kind": _get(cfg, "protocol", "kind", str, kind_default),
        "c": _get(cfg, "protocol", "c", float, 0.05),
        "udot": _get(cfg, "protocol", "udot", float, 5.236e-3),
        "lambda_ccw": _get(cfg, "protocol", "lambda_ccw", float, 0.8),
        "lambda_cw": _get(cfg, "protocol", "lambda_cw", float, 0.3),
        "dwell": _get(cfg, "protocol", "dwell", float, 0.0),
        "u_delta": _get(cfg, "protocol", "u_delta", float, 0.5),
        "sites": sites,
    }
    if cfg.has_option("protocol", "edge_frac"):
        d["edge_frac"] = cfg.getfloat("protocol", "edge_frac")
    if cfg.has_option("protocol", "u_span"):
        d["u_span"] = cfg.getfloat("protocol", "u_span")
    try:
        return protocol_from_dict(d)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid protocol: {exc}") from exc


def _numerics(cfg):
    return {
        "dt_max": _get(cfg, "numerics", "dt_max", float, 0.1),
        "step_tol": _get(cfg, "numerics", "step_tol", float, 1e-10),
    }


# ---------------------------------------------------------------------------
# checks and output files
# ---------------------------------------------------------------------------


def make_check(name, oracle, predicted, measured, tol, mode="abs", info=False):
    """One verification record.  Modes: abs, rel, min (measured >= predicted),
    max (measured <= predicted), differs (measured at least tol away)."""
    predicted = float(predicted)
    measured = float(measured)
    tol = float(tol)
    if mode == "abs":
        passed = abs(measured - predicted) <= tol
    elif mode == "rel":
        passed = abs(measured - predicted) <= tol * abs(predicted)
    elif mode == "min":
        passed = measured >= predicted
    elif mode == "max":
        passed = measured <= predicted
    elif mode == "differs":
        passed = abs(measured - predicted) >= tol
    else:
        raise ValueError(f"unknown check mode {mode}")
    return {
        "name": name,
        "oracle": oracle,
        "predicted": predicted,
        "measured": measured,
        "tolerance": tol,
        "mode": mode,
        "informational": bool(info),
        "passed": bool(passed),
    }


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv_atomic(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else fmt(x) for x in row))
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def write_report_atomic(path: Path, report: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _linear_fit_r2(x, y):
    """Least-squares line; returns (slope, intercept, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def ramp_for_exponent(x, c=0.1, sites=2, lam=1.0, u_span=None, window_factor=40.0):
    """Linear sweep whose crossing exponent 2 pi c^2/udot equals x."""
    return linear_ramp_lz(
        c=c, udot=2.0 * math.pi * c * c / x, u_span=u_span,
        sites=sites, lam=lam, window_factor=window_factor,
    )


# ---------------------------------------------------------------------------
# scenarios: each returns (files, checks); files maps name -> (header, rows)
# ---------------------------------------------------------------------------


def scenario_levels(cfg, ts):
    spec = SystemSpec(sites=_get(cfg, "system", "sites", int, 3))
    proto = build_protocol(cfg, sites=spec.sites)
    n_pts = _get(cfg, "numerics", "frame_points", int, 2001)
    frame = adiabatic_frame(spec, proto, n_pts)
    psi0 = np.zeros(spec.sites, dtype=complex)
    psi0[0] = 1.0
    followed = int(np.argmax(np.abs(frame.states[0].conj().T @ psi0)))
    header = ["t[1/hop]"] + [f"E_branch{b}[hop]" for b in range(spec.sites)] + ["followed[hop]"]
    rows = [
        [frame.times[k], *frame.levels[k], frame.levels[k, followed]]
        for k in range(len(frame.times))
    ]
    rep = adiabaticity_report(proto, spec)
    checks = [
        make_check(
            "frame-branch-continuity", "eigenvector overlap tracking",
            1.0, frame.min_overlap, 0.001 * ts, mode="abs",
        ),
        make_check(
            "crossings-found", "resonance sweep count",
            len(rep.crossings), len(frame.crossing_times), 0.0, mode="abs",
        ),
    ]
    return {"levels": (header, rows)}, checks


def scenario_lz_sweep(cfg, ts):
    c = _get(cfg, "protocol", "c", float, 0.1)
    exponents = _get_list(cfg, "scenario.lz-sweep", "exponents", (0.5, 1.0, 2.0, 3.0, 4.0))
    num = _numerics(cfg)
    spec = SystemSpec(sites=2)
    header = ["exponent[1]", "p_numeric[1]", "p_formula[1]", "rel_err[1]"]
    rows = []
    checks = []
    for x in exponents:
        proto = ramp_for_exponent(x, c=c)
        rec = propagate(spec, proto, **num)
        p_num = abs(rec.U[0, 0]) ** 2
        p_f = analytic.lz_probability(analytic.LZParams(c=c, udot=proto.meta["udot"]))
        rel = abs(p_num - p_f) / p_f
        rows.append([x, p_num, p_f, rel])
        checks.append(make_check(
            f"crossing-probability-x={x:g}", "analytic.lz_probability",
            p_f, p_num, 0.05 * ts, mode="rel",
        ))
    return {"lz-sweep": (header, rows)}, checks


def scenario_single_path(cfg, ts):
    c = _get(cfg, "protocol", "c", float, 0.1)
    p_targets = _get_list(cfg, "scenario.single-path", "p_targets", (0.25, 0.5, 0.9))
    num = _numerics(cfg)
    spec = SystemSpec(sites=2)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    header = [
        "p_target[1]", "p_measured[1]", "eig_minus[particles]", "eig_plus[particles]",
        "weight_minus[1]", "weight_plus[1]", "mean[particles]", "variance[particles^2]",
    ]
    rows = []
    checks = []
    records = []
    for p_t in p_targets:
        x = -math.log(1.0 - p_t)
        proto = ramp_for_exponent(x, c=c)
        cm, rec = charge_and_propagator(spec, proto, **num)
        p = abs(rec.U[1, 0]) ** 2
        cs = counting_stats(cm, psi0)
        (qm, wm), (qp, wp) = cs.spectrum
        rows.append([p_t, p, qm, qp, wm, wp, cs.mean, cs.variance])
        records.append(counting_result_record(
            cs, p_target=p_t, protocol=protocol_digest(proto),
            steps=cm.steps, dt_max=num["dt_max"], step_tol=num["step_tol"],
            hermiticity_defect=cm.hermiticity_defect,
        ))
        root = math.sqrt(p)
        p_lz = analytic.lz_probability(analytic.LZParams(c=c, udot=proto.meta["udot"]))
        checks += [
            make_check(f"spectrum-plus-p={p_t:g}", "analytic.single_path_spectrum",
                       root, qp, 1e-3 * ts, mode="abs"),
            make_check(f"spectrum-minus-p={p_t:g}", "analytic.single_path_spectrum",
                       -root, qm, 1e-3 * ts, mode="abs"),
            make_check(f"weight-plus-p={p_t:g}", "analytic.single_path_spectrum",
                       0.5 * (1 + root), wp, 1e-3 * ts, mode="abs"),
            make_check(f"weight-minus-p={p_t:g}", "analytic.single_path_spectrum",
                       0.5 * (1 - root), wm, 1e-3 * ts, mode="abs"),
            make_check(f"mean-p={p_t:g}", "analytic.lz_probability",
                       1.0 - p_lz, cs.mean, 0.02 * ts, mode="rel"),
            make_check(f"variance-p={p_t:g}", "analytic.lz_probability",
                       (1.0 - p_lz) * p_lz, cs.variance, 0.02 * ts, mode="rel"),
        ]
    return {
        "single-path": (header, rows),
        "single-path_records": {"records": records},
    }, checks


def scenario_double_path(cfg, ts):
    c = _get(cfg, "protocol", "c", float, 0.05)
    x = _get(cfg, "scenario.double-path", "exponent", float, 7.5)
    u_span = _get(cfg, "scenario.double-path", "u_span", float, 1.5)
    lambdas = _get_list(cfg, "scenario.double-path", "lambdas", (-0.7, 0.3, 0.5, 1.0, 1.7))
    num = _numerics(cfg)
    spec = SystemSpec(sites=3)
    psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    header = [
        "lambda[1]", "p_measured[1]", "mean[particles]", "mean_predicted[particles]",
        "variance[particles^2]", "variance_predicted[particles^2]",
        "variance_classical[particles^2]",
    ]
    rows = []
    checks = []
    for lam in lambdas:
        proto = ramp_for_exponent(x, c=c, sites=3, lam=lam, u_span=u_span)
        cm, rec = charge_and_propagator(spec, proto, **num)
        psi_end = rec.U @ psi0
        p = 1.0 - abs(psi_end[0]) ** 2
        cs = counting_stats(cm, psi0)
        mean_pred, var_pred = analytic.double_path_moments(lam, p)
        q = lam * p
        var_cl = analytic.classical_double_path_variance(lam, p) if 0.0 <= q <= 1.0 else float("nan")
        rows.append([lam, p, cs.mean, mean_pred, cs.variance, var_pred, var_cl])
        checks += [
            make_check(f"deep-adiabatic-p-lambda={lam:g}", "passage probability",
                       1.0, p, 1e-3, mode="abs"),
            make_check(f"mean-lambda={lam:g}", "analytic.double_path_moments",
                       mean_pred, cs.mean, 0.01 * ts, mode="rel"),
            make_check(f"variance-lambda={lam:g}", "analytic.double_path_moments",
                       var_pred, cs.variance,
                       max(0.05 * abs(var_pred), 1e-4) * ts, mode="abs"),
        ]
        if abs(lam - 0.5) < 1e-12:
            checks.append(make_check(
                "classical-variance-refuted", "analytic.classical_double_path_variance",
                var_cl, cs.variance, 0.2, mode="differs",
            ))
    return {"double-path": (header, rows)}, checks


def _stir_once(spec, proto, psi0, num, frame_points):
    """One stir cycle: charge stats, phase, residual occupation, continuity."""
    frame = adiabatic_frame(spec, proto, frame_points)
    ph = dynamical_phase(frame)
    cm, rec = charge_and_propagator(spec, proto, **num)
    cs = counting_stats(cm, psi0)
    resid = 1.0 - abs((rec.U @ psi0)[0]) ** 2
    phi = (ph.phi2 - ph.phi1) if ph.phi2 is not None else float("nan")
    defect = continuity_check(spec, proto, psi0, **num)
    return cs, phi, resid, defect


def scenario_stir_cycle(cfg, ts):
    spec = SystemSpec(sites=3)
    proto = build_protocol(cfg, sites=3)
    if proto.kind != "StirCycle":
        raise ConfigError("stir-cycle scenario requires kind = StirCycle")
    num = _numerics(cfg)
    frame_points = _get(cfg, "numerics", "frame_points", int, 2001)
    run_doubled = _get(cfg, "scenario.stir-cycle", "run_doubled", bool, True)
    psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    lam_ccw = proto.meta["lam_ccw"]
    lam_cw = proto.meta["lam_cw"]
    cs, phi, resid, defect = _stir_once(spec, proto, psi0, num, frame_points)
    p_lz = analytic.lz_probability(
        analytic.LZParams(c=proto.meta["c_eff"], udot=proto.meta["udot"])
    )
    mean_pred = analytic.stirring_charge(lam_ccw, lam_cw)
    var_two_term = analytic.stirring_variance(
        analytic.CyclePrediction(lam_ccw, lam_cw, phi, p_lz)
    )
    resid_pred = analytic.residual_occupation(phi, p_lz)
    header = [
        "lambda_ccw[1]", "lambda_cw[1]", "dwell[1/hop]", "phi[rad]",
        "mean[particles]", "mean_predicted[particles]", "variance[particles^2]",
        "variance_two_term[particles^2]", "resid[1]", "resid_predicted[1]",
        "p_lz[1]", "continuity_defect[particles]",
    ]
    rows = [[
        lam_ccw, lam_cw, proto.meta["dwell"], phi, cs.mean, mean_pred,
        cs.variance, var_two_term, resid, resid_pred, p_lz, defect,
    ]]
    # tolerance floor: non-adiabatic leakage bounds the mean deviation by
    # ~4 P_LZ per unit splitting ratio (relevant when the prediction is ~0)
    mean_tol = max(0.05 * abs(mean_pred), 4.0 * (abs(lam_ccw) + abs(lam_cw)) * p_lz)
    checks = [
        make_check("mean-per-cycle", "analytic.stirring_charge",
                   mean_pred, cs.mean, mean_tol * ts, mode="abs"),
        make_check("continuity", "two-bond charge conservation",
                   0.0, defect, 1e-8 * ts, mode="abs"),
        # The two-term interference formula disagrees with the exact
        # two-level algebra (see the repository notes); reported for
        # comparison, not gated.
        make_check("variance-two-term-comparison", "analytic.stirring_variance",
                   var_two_term, cs.variance, 0.1, mode="rel", info=True),
        make_check("resid-two-term-comparison", "analytic.residual_occupation",
                   resid_pred, resid, 0.1, mode="rel", info=True),
    ]
    if run_doubled:
        slow = stir_cycle(
            proto.meta["c_eff"], lam_ccw, lam_cw, proto.meta["udot"] / 2.0,
            dwell=proto.meta["dwell"], u_delta=proto.meta["u_delta"],
            edge_frac=proto.params.get("edge_frac", 0.25),
        )
        cs2, phi2, resid2, defect2 = _stir_once(spec, slow, psi0, num, frame_points)
        rows.append([
            lam_ccw, lam_cw, slow.meta["dwell"], phi2, cs2.mean, mean_pred,
            cs2.variance, var_two_term, resid2,
            analytic.residual_occupation(phi2, p_lz * p_lz), p_lz * p_lz, defect2,
        ])
        checks.append(make_check(
            "mean-duration-independence", "adiabatic transport limit",
            cs.mean, cs2.mean,
            max(0.02 * abs(cs.mean), 4.0 * (abs(lam_ccw) + abs(lam_cw)) * p_lz) * ts,
            mode="abs",
        ))
    return {"stir-cycle": (header, rows)}, checks


def scenario_fcs(cfg, ts):
    sites = _get(cfg, "system", "sites", int, 2)
    spec = SystemSpec(sites=sites)
    c = _get(cfg, "protocol", "c", float, 0.1)
    x = _get(cfg, "scenario.fcs", "exponent", float, math.log(2.0))
    lam = _get(cfg, "protocol", "lambda_ccw", float, 1.0) if sites == 3 else 1.0
    u_span = _get(cfg, "protocol", "u_span", float, 4.0 if sites == 2 else 1.5)
    proto = ramp_for_exponent(x, c=c, sites=sites, lam=lam, u_span=u_span)
    q_max = _get(cfg, "scenario.fcs", "q_max", float, 2.0)
    n_r = _get(cfg, "scenario.fcs", "n_r", int, 33)
    num = _numerics(cfg)
    psi0 = np.zeros(sites, dtype=complex)
    psi0[0] = 1.0
    r_grid, q_grid = fcs_default_grids(q_max, n_r)
    qd = fcs_quasi(spec, proto, 1, psi0, r_grid, q_grid, **num)
    r_max = float(np.max(np.abs(r_grid)))
    taper_w = np.cos(0.5 * math.pi * r_grid / r_max) ** 2
    chi_rows = [
        [r, z.real, z.imag, w] for r, z, w in zip(qd.r_grid, qd.chi, taper_w)
    ]
    p0_rows = [[q, p] for q, p in zip(qd.Q_grid, qd.P0)]
    cm, _ = charge_and_propagator(spec, proto, **num)
    m3_spec = counting_stats(cm, psi0, k_max=3).moments[3]
    checks = [
        make_check("mean-identity", "counting-field derivative vs spectrum",
                   qd.spectral_mean, qd.mean, 1e-4 * ts, mode="abs"),
        make_check("variance-identity", "counting-field derivative vs spectrum",
                   qd.spectral_variance, qd.variance, 1e-4 * ts, mode="abs"),
        make_check("normalization", "conjugate-grid Fourier sum",
                   1.0, qd.norm, 1e-6 * ts, mode="abs"),
        make_check("third-moment-departure", "spectral moment ladder",
                   m3_spec, qd.chi_moment3(), 0.01, mode="differs"),
    ]
    record = quasi_distribution_record(
        qd, protocol=protocol_digest(proto), dt_max=num["dt_max"],
        step_tol=num["step_tol"],
    )
    return {
        "fcs_chi": (["r[1/particles]", "chi_re[1]", "chi_im[1]", "taper[1]"], chi_rows),
        "fcs_p0": (["Q[particles]", "P0[1/particles]"], p0_rows),
        "fcs_record": record,
    }, checks


def scenario_multi_cycle(cfg, ts):
    spec = SystemSpec(sites=3)
    c = _get(cfg, "protocol", "c", float, 0.05)
    lam_ccw = _get(cfg, "protocol", "lambda_ccw", float, 0.8)
    lam_cw = _get(cfg, "protocol", "lambda_cw", float, 0.3)
    dwell = _get(cfg, "protocol", "dwell", float, 0.0)
    u_delta = _get(cfg, "protocol", "u_delta", float, 0.5)
    x = _get(cfg, "scenario.multi-cycle", "exponent", float, 6.0)
    n_cycles = _get(cfg, "scenario.multi-cycle", "n_cycles", int, 16)
    num = _numerics(cfg)
    udot = 2.0 * math.pi * c * c / x
    proto = stir_cycle(c, lam_ccw, lam_cw, udot, dwell=dwell, u_delta=u_delta)
    site0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    generic = np.array([1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2.0)
    es = floquet_states(spec, proto, **num)
    psi_fl = es.eigenvectors[:, int(np.argmax(np.abs(es.eigenvectors[0, :])))]
    header = ["preparation[label]", "n[1]", "mean[particles]", "std[particles]"]
    rows = []
    series = {}
    for label, psi0 in (("site0", site0), ("generic", generic), ("floquet", psi_fl)):
        data = multi_cycle_spreading(spec, proto, psi0, n_cycles, **num)
        series[label] = data
        rows += [[label, *row] for row in data]
    gen = series["generic"]
    slope_std, _, r2_std = _linear_fit_r2(gen[:, 0], gen[:, 2])
    # the transported charge per cycle is read off the transport preparation
    slope_mean, _, _ = _linear_fit_r2(series["site0"][:, 0], series["site0"][:, 1])
    fl = series["floquet"]
    checks = [
        make_check("generic-spread-linear-r2", "linear least squares",
                   0.99, r2_std, 0.0, mode="min"),
        make_check("generic-spread-slope-positive", "linear least squares",
                   0.0, slope_std, 0.0, mode="min"),
        make_check("mean-slope-per-cycle", "analytic.stirring_charge",
                   analytic.stirring_charge(lam_ccw, lam_cw), slope_mean,
                   0.05 * ts, mode="rel"),
        make_check("floquet-spread-bounded", "period-eigenstate preparation",
                   3.0 * fl[0, 2], float(np.max(fl[:, 2])), 0.0, mode="max"),
    ]
    return {"multi-cycle": (header, rows)}, checks


PRIMARY_HEADERS = {
    "levels": ["t[1/hop]", "E_branch0[hop]", "E_branch1[hop]", "E_branch2[hop]",
               "followed[hop]"],
    "lz-sweep": ["exponent[1]", "p_numeric[1]", "p_formula[1]", "rel_err[1]"],
    "single-path": ["p_target[1]", "p_measured[1]", "eig_minus[particles]",
                    "eig_plus[particles]", "weight_minus[1]", "weight_plus[1]",
                    "mean[particles]", "variance[particles^2]"],
    "double-path": ["lambda[1]", "p_measured[1]", "mean[particles]",
                    "mean_predicted[particles]", "variance[particles^2]",
                    "variance_predicted[particles^2]",
                    "variance_classical[particles^2]"],
    "stir-cycle": ["lambda_ccw[1]", "lambda_cw[1]", "dwell[1/hop]", "phi[rad]",
                   "mean[particles]", "mean_predicted[particles]",
                   "variance[particles^2]", "variance_two_term[particles^2]",
                   "resid[1]", "resid_predicted[1]", "p_lz[1]",
                   "continuity_defect[particles]"],
    "fcs": ["r[1/particles]", "chi_re[1]", "chi_im[1]", "taper[1]"],
    "multi-cycle": ["preparation[label]", "n[1]", "mean[particles]",
                    "std[particles]"],
}

SCENARIO_FUNCS = {
    "levels": scenario_levels,
    "lz-sweep": scenario_lz_sweep,
    "single-path": scenario_single_path,
    "double-path": scenario_double_path,
    "stir-cycle": scenario_stir_cycle,
    "fcs": scenario_fcs,
    "multi-cycle": scenario_multi_cycle,
}


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------


def run_scenario(cfg, scenario=None, tolerance_scale=1.0):
    """Execute one scenario; returns (files, checks)."""
    name = scenario or _get(cfg, "run", "scenario", str, None)
    if name not in SCENARIO_FUNCS:
        raise ConfigError(f"unknown scenario {name!r}; pick one of {SCENARIOS}")
    return name, *SCENARIO_FUNCS[name](cfg, tolerance_scale)


def parse_sweep(text):
    """AXIS=start:stop:count -> (axis, values)."""
    try:
        axis, rng = text.split("=", 1)
        start_s, stop_s, count_s = rng.split(":")
        count = int(count_s)
        if count < 0:
            raise ValueError("count must be >= 0")
        values = np.linspace(float(start_s), float(stop_s), count) if count else np.array([])
        return axis.strip(), values
    except ValueError as exc:
        raise ConfigError(f"bad --sweep spec {text!r}: {exc}") from exc


def _axis_section(cfg, scenario, axis):
    sec = f"scenario.{scenario}"
    if cfg.has_section(sec) and cfg.has_option(sec, axis):
        return sec
    if cfg.has_option("protocol", axis):
        return "protocol"
    # default to the protocol section for known protocol keys
    if axis in ("c", "udot", "lambda_ccw", "lambda_cw", "dwell", "u_span",
                "u_delta", "edge_frac"):
        return "protocol"
    if axis in ("exponent", "q_max", "n_cycles"):
        return sec
    raise ConfigError(f"axis {axis!r} does not name a numeric config field")


def run_sweep(cfg, scenario, axis, values, tolerance_scale=1.0):
    """Run the scenario per axis value; merge rows in value order."""
    section = _axis_section(cfg, scenario, axis)
    unit = AXIS_UNITS.get(axis, "1")
    merged_rows = []
    merged_header = None
    all_checks = []
    for v in values:
        if not cfg.has_section(section):
            cfg.add_section(section)
        cfg.set(section, axis, fmt(v))
        _, files, checks = run_scenario(cfg, scenario, tolerance_scale)
        csv_name = next(n for n, v in files.items() if not isinstance(v, dict))
        (header, rows) = files[csv_name]
        has_axis_col = axis in [h.split("[", 1)[0] for h in header]
        if merged_header is None:
            merged_header = header if has_axis_col else [f"{axis}[{unit}]"] + header
        merged_rows += rows if has_axis_col else [[v, *row] for row in rows]
        for c in checks:
            c = dict(c)
            c["name"] = f"{axis}={v:.6g}:{c['name']}"
            all_checks.append(c)
    if merged_header is None:
        merged_header = [f"{axis}[{unit}]"] + PRIMARY_HEADERS[scenario]
    return merged_header, merged_rows, all_checks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stircount",
        description="Counting statistics of driven 2- and 3-site systems: "
        "run verification scenarios and emit CSV/JSON artifacts.",
    )
    parser.add_argument("--config", required=True, help="INI configuration file")
    parser.add_argument("--scenario", help="override the scenario named in the config")
    parser.add_argument("--out", help="output directory (default: from config or '.')")
    parser.add_argument("--sweep", help="AXIS=start:stop:count sweep over a config field")
    parser.add_argument("--tolerance-scale", type=float, default=1.0,
                        help="multiply all check tolerances (smoke runs)")
    parser.add_argument("--report", help="verification report path (default <out>/<scenario>_report.json)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        scenario = args.scenario or _get(cfg, "run", "scenario", str, None)
        if scenario not in SCENARIO_FUNCS:
            raise ConfigError(f"unknown scenario {scenario!r}; pick one of {SCENARIOS}")
        out_dir = Path(args.out or _get(cfg, "run", "out", str, "."))
        chash = config_hash(cfg)
        if args.sweep:
            axis, values = parse_sweep(args.sweep)
            header, rows, checks = run_sweep(cfg, scenario, axis, values,
                                             args.tolerance_scale)
            files = {f"{scenario}-sweep-{axis}": (header, rows)}
        else:
            _, files, checks = run_scenario(cfg, scenario, args.tolerance_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"numerical failure: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 3

    for name, payload in files.items():
        if isinstance(payload, dict):
            write_report_atomic(out_dir / f"{name}.json", payload)
        else:
            header, rows = payload
            write_csv_atomic(out_dir / f"{name}.csv", header, rows)
    gated = [c for c in checks if not c.get("informational")]
    report = {
        "engine_version": __version__,
        "scenario": scenario,
        "config_hash": chash,
        "tolerance_scale": args.tolerance_scale,
        "checks": checks,
        "n_checks": len(gated),
        "n_passed": sum(1 for c in gated if c["passed"]),
        "all_passed": all(c["passed"] for c in gated),
    }
    report_path = Path(args.report) if args.report else out_dir / f"{scenario}_report.json"
    write_report_atomic(report_path, report)
    for c in checks:
        tag = "info" if c.get("informational") else ("PASS" if c["passed"] else "FAIL")
        print(f"[{tag}] {c['name']}: predicted={c['predicted']:.6g} "
              f"measured={c['measured']:.6g} tol={c['tolerance']:.2g} ({c['mode']})")
    return 0 if report["all_passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
