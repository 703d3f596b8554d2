"""Command-line front end.

    lindqfi SUBCOMMAND [--config run.json] [--seed N] [--out DIR] [--format csv|json]
                       [--n-bins N] [--trials N] [--sizes 2,4,6,8] [--set key=value ...]

A config file holds one JSON object::

    {"subcommand": "qfi", "seed": 0, "output_dir": "out", "format": "csv",
     "params": {"scenario": "dephasing", "t": 0.3}}

Missing keys take their defaults, flags override file keys, and the filled
config is echoed to ``DIR/config.json`` (it re-parses to itself).  Every run
writes ``DIR/summary.json``; tables go to ``DIR/<table>.csv`` or, with
``--format json``, into ``DIR/results.json``.

Exit status: 0 all checks pass, 1 a check failed, 2 bad config, 3 numeric guard.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, LindqfiError, NumericGuard

SUBCOMMANDS = ("qfi", "rpm", "scaling", "pauli", "imaging", "uhlmann", "oracle-check")
FORMATS = ("csv", "json")
TOP_KEYS = ("subcommand", "seed", "output_dir", "format", "params")


# ---------------------------------------------------------------- schemas
# Each entry is key -> (default, kind); kinds ending in "?" also accept null.

QFI_SCENARIOS = {
    "dephasing": {"gamma": (1.0, "float"), "probe": ("plus", "str")},
    "collective-spin": {"N": (3, "int"), "gamma": ([1.0, 1.0, 1.5], "floats"),
                        "probe": ("optimal", "str")},
    "pauli": {"N": (1, "int"), "rates": ([1.0, 2.0, 3.0], "floats"), "memory": (True, "bool")},
}

SCALING_FAMILIES = {
    # family: (default sizes, reference exponent)
    "optimal-collective": ([2, 3, 4, 5, 6, 7, 8], 2.0),
    "separable": ([2, 3, 4, 5, 6, 7, 8], 1.0),
    "tensor-norm": (list(range(4, 21, 2)), None),
    "dicke-choi": (list(range(4, 21, 2)), None),
    "scalar-channel": ([4, 6, 8, 10, 12], 4.0),
    "toy-dense": (list(range(2, 17)), 2.0),
    "toy-sparse": (list(range(2, 17)), 1.0),
}


def _qfi_schema(p: dict) -> dict:
    sc = p.get("scenario", "dephasing")
    if sc not in QFI_SCENARIOS:
        raise ConfigError(f"params.scenario: unknown scenario {sc!r}; choose from {sorted(QFI_SCENARIOS)}")
    return {"scenario": ("dephasing", "str"), "t": (0.3, "float"), "steps": (200, "int"),
            "fd_step": (1e-5, "float"), **QFI_SCENARIOS[sc]}


def _rpm_schema(p: dict) -> dict:
    return {"N": (1, "int"), "rates": ([1.0, 2.0, 3.0], "floats"), "T": (100.0, "float"),
            "trials": (100000, "int"), "ratio_tol": (0.05, "float"), "counts_file": (None, "str?")}


def _scaling_schema(p: dict) -> dict:
    fam = p.get("family", "optimal-collective")
    if fam not in SCALING_FAMILIES:
        raise ConfigError(f"params.family: unknown family {fam!r}; choose from {sorted(SCALING_FAMILIES)}")
    sizes, ref = SCALING_FAMILIES[fam]
    k = p.get("k", 1)
    if ref is None:
        ref = 2.0 * k if isinstance(k, int) else None
    tol = 0.3 if fam == "scalar-channel" else 0.05 if fam.startswith("toy") else 0.1
    if fam in ("tensor-norm", "dicke-choi") and ref is not None:
        tol = 0.1 * ref
    return {"family": ("optimal-collective", "str"), "sizes": (sizes, "ints"), "k": (1, "int"),
            "gamma": (1.0, "float"), "reference": (ref, "float?"), "tolerance": (tol, "float")}


def _pauli_schema(p: dict) -> dict:
    return {"N": (2, "int"), "T": (1.0, "float"), "rates": (None, "floats?"),
            "povm_samples": (500, "int")}


def _imaging_schema(p: dict) -> dict:
    return {"u_min": (-8.0, "float"), "u_max": (8.0, "float"), "n_points": (257, "int"),
            "sigma": (1.0, "float"), "eps": (0.1, "float"), "xbar": (0.0, "float"),
            "d": (0.01, "float"), "nu": (1.0, "float"), "rel_tol": (0.01, "float")}


def _uhlmann_schema(p: dict) -> dict:
    return {"suite_seed": (7, "int"), "count": (6, "int"), "dt": (1e-4, "float"),
            "draws": (200, "int"), "opt_budget": (20000, "int"), "pairs_seed": (11, "int")}


def _oracle_schema(p: dict) -> dict:
    return {"suite": ("dephasing", "str"), "suite_seed": (2024, "int"), "count": (12, "int"),
            "t": (0.5, "float"), "n_bins": (128, "int"), "steps": (400, "int"),
            "rel_tol": (0.01, "float"), "raw_tol": (0.03, "float")}


SCHEMAS: dict[str, Callable[[dict], dict]] = {
    "qfi": _qfi_schema, "rpm": _rpm_schema, "scaling": _scaling_schema, "pauli": _pauli_schema,
    "imaging": _imaging_schema, "uhlmann": _uhlmann_schema, "oracle-check": _oracle_schema,
}


def _coerce(key: str, value, kind: str):
    if value is None:
        if kind.endswith("?"):
            return None
        raise ConfigError(f"{key}: null not allowed")
    base = kind.rstrip("?")
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if base in ("int", "float"):
        return _number(key, value, base)
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty list, got {value!r}")
    return [_number(f"{key}[{i}]", v, base[:-1]) for i, v in enumerate(value)]


def _number(key, value, base):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if base == "int":
        if float(value) != int(value):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    output_dir: str = "lindqfi-out"
    format: str = "csv"
    params: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "output_dir": self.output_dir,
                "format": self.format, "params": dict(self.params)}


def validate(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for k in raw:
        if k not in TOP_KEYS:
            raise ConfigError(f"unknown key {k!r}")
    sub = raw.get("subcommand")
    if sub not in SCHEMAS:
        raise ConfigError(f"subcommand: expected one of {list(SUBCOMMANDS)}, got {sub!r}")
    seed = _number("seed", raw.get("seed", 0), "int")
    if seed < 0:
        raise ConfigError("seed: must be nonnegative")
    out = _coerce("output_dir", raw.get("output_dir", "lindqfi-out"), "str")
    fmt = raw.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"format: expected one of {list(FORMATS)}, got {fmt!r}")
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise ConfigError("params: expected an object")
    schema = SCHEMAS[sub](given)
    for k in given:
        if k not in schema:
            raise ConfigError(f"unknown key {k!r} in params for {sub}")
    params = {k: _coerce(f"params.{k}", given.get(k, default), kind)
              for k, (default, kind) in schema.items()}
    return RunConfig(sub, seed, out, fmt, params)


def load_config_text(text: str, source: str = "<config>") -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None


def parse_config(path: Optional[str] = None, subcommand: Optional[str] = None,
                 overrides: Optional[dict] = None, param_overrides: Optional[dict] = None) -> RunConfig:
    """Read ``path`` (if any), apply flag overrides, validate and fill defaults."""
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = load_config_text(p.read_text(), str(p))
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
    if subcommand is not None:
        if raw.get("subcommand", subcommand) != subcommand:
            raise ConfigError(f"subcommand {subcommand!r} does not match config {raw['subcommand']!r}")
        raw["subcommand"] = subcommand
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    if param_overrides:
        params = dict(raw.get("params", {}))
        params.update(param_overrides)
        raw["params"] = params
    return validate(raw)


def echo_text(config: RunConfig) -> str:
    return json.dumps(config.echo(), indent=2) + "\n"


def derive_seed(master: int, module: str, index: int = 0) -> int:
    """Sub-seed from (master, module, index); stable across platforms and runs."""
    h = hashlib.sha256(f"{master}:{module}:{index}".encode()).digest()
    return int.from_bytes(h[:8], "little")


# ---------------------------------------------------------------- reports

@dataclass
class RunReport:
    config: RunConfig
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)      # name -> (columns, rows)
    extras: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def check(self, name: str, value, reference, tolerance, ok: bool, relation: str = "abs"):
        self.checks.append({"name": name, "value": _plain(value), "reference": _plain(reference),
                            "tolerance": _plain(tolerance), "relation": relation, "pass": bool(ok)})

    def table(self, name: str, columns, rows):
        self.tables[name] = (list(columns), [list(r) for r in rows])

    def summary(self) -> dict:
        return {"subcommand": self.config.subcommand, "config": self.config.echo(),
                "passed": self.passed, "checks": self.checks, "results": _plain(self.extras)}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_outputs(report: RunReport) -> list:
    out = Path(report.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    (out / "config.json").write_text(echo_text(report.config))
    written.append("config.json")
    if report.config.format == "csv":
        for name, (cols, rows) in report.tables.items():
            (out / f"{name}.csv").write_text(csv_text(cols, rows))
            written.append(f"{name}.csv")
    else:
        doc = {name: {"columns": cols, "rows": _plain(rows)} for name, (cols, rows) in report.tables.items()}
        (out / "results.json").write_text(json.dumps(doc, indent=2) + "\n")
        written.append("results.json")
    for name, text in report.extras.pop("_files", {}).items():
        (out / name).write_text(text)
        written.append(name)
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n")
    written.append("summary.json")
    return written


# ---------------------------------------------------------------- runners

def _rel(a, b, scale):
    return float(abs(a - b) / scale) if scale > 0 else float(abs(a - b))


def _fd_drho(model, psi, theta, t, steps, h):
    from .model import propagate
    out = []
    for a in range(model.n_params):
        e = np.zeros(model.n_params)
        e[a] = h
        plus = propagate(psi, model, theta + e, t, steps).final
        minus = propagate(psi, model, theta - e, t, steps).final
        out.append((plus - minus) / (2 * h))
    return out


def _qfi_instance(p):
    from .linalg import SZ
    from .model import JumpBasis
    from .qfi import optimal_rate
    from .scenarios.common import rate_only_model
    from .scenarios.pauli import bell_probe, pauli_model
    from .scenarios.spin import collective_spin_model, ghz_state, product_up

    sc = p["scenario"]
    if sc == "dephasing":
        if p["probe"] not in ("plus", "zero"):
            raise ConfigError("params.probe: dephasing probes are 'plus' or 'zero'")
        model = rate_only_model(JumpBasis([SZ], ["Z"]), 1, name="dephasing")
        theta = np.array([p["gamma"]])
        psi = np.array([1, 1], dtype=complex) / np.sqrt(2) if p["probe"] == "plus" else np.array([1, 0], complex)
        return model, theta, psi
    if sc == "collective-spin":
        if len(p["gamma"]) != 3:
            raise ConfigError("params.gamma: need three rates (x, y, z)")
        model = collective_spin_model(p["N"], *p["gamma"])
        theta = model.meta["theta"]
        probes = {"ghz": lambda: ghz_state(p["N"]), "product": lambda: product_up(p["N"]),
                  "optimal": lambda: optimal_rate(model, theta)[1]}
        if p["probe"] not in probes:
            raise ConfigError(f"params.probe: expected one of {sorted(probes)}")
        return model, theta, probes[p["probe"]]()
    model = pauli_model(p["N"], p["rates"], memory=p["memory"])
    theta = model.meta["theta"]
    if p["memory"]:
        psi = bell_probe(p["N"])
    else:
        psi = np.zeros(2 ** p["N"], dtype=complex)
        psi[0] = 1.0
    return model, theta, psi


def run_qfi(cfg: RunConfig) -> RunReport:
    from .qfi import eigenrate_precision_bound, sld_qfi
    from .qfi import qfi_integrate

    p = cfg.params
    rep = RunReport(cfg)
    model, theta, psi = _qfi_instance(p)
    t = p["t"]
    q = qfi_integrate(model, psi, theta, t, steps=p["steps"])
    f = q.entries
    d = model.n_params
    rep.table("qfi", ["a", "b", "value"], [(a, b, f[a, b]) for a in range(d) for b in range(d)])
    rep.table("flow", ["time", "trace_flow"], [(tt, np.trace(fl)) for tt, fl in zip(q.trajectory.times, q.flows)])
    rep.check("flow_cap", float(np.trace(f)), q.cap, 1e-8, np.trace(f) <= q.cap * (1 + 1e-8), "<=")
    diag_b = eigenrate_precision_bound(model, theta, t)
    ratio = float(np.max(np.diag(f) / diag_b))
    rep.check("eigenrate_bound", ratio, 1.0, 1e-8, ratio <= 1 + 1e-8, "<=")
    drho = _fd_drho(model, psi, theta, t, p["steps"], p["fd_step"])
    sld = sld_qfi(q.trajectory.final, drho).entries
    gap = float(np.min(np.linalg.eigvalsh(f - sld)))
    rep.check("sld_monotonicity", gap, 0.0, 1e-7, gap >= -1e-7, ">=")
    if p["scenario"] == "dephasing":
        exact = t / p["gamma"]
        rep.check("dephasing_closed_form", float(f[0, 0]), exact, 1e-8,
                  _rel(f[0, 0], exact, exact) <= 1e-8, "rel")
    rep.extras = {"fisher": f, "sld_fisher": sld, "cap": q.cap}
    return rep


def run_rpm(cfg: RunConfig) -> RunReport:
    from .rpm import CountRecord, mle_rates, poisson_means, rpm_fisher, sample_count_trials
    from .scenarios.pauli import bell_design

    p = cfg.params
    rep = RunReport(cfg)
    model, design = bell_design(p["N"], p["rates"])
    theta = model.meta["theta"]
    T = p["T"]
    fisher = rpm_fisher(design, model, theta, T).entries
    mu = design.weights
    expect = T * np.diag(mu / theta)
    dev = float(np.max(np.abs(fisher - expect)) / np.max(np.abs(expect)))
    rep.check("fisher_closed_form", dev, 0.0, 1e-10, dev <= 1e-10, "rel")
    crb = np.diag(np.linalg.inv(fisher))
    files = {}
    if p["counts_file"] is not None:
        path = Path(p["counts_file"])
        if not path.is_file():
            raise ConfigError(f"params.counts_file: not found: {path}")
        try:
            rec = CountRecord.from_text(path.read_text())
        except ValueError as e:
            raise ConfigError(f"params.counts_file: {e}") from None
        if rec.R != len(theta):
            raise ConfigError(f"params.counts_file: record has R={rec.R}, model has {len(theta)}")
        est = mle_rates(rec, mu, rec.T)
        rep.table("estimate", ["channel", "label", "gamma_true", "gamma_hat", "crb_std"],
                  [(k + 1, design.labels[k], theta[k], est.gamma_hat[k],
                    np.sqrt(theta[k] / (rec.T * mu[k]))) for k in range(len(theta))])
        rep.extras = {"gamma_hat": est.gamma_hat}
        return rep
    seed = derive_seed(cfg.seed, "rpm")
    means = poisson_means(design, model, theta, T)
    counts = sample_count_trials(means, p["trials"], seed)
    est = mle_rates(counts, mu, T)
    var = np.diag(est.covariance)
    ratio = var / crb
    rows = [(k + 1, design.labels[k], theta[k], mu[k], est.gamma_hat[k], var[k], crb[k], ratio[k])
            for k in range(len(theta))]
    rep.table("covariance", ["channel", "label", "gamma", "mu", "mean_estimate", "variance", "crb", "ratio"], rows)
    for k in range(len(theta)):
        rep.check(f"variance_ratio_{design.labels[k]}", float(ratio[k]), 1.0, p["ratio_tol"],
                  abs(ratio[k] - 1) <= p["ratio_tol"])
    pooled = CountRecord(counts.sum(axis=0), T * p["trials"], seed)
    files["counts.txt"] = pooled.to_text()
    rep.extras = {"crb": crb, "variance": var, "_files": files}
    return rep


def _scaling_family(p) -> Callable[[int], float]:
    from .scenarios.multipole import dicke_choi_fisher, scalar_channel, spherical_tensors
    from .scenarios.spin import optimal_collective_rate, separable_rate
    from .scenarios.toys import toy_values

    fam, k, g = p["family"], p["k"], p["gamma"]
    table = {
        "optimal-collective": lambda n: optimal_collective_rate(n, g, "SYMMETRIC")[0],
        "separable": lambda n: separable_rate(n, g, "SYMMETRIC"),
        "tensor-norm": lambda n: spherical_tensors(n).norm(k),
        "dicke-choi": lambda n: float(np.mean(dicke_choi_fisher(n, k))),
        "scalar-channel": lambda n: scalar_channel(n).variance,
        "toy-dense": lambda n: toy_values(n, "dense")[0],
        "toy-sparse": lambda n: toy_values(n, "sparse")[0],
    }
    return table[fam]


def run_scaling(cfg: RunConfig, workers: Optional[int] = None) -> RunReport:
    from .scenarios.scaling import local_slope, scaling_study

    p = cfg.params
    rep = RunReport(cfg)
    if p["reference"] is None:
        raise ConfigError("params.reference: required for this family")
    sizes = p["sizes"]
    if p["family"] in ("tensor-norm", "dicke-choi") and any(p["k"] > n for n in sizes):
        raise ConfigError("params.k: rank exceeds the smallest size")
    try:
        sr = scaling_study(_scaling_family(p), sizes, label=p["family"], workers=workers)
    except ValueError as e:
        raise ConfigError(f"params.sizes: {e}") from None
    rep.table("scaling", ["size", "value"], sr.rows())
    c = sr.check(p["reference"], p["tolerance"])
    rep.check(f"{p['family']}_exponent", c["value"], c["reference"], c["tolerance"], c["pass"])
    rep.extras = {"exponent": sr.fitted_exponent, "residual": sr.fit_residual,
                  "local_slope": local_slope(sr.sizes, sr.values)}
    return rep


def run_pauli(cfg: RunConfig) -> RunReport:
    from .scenarios.pauli import bell_fisher, memory_advantage, no_memory_bound_check, pauli_labels

    p = cfg.params
    rep = RunReport(cfg)
    n, T = p["N"], p["T"]
    labels = pauli_labels(n)
    rates = np.ones(len(labels)) if p["rates"] is None else np.asarray(p["rates"])
    if rates.size != len(labels):
        raise ConfigError(f"params.rates: expected {len(labels)} rates for N={n}")
    f = bell_fisher(n, rates, T)
    rank = int(np.linalg.matrix_rank(f))
    rep.check("bell_rank", rank, len(labels), 0, rank == len(labels))
    dev = float(np.max(np.abs(np.diag(f) - T / rates)) / np.max(T / rates))
    rep.check("bell_diag_closed_form", dev, 0.0, 1e-10, dev <= 1e-10, "rel")
    rep.table("bell_fisher", ["label", "gamma", "fisher_diag", "expected"],
              [(lab, rates[i], f[i, i], T / rates[i]) for i, lab in enumerate(labels)])
    if n <= 2:
        nm = no_memory_bound_check(n, p["povm_samples"], derive_seed(cfg.seed, "pauli-no-memory"), rates, T)
        rep.check("no_memory_trace_cap", float(nm.traces.max()), nm.cap, 1e-8, nm.passed, "<=")
        rep.table("no_memory", ["sample", "trace_fisher"], list(enumerate(nm.traces)))
        rep.extras["no_memory_worst_ratio"] = nm.worst_ratio
    if n >= 2 and p["rates"] is None:
        adv = memory_advantage(n, T)
        rep.check("memory_advantage_ratio", adv["ratio"], adv["expected"], 1e-10,
                  abs(adv["ratio"] - adv["expected"]) <= 1e-10)
        rep.extras["memory_advantage"] = adv
    return rep


def run_imaging(cfg: RunConfig) -> RunReport:
    from .scenarios.imaging import ImagingGrid, imaging_eigenvalues, imaging_limit, imaging_qfi

    p = cfg.params
    rep = RunReport(cfg)
    try:
        grid = ImagingGrid(p["u_min"], p["u_max"], p["n_points"], p["sigma"], p["eps"], p["xbar"], p["d"])
    except ValueError as e:
        raise ConfigError(f"params: {e}") from None
    q = imaging_qfi(grid, p["nu"]).entries
    ref = imaging_limit(grid, p["nu"])
    rep.table("qfi", ["a", "b", "value", "reference"],
              [(a, b, q[a, b], ref[a, b]) for a in range(2) for b in range(2)])
    for a, name in enumerate(("xbar", "d")):
        err = _rel(q[a, a], ref[a, a], ref[a, a])
        rep.check(f"qfi_{name}", float(q[a, a]), float(ref[a, a]), p["rel_tol"], err <= p["rel_tol"], "rel")
    scale = p["nu"] * p["eps"] / p["sigma"] ** 2
    rep.check("qfi_off_diagonal", float(abs(q[0, 1])), 0.0, 1e-6 * scale, abs(q[0, 1]) < 1e-6 * scale)
    num, exact = imaging_eigenvalues(grid)
    dev = float(np.max(np.abs(num - exact)))
    rep.check("gamma_eigenvalues", dev, 0.0, 1e-6, dev <= 1e-6)
    rep.table("eigenvalues", ["index", "numerical", "analytic"], [(i, num[i], exact[i]) for i in range(2)])
    return rep


def run_uhlmann(cfg: RunConfig) -> RunReport:
    from .scenarios.suites import extremality_pairs, random_model, random_state, uhlmann_suite
    from .uhlmann import analyze, brute_force_gap, canonical_extremality_check, gap_tolerance

    p = cfg.params
    rep = RunReport(cfg)
    dt = p["dt"]
    tol = gap_tolerance(dt)
    rows, worst_gap, worst_lyap = [], 0.0, 0.0
    for i, inst in enumerate(uhlmann_suite(p["suite_seed"], p["count"])):
        u = np.ones(inst.model.n_params)
        _, su, _ = analyze(inst.psi0, inst.model, inst.theta, u, dt=dt)
        bf = brute_force_gap(inst.psi0, inst.model, inst.theta, u, dt=dt, opt_budget=p["opt_budget"],
                             seed=derive_seed(cfg.seed, "uhlmann-bf", i) % 2 ** 32)
        diff = abs(bf.gap - su.gap_metric)
        worst_gap = max(worst_gap, diff)
        worst_lyap = max(worst_lyap, su.lyapunov_residual)
        rows.append((inst.name, su.gap_metric, bf.gap, diff, su.lyapunov_residual, bf.evaluations))
    rep.table("gaps", ["instance", "closed_form", "brute_force", "abs_diff", "lyapunov_residual", "evaluations"], rows)
    rep.check("brute_force_vs_closed_form", worst_gap, 0.0, tol, worst_gap <= tol)
    rng = np.random.default_rng(derive_seed(cfg.seed, "uhlmann-draws"))
    min_gap = np.inf
    for _ in range(p["draws"]):
        kind = ("rate-only", "rotating")[int(rng.integers(2))]
        dim, r = int(rng.integers(2, 5)), int(rng.integers(1, 4))
        m = random_model(rng, kind, dim, r, 1)
        th = rng.normal(scale=0.3, size=1)
        _, su, _ = analyze(random_state(rng, dim), m, th, [1.0], dt=dt)
        min_gap = min(min_gap, su.gap_metric)
        worst_lyap = max(worst_lyap, su.lyapunov_residual)
    rep.check("metric_gap_nonnegative", float(min_gap), 0.0, 1e-12, min_gap >= -1e-12, ">=")
    rep.check("lyapunov_residual", worst_lyap, 0.0, 1e-9, worst_lyap < 1e-9, "<=")
    cls_rows, ok = [], True
    for inst, expected in extremality_pairs(p["pairs_seed"]):
        mom, su, _ = analyze(inst.psi0, inst.model, inst.theta, [1.0], dt=dt)
        got, viol = canonical_extremality_check(mom, su.F_u)
        ok = ok and got == expected
        cls_rows.append((inst.name, expected, got, viol, np.linalg.norm(su.Xi_star)))
    rep.table("extremality", ["instance", "expected", "classified", "violation", "xi_star_norm"], cls_rows)
    rep.check("extremality_classification", sum(r[1] == r[2] for r in cls_rows), len(cls_rows), 0, ok)
    return rep


def run_oracle(cfg: RunConfig) -> RunReport:
    from .collisional import richardson_fisher
    from .qfi import qfi_integrate
    from .scenarios.suites import dephasing_suite, oracle_suite

    p = cfg.params
    rep = RunReport(cfg)
    if p["suite"] == "dephasing":
        suite = dephasing_suite()
    elif p["suite"] == "oracle":
        suite = oracle_suite(p["suite_seed"], p["count"], p["t"])
    else:
        raise ConfigError("params.suite: expected 'dephasing' or 'oracle'")
    if p["n_bins"] < 4 or p["n_bins"] % 2:
        raise ConfigError("params.n_bins: must be an even integer >= 4")
    rows, worst_x, worst_raw = [], 0.0, 0.0
    for inst in suite:
        f = qfi_integrate(inst.model, inst.psi0, inst.theta, inst.t, steps=p["steps"]).entries
        ext, fine, _ = richardson_fisher(inst.model, inst.theta, inst.psi0, inst.t, p["n_bins"])
        d = f.shape[0]
        for a in range(d):
            for b in range(d):
                scale = np.sqrt(f[a, a] * f[b, b])
                ex, raw = _rel(ext[a, b], f[a, b], scale), _rel(fine[a, b], f[a, b], scale)
                worst_x, worst_raw = max(worst_x, ex), max(worst_raw, raw)
                rows.append((inst.name, a, b, f[a, b], fine[a, b], ext[a, b], raw, ex))
    rep.table("oracle", ["instance", "a", "b", "closed_form", "oracle_raw", "oracle_extrapolated",
                         "rel_err_raw", "rel_err_extrapolated"], rows)
    rep.check("extrapolated_agreement", worst_x, 0.0, p["rel_tol"], worst_x <= p["rel_tol"], "rel")
    rep.check("raw_agreement", worst_raw, 0.0, p["raw_tol"], worst_raw <= p["raw_tol"], "rel")
    return rep


RUNNERS = {"qfi": run_qfi, "rpm": run_rpm, "scaling": run_scaling, "pauli": run_pauli,
           "imaging": run_imaging, "uhlmann": run_uhlmann, "oracle-check": run_oracle}


def run(config: RunConfig, workers: Optional[int] = None, write: bool = True) -> RunReport:
    t0 = time.perf_counter()
    if config.subcommand == "scaling":
        rep = run_scaling(config, workers)
    else:
        rep = RUNNERS[config.subcommand](config)
    rep.wall_clock = time.perf_counter() - t0
    if write:
        write_outputs(rep)
    return rep


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lindqfi", description="Fisher-information limits for dissipation rates.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON run config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", dest="output_dir")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--n-bins", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--sizes", help="comma-separated sizes, e.g. 2,4,6,8")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a params entry; VALUE is parsed as JSON when possible")
    ap.add_argument("--workers", type=int, help="thread count for scaling sweeps (output does not depend on it)")
    ap.add_argument("--print-config", action="store_true", help="echo the filled config and exit")
    return ap


def _param_overrides(args) -> dict:
    out = {}
    if args.n_bins is not None:
        out["n_bins"] = args.n_bins
    if args.trials is not None:
        out["trials"] = args.trials
    if args.sizes is not None:
        try:
            out["sizes"] = [int(s) for s in args.sizes.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"--sizes: expected comma-separated integers, got {args.sizes!r}") from None
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set: expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.subcommand,
                           {"seed": args.seed, "output_dir": args.output_dir, "format": args.format},
                           _param_overrides(args))
        if args.print_config:
            sys.stdout.write(echo_text(cfg))
            return 0
        rep = run(cfg, workers=args.workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericGuard as e:
        print(f"numeric guard ({type(e).__name__}): {e}", file=sys.stderr)
        return 3
    except LindqfiError as e:
        # input-shape problems (bad index, odd N, dimension mismatch) are config problems
        print(f"config error ({type(e).__name__}): {e}", file=sys.stderr)
        return 2
    for c in rep.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: value={c['value']} "
              f"reference={c['reference']} tolerance={c['tolerance']}")
    print(f"wrote {cfg.output_dir}/summary.json ({rep.wall_clock:.2f} s)", file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
