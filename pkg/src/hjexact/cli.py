"""Batch front end.

Usage::

    hjexact run --config run.json --out results/ [--jobs 'cf-*'] [--workers 4]
    hjexact families
    hjexact version

A run writes ``report.json`` (every report, plus a ``meta`` block that is the
only non-deterministic content), ``summary.json`` with pass/fail counts, and
one CSV per dump job or propagation snapshot series.
"""

from __future__ import annotations

import argparse
import fnmatch
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigParse, HJExactError
from .evolve import (
    PacketSpec,
    PropagatorConfig,
    Quadrature,
    build_packet,
    compare_exact,
    crank_nicolson_1d,
    expand_and_reconstruct,
    gaussian_state,
)
from .grid import Field, GridSpec, sample, write_field_csv
from .model import FAMILIES, PhysConsts, family_from_json
from .synth import Synthesized, gauge_from_json, matching_catalog, potential_from_json
from .verify import (
    CHECKS,
    equivalence_identity_check,
    hj_residual,
    laplace_residual,
    operator_eigencheck,
    refinement_study,
    schrodinger_residual,
)

log = logging.getLogger("hjexact")

REFINE_RATIO_WINDOW = (3.4, 4.6)

# -- strict config parsing ---------------------------------------------------


def _keys(obj, path, required=(), optional=()):
    if not isinstance(obj, dict):
        raise ConfigParse(path, f"expected an object, got {type(obj).__name__}")
    for key in required:
        if key not in obj:
            raise ConfigParse(f"{path}.{key}", "missing required key")
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise ConfigParse(f"{path}.{key}", f"unknown key (allowed: {', '.join(sorted(allowed))})")
    return obj


def _number(obj, path):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigParse(path, "expected a number")
    return float(obj)


def _list(obj, path):
    if not isinstance(obj, list):
        raise ConfigParse(path, "expected a list")
    return obj


def _consts(obj, path, base=None):
    base = base or PhysConsts()
    if obj is None:
        return base
    _keys(obj, path, optional=("hbar", "m", "e", "c"))
    vals = base.to_json()
    vals.update({k: _number(v, f"{path}.{k}") for k, v in obj.items()})
    try:
        return PhysConsts(**vals)
    except ValueError as exc:
        raise ConfigParse(path, str(exc)) from None


def _family(obj, path):
    _keys(obj, path, required=("family",), optional=("params", "consts"))
    if obj["family"] not in FAMILIES:
        raise ConfigParse(f"{path}.family", f"unknown family {obj['family']!r}")
    try:
        return family_from_json(obj)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigParse(f"{path}.params", str(exc)) from None


def _grid(obj, path):
    _keys(obj, path, required=("axes",))
    try:
        return GridSpec(tuple(tuple(a) for a in _list(obj["axes"], f"{path}.axes")))
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"{path}.axes", str(exc)) from None


def _potential(obj, path, family):
    if obj is None or obj == "synthesized":
        return None
    if obj == "matching":
        pot = matching_catalog(family)
        if pot is None:
            raise ConfigParse(path, f"no catalog potential matches {family.tag}")
        return pot
    try:
        return potential_from_json(obj, family)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigParse(path, str(exc)) from None


def _quadrature(obj, path):
    _keys(obj, path, required=("Pmin", "Pmax", "npts"), optional=("rule",))
    try:
        return Quadrature(_number(obj["Pmin"], f"{path}.Pmin"), _number(obj["Pmax"], f"{path}.Pmax"),
                          int(obj["npts"]), obj.get("rule", "trapezoid"))
    except ValueError as exc:
        raise ConfigParse(path, str(exc)) from None


@dataclass
class Job:
    name: str
    kind: str
    consts: PhysConsts
    spec: dict


@dataclass
class RunConfig:
    version: int
    consts: PhysConsts
    jobs: list


JOB_KEYS = {
    "verify": (("family", "checks", "grids", "times"), ("potential", "gauge", "order", "consts")),
    "propagate": (("packet", "grid", "dt", "T", "region"),
                  ("potential", "tolerance", "norm_tolerance", "refine", "snapshot_every", "consts")),
    "expand": (("target", "family", "t", "grid", "quadrature"), ("tolerance", "consts")),
    "dump": (("family", "what", "grid", "times"), ("potential", "gauge", "consts")),
}


def _parse_job(obj, path, consts):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigParse(f"{path}.kind", "missing required key")
    kind = obj["kind"]
    if kind not in JOB_KEYS:
        raise ConfigParse(f"{path}.kind", f"unknown job kind {kind!r}")
    required, optional = JOB_KEYS[kind]
    _keys(obj, path, required=("name", "kind") + required, optional=optional)
    jc = _consts(obj.get("consts"), f"{path}.consts", consts)
    spec = {}
    if kind in ("verify", "dump", "expand"):
        spec["family"] = _family(obj["family"], f"{path}.family")
        # consts carried by a family description override the job's
        jc = _consts(obj["family"].get("consts"), f"{path}.family.consts", jc)
    if kind in ("verify", "dump"):
        spec["gauge"] = gauge_from_json(obj.get("gauge"))
        spec["potential"] = _potential(obj.get("potential"), f"{path}.potential", spec["family"])
        spec["times"] = [_number(t, f"{path}.times[{i}]") for i, t in enumerate(_list(obj["times"], f"{path}.times"))]
    if kind == "verify":
        checks = _list(obj["checks"], f"{path}.checks")
        for i, chk in enumerate(checks):
            if chk not in CHECKS:
                raise ConfigParse(f"{path}.checks[{i}]", f"unknown check {chk!r}")
        spec["checks"] = checks
        spec["grids"] = [_grid(g, f"{path}.grids[{i}]") for i, g in enumerate(_list(obj["grids"], f"{path}.grids"))]
        if not spec["grids"]:
            raise ConfigParse(f"{path}.grids", "at least one grid is required")
        spec["order"] = int(obj.get("order", 2))
        if spec["order"] not in (2, 4):
            raise ConfigParse(f"{path}.order", "order must be 2 or 4")
    elif kind == "dump":
        if obj["what"] not in ("S", "V", "psi"):
            raise ConfigParse(f"{path}.what", "expected one of S, V, psi")
        spec["what"] = obj["what"]
        spec["grid"] = _grid(obj["grid"], f"{path}.grid")
    elif kind == "propagate":
        pk = _keys(obj["packet"], f"{path}.packet", required=("family", "P0", "sigmaP", "quadrature"))
        fam = _family(pk["family"], f"{path}.packet.family")
        try:
            spec["packet"] = PacketSpec(fam, _number(pk["P0"], f"{path}.packet.P0"),
                                        _number(pk["sigmaP"], f"{path}.packet.sigmaP"),
                                        _quadrature(pk["quadrature"], f"{path}.packet.quadrature"))
        except ValueError as exc:
            raise ConfigParse(f"{path}.packet", str(exc)) from None
        spec["potential"] = _potential(obj.get("potential", "matching"), f"{path}.potential", fam) or Synthesized(fam)
        spec["grid"] = _grid(obj["grid"], f"{path}.grid")
        try:
            spec["config"] = PropagatorConfig(_number(obj["dt"], f"{path}.dt"), _number(obj["T"], f"{path}.T"),
                                              snapshot_every=obj.get("snapshot_every"))
        except ValueError as exc:
            raise ConfigParse(path, str(exc)) from None
        region = _list(obj["region"], f"{path}.region")
        if len(region) != 2:
            raise ConfigParse(f"{path}.region", "expected [lo, hi]")
        spec["region"] = tuple(_number(r, f"{path}.region") for r in region)
        spec["tolerance"] = _number(obj.get("tolerance", 1e-2), f"{path}.tolerance")
        spec["norm_tolerance"] = _number(obj.get("norm_tolerance", 1e-10), f"{path}.norm_tolerance")
        spec["refine"] = bool(obj.get("refine", False))
    elif kind == "expand":
        tgt = _keys(obj["target"], f"{path}.target", required=("kind",), optional=("x0", "sigma", "p0"))
        if tgt["kind"] != "gaussian":
            raise ConfigParse(f"{path}.target.kind", "only 'gaussian' targets are supported")
        spec["target"] = {k: _number(tgt.get(k, d), f"{path}.target.{k}")
                          for k, d in (("x0", 0.0), ("sigma", 1.0), ("p0", 0.0))}
        spec["t"] = _number(obj["t"], f"{path}.t")
        spec["grid"] = _grid(obj["grid"], f"{path}.grid")
        spec["quadrature"] = _quadrature(obj["quadrature"], f"{path}.quadrature")
        spec["tolerance"] = _number(obj.get("tolerance", 1e-6), f"{path}.tolerance")
    return Job(obj["name"], kind, jc, spec)


def parse_config(obj) -> RunConfig:
    _keys(obj, "$", required=("version", "jobs"), optional=("consts",))
    if obj["version"] != 1:
        raise ConfigParse("$.version", f"unsupported version {obj['version']!r}")
    consts = _consts(obj.get("consts"), "$.consts")
    jobs = [_parse_job(j, f"$.jobs[{i}]", consts) for i, j in enumerate(_list(obj["jobs"], "$.jobs"))]
    names = [j.name for j in jobs]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigParse("$.jobs", f"duplicate job names: {dupes}")
    return RunConfig(1, consts, jobs)


# -- job execution -----------------------------------------------------------


@dataclass
class JobResult:
    name: str
    kind: str
    passed: bool
    reports: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    error: str | None = None

    def to_json(self):
        out = {"name": self.name, "kind": self.kind, "pass": self.passed, "reports": self.reports}
        if self.error:
            out["error"] = self.error
        if self.files:
            out["files"] = sorted(self.files)
        return out


def _run_verify(job: Job) -> JobResult:
    s, c = job.spec, job.consts
    fam, gauge, order = s["family"], s["gauge"], s["order"]
    potential = s["potential"] or Synthesized(fam, gauge)
    grids = s["grids"]
    refine = len(grids) >= 3
    reports = []

    def fd(check_fn):
        if refine:
            study = refinement_study(check_fn, grids, order)
            reports.extend(r.to_json() | {"study_order": study.order_estimate} for r in study.reports)
        else:
            reports.extend(check_fn(g).to_json() for g in grids)

    for t in s["times"]:
        for chk in s["checks"]:
            if chk == "HamiltonJacobi":
                reports.extend(hj_residual(fam, potential, gauge, g, t, c).to_json() for g in grids)
            elif chk == "Laplace":
                fd(lambda g: laplace_residual(fam, g, t, order, c))
            elif chk == "Schrodinger":
                fd(lambda g: schrodinger_residual(fam, potential, gauge, g, t, order, c))
            elif chk == "EquivalenceIdentity":
                fd(lambda g: equivalence_identity_check(fam, g, t, order, c))
            elif chk == "OperatorEigen":
                for op in fam.conserved_operators(c):
                    reports.extend(operator_eigencheck(op, fam, g, t, order, c, analytic=True).to_json()
                                   for g in grids)
                    fd(lambda g, op=op: operator_eigencheck(op, fam, g, t, order, c))
    return JobResult(job.name, job.kind, all(r["pass"] for r in reports), reports)


def _run_propagate(job: Job) -> JobResult:
    s, c = job.spec, job.consts
    spec, grid, cfg = s["packet"], s["grid"], s["config"]
    snapshots = io.StringIO()
    fields_, times = [], []

    def observer(t, psi):
        fields_.append(Field(grid, psi))
        times.append(t)

    def one(g, conf, obs=None):
        psi0 = build_packet(spec, c, g, cfg.t0)
        out = crank_nicolson_1d(psi0, s["potential"], c, conf, obs)
        return compare_exact(out, spec, c, conf.t_end, s["region"], psi0)

    rep = one(grid, cfg, observer if cfg.snapshot_every else None)
    entry = rep.to_json() | {"h": grid.h[0], "dt": cfg.dt}
    entry["pass"] = rep.l2_rel <= s["tolerance"] and rep.norm_drift <= s["norm_tolerance"]
    reports = [entry]
    if s["refine"]:
        fine = PropagatorConfig(cfg.dt / 2, cfg.T, cfg.t0)
        rep2 = one(grid.refined(2), fine)
        ratio = rep.l2_rel / rep2.l2_rel if rep2.l2_rel > 0 else math.inf
        lo, hi = REFINE_RATIO_WINDOW
        reports.append(rep2.to_json() | {
            "h": grid.refined(2).h[0], "dt": fine.dt, "ratio": ratio,
            "ratio_window": list(REFINE_RATIO_WINDOW),
            "pass": lo <= ratio <= hi and rep2.norm_drift <= s["norm_tolerance"],
        })
    files = {}
    if fields_:
        write_field_csv(snapshots, fields_, times, ("re", "im"))
        files[f"{job.name}_snapshots.csv"] = snapshots.getvalue()
    return JobResult(job.name, job.kind, all(r["pass"] for r in reports), reports, files)


def _run_expand(job: Job) -> JobResult:
    s, c = job.spec, job.consts
    tgt = s["target"]
    target = gaussian_state(s["grid"], tgt["x0"], tgt["sigma"], tgt["p0"], c.hbar)
    exp = expand_and_reconstruct(target, s["family"], c, s["t"], s["quadrature"])
    peak = int(np.argmax(np.abs(exp.coeffs)))
    rep = {"l2_rel_error": exp.l2_rel_error, "tolerance": s["tolerance"],
           "peak_P": float(exp.P_nodes[peak]), "pass": exp.l2_rel_error <= s["tolerance"]}
    return JobResult(job.name, job.kind, rep["pass"], [rep])


def _run_dump(job: Job) -> JobResult:
    s, c = job.spec, job.consts
    fam, grid = s["family"], s["grid"]
    potential = s["potential"] or Synthesized(fam, s["gauge"])
    if s["what"] == "S":
        fn, names = (lambda X, t: fam.evaluate(X, t, c).S), ("S",)
    elif s["what"] == "V":
        fn, names = (lambda X, t: potential.evaluate(X, t, c)), ("V",)
    else:
        fn, names = (lambda X, t: np.exp(1j * fam.evaluate(X, t, c).S / c.hbar)), ("re", "im")
    fields_ = [sample(fn, grid, t) for t in s["times"]]
    buf = io.StringIO()
    write_field_csv(buf, fields_, s["times"], names)
    return JobResult(job.name, job.kind, True, [], {f"{job.name}.csv": buf.getvalue()})


RUNNERS = {"verify": _run_verify, "propagate": _run_propagate, "expand": _run_expand, "dump": _run_dump}


def execute(job: Job) -> JobResult:
    log.info("running job %s (%s)", job.name, job.kind)
    try:
        return RUNNERS[job.kind](job)
    except HJExactError as exc:
        log.error("job %s failed: %s", job.name, exc)
        return JobResult(job.name, job.kind, False, error=f"{type(exc).__name__}: {exc}")


def _clean(obj):
    """Replace non-finite floats so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run(config: RunConfig, out_dir, job_filter: str | None = None, workers: int = 1) -> int:
    """Execute every job and write the reports; returns the process exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [j for j in config.jobs if job_filter is None or fnmatch.fnmatch(j.name, job_filter)]
    started = time.time()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute, jobs))
    else:
        results = [execute(j) for j in jobs]
    for res in results:
        for fname, body in sorted(res.files.items()):
            (out / fname).write_text(body, encoding="utf-8")
    n_pass = sum(r.passed for r in results)
    summary = {"pass": n_pass, "fail": len(results) - n_pass,
               "failed_jobs": [r.name for r in results if not r.passed]}
    report = {
        "jobs": [_clean(r.to_json()) for r in results],
        "meta": {"tool_version": __version__, "started_unix": started,
                 "elapsed_s": time.time() - started, "workers": workers},
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    log.info("%d passed, %d failed", summary["pass"], summary["fail"])
    return 0 if summary["fail"] == 0 else 1


# -- catalog listing ---------------------------------------------------------

FAMILY_TABLE = [
    ("Free1D", "P", "p", "0", ""),
    ("ConstantForce1D", "F != 0, P", "p - F t  (eigenvalue P)", "-F x", ""),
    ("GrowingForce1D", "k != 0, P", "p - k t^2/2  (eigenvalue P)", "-k t x", ""),
    ("GeneralLinear1D", "alpha(t), beta0", "p - (alpha(t) - alpha(0))  (eigenvalue alpha(0))",
     "-alpha'(t) x", "beta0 is a global phase"),
    ("AnalyticPoly2D", "coeffs c_j(t)", "none", "synthesized only", "S = Re sum_j c_j(t) z^j"),
    ("RepulsiveOscillator2D", "omega > 0, P1, P2",
     "e^{wt}(px - m w x)  (eigenvalue P1); e^{-wt}(py + m w y)  (eigenvalue P2)",
     "-(m w^2/2)(x^2 + y^2)", ""),
    ("LogCentral2D", "k > 0", "none", "-k/(x^2 + y^2)",
     "no free parameters, time-independent; singular at the origin"),
    ("Composite", "blocks of (family, axis offset)", "union of block operators",
     "sum of block potentials", "dimension <= 3"),
]


def list_families() -> str:
    lines = []
    for tag, params, ops, pot, note in FAMILY_TABLE:
        lines.append(tag)
        lines.append(f"  parameters: {params}")
        lines.append(f"  conserved operators: {ops}")
        lines.append(f"  potential: V = {pot}")
        if note:
            lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(prog="hjexact", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a run configuration", parents=[common])
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--out", required=True, type=Path)
    p_run.add_argument("--jobs", default=None, help="glob on job names")
    p_run.add_argument("--workers", type=int, default=1)
    sub.add_parser("families", help="list the catalog")
    sub.add_parser("version", help="print the version")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "families":
        sys.stdout.write(list_families())
        return 0
    if args.command == "version":
        print(__version__)
        return 0
    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
        config = parse_config(raw)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigParse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config, args.out, args.jobs, max(1, args.workers))


if __name__ == "__main__":
    raise SystemExit(main())
