"""Config-driven command line: certification, simulation, gamma sampling, demos.

Subcommands
-----------
fbopt certify      --config cfg.json --out DIR [--seed N]
fbopt simulate     --config cfg.json --out DIR [--seed N]
fbopt sample-gamma --config cfg.json --out DIR [--seed N]
fbopt demo academic|feeder --out DIR [--seed N]

Exit codes: 0 success, 2 certification infeasible, 3 runtime/plant failure,
64 config error. Every run writes ``manifest.json`` (config hash, seed,
library versions) so numeric artifacts are reproducible byte for byte.

Config schema (JSON)
--------------------
problem:
    objective: {H: [[..]], h: [..], eta: float,
                y_lower: [..]|null, y_upper: [..]|null,
                Q2: [[..]]|null, c2: [..]|null}
    model: {Pi: [[..]], Pi_w: [[..]]|null}
    feasible_set: {n_free: int, lower: [..], upper: [..],
                   blocks: [{kind: "disk_box", lower: [..], upper: [..],
                             radius: float}]}

plant (optional unless referenced):
    {type: "academic"} or {type: "feeder", file: "feeder.json"}

uncertainty:
    {type: "polytope", vertices: [[[..]], ...]}            direct J vertices
    {type: "polytope", plant_vertices: [[[..]], ...],      slope-pattern
     enumerate: true, cap: 4096}                           enumeration
    {type: "lft", kind: "oag"|"smooth",
     gamma: float                                          fixed bound, or
     sample_gamma: {count: int, safety: float,
                    w_lower: [..], w_upper: [..]}}         sampled bound
    The LFT nominal sensitivity is the problem's Pi unless the plant is a
    feeder, in which case its no-load linearization is used and must match.

certify: {mode: "maximize"|"check", rho: float|null, eps: float}

disturbance (simulate): {constant: [..]} or {series_csv: "w.csv"} or
    {overvoltage_series: {steps: int}}

algorithm (simulate):
    {tau: float|"auto", horizon: int, tol: float,
     run: ["oag", "gd", "uncontrolled"],
     u_start: [..],
     starts: {count: int, lower: [..], upper: [..]}|null,
     u_fixed: [..]|null}
    tau "auto" takes half the certified best step and requires a certify
    section.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import artifacts, certify, plants, sim
from .problem import ApproxModel, FeasibleSet, ObjectiveSpec, ProblemSpec
from .uncertainty import (PolytopeSet, build_oag_lft, build_oag_polytope,
                          build_smooth_output_lft)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_RUNTIME = 3
EXIT_CONFIG = 64


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"missing '{key}' in {where}")
    return cfg[key]


def _build_problem(cfg: dict) -> ProblemSpec:
    try:
        return ProblemSpec.from_json_dict(_require(cfg, "problem"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad problem section: {exc}") from exc


def _build_plant(cfg: dict, base_dir: Path):
    section = cfg.get("plant")
    if section is None:
        return None
    ptype = _require(section, "type", "plant")
    if ptype == "academic":
        return plants.AcademicPlant()
    if ptype == "feeder":
        path = Path(_require(section, "file", "plant"))
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"feeder file not found: {path}")
        try:
            return plants.load_feeder(path)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad feeder file {path}: {exc}") from exc
    raise ConfigError(f"unknown plant type {ptype!r}")


def _mat(x, name):
    try:
        return np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad matrix data in {name}: {exc}") from exc


def _build_uncertainty(cfg: dict, problem: ProblemSpec, plant, seed: int,
                       out_dir: Path | None):
    """Returns (kind, set, cone_or_None, gamma_info_or_None)."""
    section = _require(cfg, "uncertainty")
    utype = _require(section, "type", "uncertainty")
    o, mdl = problem.objective, problem.model
    if utype == "polytope":
        if "vertices" in section:
            polytope = PolytopeSet(tuple(_mat(V, "vertices")
                                         for V in section["vertices"]))
        elif "plant_vertices" in section:
            polytope = build_oag_polytope(
                o.H, mdl.Pi, o.eta,
                [_mat(V, "plant_vertices") for V in section["plant_vertices"]],
                cap=int(section.get("cap", 4096)))
        else:
            raise ConfigError("polytope uncertainty needs vertices or plant_vertices")
        return "polytope", polytope, None, None
    if utype == "lft":
        if isinstance(plant, plants.FeederModel):
            nominal = plants.linearize_nominal(plant)
            if not np.allclose(nominal, mdl.Pi, atol=1e-6):
                raise ConfigError("problem Pi must equal the feeder's no-load "
                                  "linearization for the LFT build")
        else:
            nominal = mdl.Pi
        gamma_info = None
        if "gamma" in section:
            gamma = float(section["gamma"])
        elif "sample_gamma" in section:
            if not isinstance(plant, plants.FeederModel):
                raise ConfigError("sample_gamma needs a feeder plant")
            sg = section["sample_gamma"]
            sampler = plants.operating_region_sampler(
                plant, _mat(_require(sg, "w_lower", "sample_gamma"), "w_lower"),
                _mat(_require(sg, "w_upper", "sample_gamma"), "w_upper"))
            est = plants.sample_gamma(plant, sampler,
                                      count=int(sg.get("count", 2000)),
                                      safety=float(sg.get("safety", 1.1)),
                                      seed=seed, nominal=nominal)
            gamma = est.gamma
            gamma_info = est
            if out_dir is not None:
                artifacts.write_table_csv(out_dir / "gamma_errors.csv",
                                          ["sample", "error"],
                                          list(enumerate(est.errors)))
                artifacts.plot_error_histogram(est.errors, est.gamma,
                                               out_dir / "gamma_errors.svg")
        else:
            raise ConfigError("lft uncertainty needs gamma or sample_gamma")
        kind = section.get("kind", "oag")
        if kind == "oag":
            lft, cone = build_oag_lft(o.H, mdl.Pi, nominal, o.eta, gamma)
        elif kind == "smooth":
            if o.Q2 is None:
                raise ConfigError("smooth LFT build needs an objective with Q2")
            lft, cone = build_smooth_output_lft(o.H, mdl.Pi, o.Q2, nominal, gamma)
        else:
            raise ConfigError(f"unknown lft kind {kind!r}")
        return "lft", lft, cone, gamma_info
    raise ConfigError(f"unknown uncertainty type {utype!r}")


def _run_certification(cfg: dict, problem: ProblemSpec, plant, seed: int,
                       out_dir: Path | None):
    kind, unc, cone, gamma_info = _build_uncertainty(cfg, problem, plant, seed, out_dir)
    section = cfg.get("certify", {})
    mode = section.get("mode", "maximize")
    rho = section.get("rho")
    eps = float(section.get("eps", 1e-6))
    partition = problem.feasible_set
    if kind == "polytope":
        outcome = certify.certify_polytopic(unc, partition, mode=mode, rho=rho, eps=eps)
    else:
        outcome = certify.certify_lft(unc, cone, partition, rho=rho, mode=mode,
                                      eps=eps, seed=seed)
    return outcome, kind, unc, gamma_info


def cmd_certify(cfg: dict, out_dir: Path, seed: int, base_dir: Path) -> int:
    problem = _build_problem(cfg)
    plant = _build_plant(cfg, base_dir)
    outcome, kind, unc, _ = _run_certification(cfg, problem, plant, seed, out_dir)
    if not outcome.feasible:
        artifacts.write_json(out_dir / "certificate_report.json", {
            "feasible": False, "message": outcome.message,
            "solver_status": getattr(outcome.solution, "solver_status", "n/a")})
        print(f"infeasible: {outcome.message}")
        return EXIT_INFEASIBLE
    cert = outcome.certificate
    report = certify.validate_certificate(cert, unc, trials=1000, seed=seed)
    if not report.passed:
        print(f"certificate rejected by sampling (worst margin {report.worst_margin:.3e})")
        return EXIT_RUNTIME
    cert.save(out_dir / "certificate.json")
    print(f"rho = {cert.rho:.6f}")
    print(f"L = {cert.L:.6f} ({cert.lipschitz_source})")
    print(f"tau_star = {cert.tau_star:.6g}, tau_max = {cert.tau_max:.6g}")
    print(f"margin = {cert.margin:.3e}, validated on {report.checked} samples")
    return EXIT_OK


def _tau_from_config(cfg: dict, problem: ProblemSpec, plant, seed: int,
                     out_dir: Path | None):
    alg = _require(cfg, "algorithm")
    tau = alg.get("tau", "auto")
    cert = None
    if tau == "auto":
        if "certify" not in cfg or "uncertainty" not in cfg:
            raise ConfigError("tau 'auto' needs certify and uncertainty sections")
        outcome, _, unc, _ = _run_certification(cfg, problem, plant, seed, out_dir)
        if not outcome.feasible:
            raise RuntimeError(f"cannot auto-select tau: {outcome.message}")
        cert = outcome.certificate
        tau = 0.5 * cert.tau_star  # stay inside the certified region
    return float(tau), cert


def _write_trace(tr: sim.SimTrace, out_dir: Path, label: str, fmt: str) -> None:
    if fmt == "json":
        artifacts.write_json(out_dir / f"trace_{label}.json", {
            "algorithm": tr.algorithm, "status": tr.status,
            "u": tr.u.tolist(), "y": tr.y.tolist(),
            "residuals": tr.residuals.tolist(),
            "objective": tr.objective.tolist(),
            "violation": tr.violation.tolist()})
    else:
        tr.to_csv(out_dir / f"trace_{label}.csv")


def cmd_simulate(cfg: dict, out_dir: Path, seed: int, base_dir: Path,
                 fmt: str = "csv") -> int:
    problem = _build_problem(cfg)
    plant = _build_plant(cfg, base_dir)
    if plant is None:
        raise ConfigError("simulate needs a plant section")
    alg = _require(cfg, "algorithm")
    dist = _require(cfg, "disturbance")
    tau, cert = _tau_from_config(cfg, problem, plant, seed, out_dir)
    if cert is not None:
        cert.save(out_dir / "certificate.json")

    w = w_series = None
    if "constant" in dist:
        w = _mat(dist["constant"], "disturbance.constant")
    elif "series_csv" in dist:
        path = Path(dist["series_csv"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"series file not found: {path}")
        w_series = plants.load_series_csv(path)
    elif "overvoltage_series" in dist:
        if not isinstance(plant, plants.FeederModel):
            raise ConfigError("overvoltage_series needs a feeder plant")
        w_series = plants.overvoltage_series(
            plant, steps=int(dist["overvoltage_series"].get("steps", 900)))
    else:
        raise ConfigError("disturbance needs constant, series_csv or overvoltage_series")

    fset = problem.feasible_set
    starts = []
    if alg.get("starts"):
        st = alg["starts"]
        rng = np.random.default_rng(seed)
        lo = _mat(_require(st, "lower", "starts"), "starts.lower")
        hi = _mat(_require(st, "upper", "starts"), "starts.upper")
        for _ in range(int(_require(st, "count", "starts"))):
            starts.append(fset.project(rng.uniform(lo, hi)))
    else:
        starts.append(fset.project(_mat(_require(alg, "u_start", "algorithm"),
                                        "u_start")))

    run_list = alg.get("run", ["oag"])
    horizon = int(alg.get("horizon", 10_000))
    tol = float(alg.get("tol", 1e-9))
    traces: dict[str, sim.SimTrace] = {}
    failure = False
    for name in run_list:
        for i, u0 in enumerate(starts):
            sc = sim.Scenario(plant=plant, problem=problem, tau=tau, u_start=u0,
                              w=w, w_series=w_series, horizon=horizon, tol=tol)
            if name == "oag":
                tr = sim.run_oag(sc)
            elif name == "gd":
                tr = sim.run_gd_true(sc)
            elif name == "uncontrolled":
                u_fixed = alg.get("u_fixed")
                u_fixed = (plant.u_reference() if u_fixed is None
                           and isinstance(plant, plants.FeederModel)
                           else _mat(u_fixed, "u_fixed"))
                tr = sim.run_uncontrolled(sc, u_fixed)
            else:
                raise ConfigError(f"unknown algorithm {name!r}")
            label = name if len(starts) == 1 else f"{name}_{i:03d}"
            traces[label] = tr
            if tr.status.startswith("plant_failure"):
                failure = True
        # only uncontrolled is meaningful once; it ignores starts
        if name == "uncontrolled" and len(starts) > 1:
            for i in range(1, len(starts)):
                traces.pop(f"uncontrolled_{i:03d}", None)
    for label, tr in traces.items():
        _write_trace(tr, out_dir, label, fmt)
    metrics = sim.compare(traces)
    metrics["tau"] = tau
    artifacts.write_json(out_dir / "metrics.json", metrics)
    oag_traces = [tr for tr in traces.values() if tr.algorithm == "oag"]
    if oag_traces and oag_traces[0].u.shape[1] >= 2:
        artifacts.plot_input_trajectories(oag_traces, out_dir / "trajectories.svg")
    print(f"wrote {len(traces)} traces, tau = {tau:.6g}")
    return EXIT_RUNTIME if failure else EXIT_OK


def cmd_sample_gamma(cfg: dict, out_dir: Path, seed: int, base_dir: Path,
                     fmt: str = "csv") -> int:
    plant = _build_plant(cfg, base_dir)
    if not isinstance(plant, plants.FeederModel):
        raise ConfigError("sample-gamma needs a feeder plant")
    sg = _require(cfg, "sample_gamma")
    sampler = plants.operating_region_sampler(
        plant, _mat(_require(sg, "w_lower", "sample_gamma"), "w_lower"),
        _mat(_require(sg, "w_upper", "sample_gamma"), "w_upper"))
    count = int(sg.get("count", 2000))
    est = plants.sample_gamma(plant, sampler, count=count,
                              safety=float(sg.get("safety", 1.1)), seed=seed)
    if est.n_failed > max(1, count // 10):
        print(f"too many infeasible samples: {est.n_failed}/{count}")
        return EXIT_RUNTIME
    if fmt == "json":
        artifacts.write_json(out_dir / "gamma_errors.json",
                             {"errors": est.errors.tolist()})
    else:
        artifacts.write_table_csv(out_dir / "gamma_errors.csv",
                                  ["sample", "error"],
                                  list(enumerate(est.errors)))
    artifacts.plot_error_histogram(est.errors, est.gamma, out_dir / "gamma_errors.svg")
    artifacts.write_json(out_dir / "gamma.json",
                         {"gamma": est.gamma, "safety": est.safety,
                          "max_error": float(est.errors.max()),
                          "samples": int(est.errors.size),
                          "failed": est.n_failed, "seed": est.seed})
    print(f"gamma = {est.gamma:.6g} over {est.errors.size} samples "
          f"({est.n_failed} infeasible)")
    return EXIT_OK


def academic_problem() -> ProblemSpec:
    """Benchmark problem: quadratic input/output costs on the academic plant."""
    objective = ObjectiveSpec(H=np.eye(2), h=np.array([0.0, -9.0]), eta=1.0,
                              Q2=10.0 * np.eye(2), c2=np.array([-10.0, 9.0]))
    model = ApproxModel(Pi=np.array([[1.0, 1.0], [-1.0, 1.0]]))
    fset = FeasibleSet(n_free=0, lower=np.array([-5.0, -5.0]),
                       upper=np.array([5.0, 5.0]))
    return ProblemSpec(objective=objective, model=model, feasible_set=fset)


def academic_vertices() -> list[np.ndarray]:
    model = academic_problem().model
    return [np.eye(2) + 10.0 * model.Pi.T @ V
            for V in plants.AcademicPlant.jacobian_vertices()]


def feeder_problem(model: plants.FeederModel, eta: float = 40.0,
                   v_lower: float = 0.95, v_upper: float = 1.05) -> ProblemSpec:
    """Curtailment-tracking problem with soft voltage limits on a feeder."""
    u_ref = model.u_reference()
    nominal = plants.linearize_nominal(model)
    objective = ObjectiveSpec(H=2.0 * np.eye(model.n), h=-2.0 * u_ref, eta=eta,
                              y_lower=v_lower * np.ones(model.m),
                              y_upper=v_upper * np.ones(model.m))
    return ProblemSpec(objective=objective, model=ApproxModel(Pi=nominal),
                       feasible_set=model.feasible_set())


def _demo_academic(out_dir: Path, seed: int) -> int:
    t0 = time.time()
    problem = academic_problem()
    plant = plants.AcademicPlant()
    polytope = PolytopeSet(tuple(academic_vertices()))
    outcome = certify.certify_polytopic(polytope, problem.feasible_set)
    if not outcome.feasible:
        raise RuntimeError(f"certify stage failed: {outcome.message}")
    cert = outcome.certificate
    report = certify.validate_certificate(cert, polytope, trials=1000, seed=seed)
    if not report.passed:
        raise RuntimeError("certificate failed sampling validation")
    cert.save(out_dir / "certificate.json")

    tau = 0.01  # replication step; the certificate's tau_star is recorded below
    w = np.array([1.0, 1.0])
    rng = np.random.default_rng(seed)
    traces: dict[str, sim.SimTrace] = {}
    for i in range(100):
        u0 = rng.uniform(-5.0, 5.0, 2)
        sc = sim.Scenario(plant=plant, problem=problem, tau=tau, u_start=u0,
                          w=w, horizon=60_000, tol=1e-10)
        traces[f"oag_{i:03d}"] = sim.run_oag(sc)
        traces[f"gd_{i:03d}"] = sim.run_gd_true(sc)
    u_ff = sim.feedforward_baseline(problem)
    metrics = sim.compare(traces, feedforward=u_ff)
    endpoint = traces["oag_000"].endpoint
    artifacts.write_json(out_dir / "metrics.json", metrics)
    for label in ("oag_000", "gd_000"):
        traces[label].to_csv(out_dir / f"trace_{label}.csv")
    artifacts.write_table_csv(
        out_dir / "endpoints.csv", ["trace", "algorithm", "u_0", "u_1"],
        [[name, tr.algorithm, tr.endpoint[0], tr.endpoint[1]]
         for name, tr in sorted(traces.items())])
    artifacts.plot_input_trajectories(
        [tr for nm, tr in sorted(traces.items()) if tr.algorithm == "oag"],
        out_dir / "trajectories_oag.svg", feedforward=u_ff, endpoint=endpoint)
    artifacts.plot_input_trajectories(
        [tr for nm, tr in sorted(traces.items()) if tr.algorithm == "gd_true"],
        out_dir / "trajectories_gd.svg", feedforward=u_ff)
    summary = {
        "certificate": {"rho": cert.rho, "L": cert.L, "tau_star": cert.tau_star,
                        "tau_max": cert.tau_max},
        "replication_tau": tau,
        "oag_endpoint": endpoint.tolist(),
        "feedforward": u_ff.tolist(),
        "endpoint_clusters": metrics["endpoint_clusters"],
        "runtime_s": round(time.time() - t0, 3),
    }
    artifacts.write_json(out_dir / "summary.json", summary)
    print(f"academic demo done in {summary['runtime_s']}s; "
          f"clusters {metrics['endpoint_clusters']}")
    return EXIT_OK


def _demo_feeder(out_dir: Path, seed: int) -> int:
    t0 = time.time()
    model = plants.default_feeder()
    problem = feeder_problem(model)
    w_lo = np.tile([-0.20, -0.07], len(model.load_nodes))
    w_hi = np.zeros(model.p)
    sampler = plants.operating_region_sampler(model, w_lo, w_hi)
    est = plants.sample_gamma(model, sampler, count=2000, safety=1.1, seed=seed,
                              nominal=problem.model.Pi)
    artifacts.write_table_csv(out_dir / "gamma_errors.csv", ["sample", "error"],
                              list(enumerate(est.errors)))
    artifacts.plot_error_histogram(est.errors, est.gamma, out_dir / "gamma_errors.svg")

    o = problem.objective
    lft, cone = build_oag_lft(o.H, problem.model.Pi, problem.model.Pi, o.eta,
                              est.gamma)
    outcome = certify.certify_lft(lft, cone, problem.feasible_set,
                                  mode="maximize", seed=seed)
    if not outcome.feasible:
        raise RuntimeError(f"certify stage failed: {outcome.message}")
    cert = outcome.certificate
    report = certify.validate_certificate(cert, lft, trials=1000, seed=seed)
    if not report.passed:
        raise RuntimeError("certificate failed sampling validation")
    cert.save(out_dir / "certificate.json")

    tau = 0.5 * cert.tau_star
    W = plants.overvoltage_series(model)
    plants.write_series_csv(out_dir / "w_series.csv", W)
    u_ref = model.u_reference()
    sc = sim.Scenario(plant=model, problem=problem, tau=tau, u_start=u_ref,
                      w_series=W)
    traces = {"oag": sim.run_oag(sc), "uncontrolled": sim.run_uncontrolled(sc, u_ref)}
    for label, tr in traces.items():
        tr.to_csv(out_dir / f"trace_{label}.csv")
    metrics = sim.compare(traces)
    artifacts.write_json(out_dir / "metrics.json", metrics)
    artifacts.plot_voltage_envelope(traces, (0.95, 1.05),
                                    out_dir / "voltage_envelope.svg")
    summary = {
        "gamma": est.gamma,
        "certificate": {"rho": cert.rho, "L": cert.L, "tau_star": cert.tau_star,
                        "tau_max": cert.tau_max,
                        "lipschitz_source": cert.lipschitz_source},
        "tau": tau,
        "violation_integral": {k: tr.violation_integral for k, tr in traces.items()},
        "max_voltage": {k: float(tr.y.max()) for k, tr in traces.items()},
        "runtime_s": round(time.time() - t0, 3),
    }
    artifacts.write_json(out_dir / "summary.json", summary)
    print(f"feeder demo done in {summary['runtime_s']}s; gamma={est.gamma:.4f}, "
          f"rho={cert.rho:.4f}")
    print(f"violation integral: oag {summary['violation_integral']['oag']:.4e} "
          f"vs uncontrolled {summary['violation_integral']['uncontrolled']:.4e}")
    return EXIT_OK


def cmd_demo(name: str, out_dir: Path, seed: int) -> int:
    stages = {"academic": _demo_academic, "feeder": _demo_feeder}
    if name not in stages:
        raise ConfigError(f"unknown demo {name!r} (choose academic or feeder)")
    return stages[name](out_dir, seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbopt",
        description="feedback optimization with robust-stability certification")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("certify", "simulate", "sample-gamma"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    p = sub.add_parser("demo")
    p.add_argument("name", choices=("academic", "feeder"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(args.seed)
    try:
        if args.command == "demo":
            config = {"demo": args.name}
            code = cmd_demo(args.name, out_dir, seed)
        else:
            config = _load_config(args.config)
            base_dir = Path(args.config).resolve().parent
            if args.command == "certify":
                code = cmd_certify(config, out_dir, seed, base_dir)
            elif args.command == "simulate":
                code = cmd_simulate(config, out_dir, seed, base_dir,
                                    fmt=args.format)
            else:
                code = cmd_sample_gamma(config, out_dir, seed, base_dir,
                                        fmt=args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, plants.PowerFlowError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    outputs = [p.name for p in out_dir.iterdir() if p.name != "manifest.json"]
    artifacts.write_manifest(out_dir, config, seed, outputs)
    return code


if __name__ == "__main__":
    sys.exit(main())
