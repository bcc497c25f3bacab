"""Command-line driver: ``mallows-process {simulate,validate,graph,info,dist}``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines (TOML syntax), then flags; later sources win.  Exit
codes: 0 pass, 1 statistical failure, 2 usage or config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import information as info
from .distribution import (MallowsParams, exact_jump_time_sf_array, inversion_count_table,
                           normalizing_constant, pmf)
from .hypercube import (CERTIFY_MAX_N, MAX_N, StructureViolation, all_transpositions,
                        build_hypercube, certify_structure, decode, expected_edge_count,
                        generator_set)
from .perms import Permutation, phi
from .process import CONSTRUCTIONS, TrajectoryBatch, attempt_key, keyed_driver, simulate_process
from .stats import (EmpiricalSample, chi_square, erlang_cdf, exact_check, exponential_cdf,
                    ks_test, moment_check, poisson_point_check, reports_csv, variance_z_score,
                    z_score)
from .uniform import UniformDriver

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SUITES = ("marginals", "jumps", "graph", "info", "clt")
MARGINALS_MAX_N = 6
ASYMPTOTIC_MIN_N = 100
_PROGRESS_WORK = 10 ** 6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    n: int = 5
    construction: str = "birth"
    horizon: Optional[float] = None
    replications: int = 1
    t_grid: tuple = ()
    output_dir: str = "."
    alpha: float = 1e-3
    k: int = 3

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.construction not in CONSTRUCTIONS:
            raise ConfigError(f"construction must be one of {CONSTRUCTIONS}")
        if self.horizon is not None and not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigError("horizon must be a positive finite number")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if any(t < 0 for t in self.t_grid):
            raise ConfigError("t values must be non-negative")
        if self.horizon is not None and any(t > self.horizon for t in self.t_grid):
            raise ConfigError("t values must lie within [0, horizon]")

    def settings(self) -> dict:
        """Every setting except the output location, which never affects results."""
        d = dataclasses.asdict(self)
        del d["output_dir"]
        d["t_grid"] = list(self.t_grid)
        return d

    def hash(self) -> str:
        text = json.dumps(self.settings(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


_CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}
_ALIASES = {"t": "t_grid", "out": "output_dir"}


def _parse_t_grid(value) -> tuple:
    if isinstance(value, (int, float)):
        return (float(value),)
    if isinstance(value, str):
        try:
            return tuple(float(x) for x in value.split(",") if x.strip())
        except ValueError as exc:
            raise ConfigError(f"bad t grid {value!r}") from exc
    return tuple(float(x) for x in value)


def load_config_file(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError:
        raise
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    out = {}
    for key, value in raw.items():
        key = _ALIASES.get(key, key)
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value
    return out


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "t_grid" in values:
        values["t_grid"] = _parse_t_grid(values["t_grid"])
    try:
        for key, cast in (("seed", int), ("n", int), ("replications", int), ("k", int)):
            if key in values:
                values[key] = cast(values[key])
        for key in ("horizon", "alpha"):
            if key in values and values[key] is not None:
                values[key] = float(values[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(**values)


# ----------------------------------------------------------------- output helpers


class Output:
    """Writes files under the output directory, each tagged with the config hash."""

    def __init__(self, config: ExperimentConfig):
        self.dir = config.output_dir
        self.tag = config.hash()
        self.config = config
        os.makedirs(self.dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    def csv(self, name: str, body: str) -> None:
        with open(self.path(name), "w", newline="") as fh:
            fh.write(f"# config_hash={self.tag}\n")
            fh.write(body)

    def json(self, name: str, payload: dict) -> None:
        with open(self.path(name), "w") as fh:
            json.dump({"config_hash": self.tag, **payload}, fh, indent=1, sort_keys=True)
            fh.write("\n")

    def jsonl_header(self) -> str:
        return json.dumps({"config_hash": self.tag, "config": self.config.settings()},
                          sort_keys=True) + "\n"


def _progress(label: str, work: int):
    if work < _PROGRESS_WORK:
        return None

    def report(j: int, n: int) -> None:
        if j == n or j % max(1, n // 10) == 0:
            print(f"{label}: coordinate {j}/{n}", file=sys.stderr, flush=True)
    return report


# ----------------------------------------------------------------- commands


def read_driver(path: str) -> UniformDriver:
    with open(path) as fh:
        text = fh.read()
    try:
        first = json.loads(text.splitlines()[0]) if text.lstrip().startswith("{") else json.loads(text)
    except (json.JSONDecodeError, IndexError) as exc:
        raise ConfigError(f"cannot parse driver file {path}") from exc
    vals = first["u"] if isinstance(first, dict) else first
    try:
        return UniformDriver(tuple(vals))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(config: ExperimentConfig, replay: Optional[str] = None,
                 with_sigma: bool = False) -> int:
    horizon = config.horizon if config.horizon is not None else 1.0
    out = Output(config)
    lines = [out.jsonl_header()]
    if replay is not None:
        if config.construction != "uniform":
            raise ConfigError("--replay needs --construction uniform")
        driver = read_driver(replay)
        if driver.n != config.n:
            raise ConfigError(f"driver has {driver.n} uniforms but n={config.n}")
        traj = simulate_process(config.n, horizon, "uniform", driver=driver)
        lines.append(traj.to_jsonl(with_sigma, replication=0))
        header = ["replication"] + [f"T{k}" for k in range(1, len(traj.events) + 1)]
        row = ["0"] + [repr(e.t) for e in traj.events]
        summary = ",".join(header) + "\n" + ",".join(row) + "\n"
        drivers, reps = [driver], [0]
    else:
        batch = TrajectoryBatch(config.n, horizon, config.construction, config.seed,
                                config.replications,
                                _progress("simulate", config.n * config.replications))
        for i, rep in enumerate(batch.replications):
            lines.append(batch.trajectory(i).to_jsonl(with_sigma, replication=int(rep)))
        summary = batch.summary_csv()
        reps = batch.replications
        drivers = ([keyed_driver(config.n, config.seed, attempt_key(r, a))
                    for r, a in zip(batch.replications, batch.resamples)]
                   if config.construction == "uniform" else [])
    with open(out.path("trajectories.jsonl"), "w") as fh:
        fh.writelines(lines)
    out.csv("summary.csv", summary)
    if drivers:
        with open(out.path("drivers.jsonl"), "w") as fh:
            for r, d in zip(reps, drivers):
                fh.write(json.dumps({"replication": int(r), "u": list(d.u)}) + "\n")
    return EXIT_OK


def _pmf_table(n: int, q: float) -> np.ndarray:
    """Exact pmf indexed by mixed-radix inversion-vector code."""
    params = MallowsParams(n, q)
    return np.array([pmf(phi(decode(c, n)), params) for c in range(math.factorial(n))])


def _codes(levels: np.ndarray) -> np.ndarray:
    n = levels.shape[1]
    radix = np.cumprod([1] + list(range(1, n)))
    return levels @ radix


def suite_marginals(config: ExperimentConfig, constructions: Sequence[str]) -> List:
    n = config.n
    if n > MARGINALS_MAX_N:
        raise ConfigError(f"marginals suite enumerates S_n; needs n <= {MARGINALS_MAX_N}")
    grid = config.t_grid or (0.3, 1.0, 2.0)
    horizon = config.horizon if config.horizon is not None else max(grid)
    if max(grid) > horizon or min(grid) <= 0:
        raise ConfigError("marginal times must lie in (0, horizon]")
    reports = []
    for c in constructions:
        batch = TrajectoryBatch(n, horizon, c, config.seed, config.replications)
        for t in grid:
            counts = np.bincount(_codes(batch.levels_at(t)), minlength=math.factorial(n))
            reports.append(chi_square(counts, _pmf_table(n, t), config.replications,
                                      config.alpha, f"marginal:{c}:t={t:g}"))
    return reports


def suite_jumps(config: ExperimentConfig) -> List:
    n, k = config.n, config.k
    top = n * (n - 1) // 2
    if top < 1:
        raise ConfigError("jumping times need n >= 2")
    k = min(k, top)
    asymptotic = n >= ASYMPTOTIC_MIN_N
    horizon = config.horizon if config.horizon is not None else (40.0 / n if asymptotic else 50.0)
    batch = TrajectoryBatch(n, horizon, "birth", config.seed, config.replications,
                            _progress("jumps", n * config.replications))
    times = batch.jump_times(k)
    reports = []
    for i in range(1, k + 1):
        sample = EmpiricalSample.censored(times[:, i - 1], horizon)
        cdf = lambda x, i=i: 1.0 - exact_jump_time_sf_array(n, i, x)
        reports.append(ks_test(sample, cdf, config.alpha, f"exact:T{i}", "exact law"))
    if asymptotic:
        scaled = n * times
        if np.isnan(scaled).any():
            raise ConfigError("horizon too short: some T_k censored; raise --horizon")
        reports.append(ks_test(EmpiricalSample.of(scaled[:, 0]), exponential_cdf,
                               config.alpha, "gamma:nT1", "Exp(1)"))
        reports.append(ks_test(EmpiricalSample.of(scaled[:, k - 1]), lambda x: erlang_cdf(k, x),
                               config.alpha, f"gamma:nT{k}", f"Erlang({k},1)"))
        if k >= 2:
            reports.extend(poisson_point_check(scaled, config.alpha, "poisson"))
    return reports


def suite_graph(config: ExperimentConfig, min_coverage: float) -> List:
    n = config.n
    if n > CERTIFY_MAX_N:
        raise ConfigError(f"graph suite is exhaustive; needs n <= {CERTIFY_MAX_N}")
    horizon = config.horizon if config.horizon is not None else 20.0
    g = build_hypercube(n)
    gens = generator_set(g)
    reports = [
        exact_check("graph:edge_count", abs(g.edge_count - expected_edge_count(n)),
                    edges=g.edge_count),
        exact_check("graph:generators_are_transpositions",
                    len(gens ^ all_transpositions(n)), generators=len(gens)),
    ]
    batch = TrajectoryBatch(n, horizon, config.construction, config.seed, config.replications)
    try:
        report = certify_structure(n, batch)
    except StructureViolation as exc:
        return reports + [exact_check("graph:violations", 1, detail=str(exc))]
    reports.append(exact_check("graph:violations", 0, transitions=report.transitions))
    reports.append(exact_check("graph:adjacent_generators_observed",
                               int(not report.adjacent_generators_observed)))
    if n >= 2:
        reports.append(moment_check("graph:uncovered_fraction", 1.0 - report.coverage,
                                    1.0 - min_coverage, edges_hit=len(report.edge_counts)))
    return reports


def suite_info(config: ExperimentConfig) -> List:
    n = config.n
    if n < 2:
        raise ConfigError("information suite needs n >= 2")
    reps = np.arange(config.replications)
    reports = []
    t_u = info.full_retrieval_times_batch(n, config.seed, reps)
    cdf = np.vectorize(lambda x: info.full_retrieval_cdf(n, float(x)))
    reports.append(ks_test(EmpiricalSample.of(t_u), cdf, config.alpha, "info:T_U", "product cdf"))
    frac = info.info_fraction_batch(n, 1.0, config.seed, reps)
    reports.append(moment_check("info:mean_I1_z", abs(z_score(frac, info.expected_info(n, 1.0))), 4.0))
    reports.append(moment_check("info:var_I1_z", abs(variance_z_score(frac, info.var_info_at_1(n))), 4.0))
    for t in config.t_grid:
        if 0 < t < 1:
            f = info.info_fraction_batch(n, t, config.seed, reps)
            v = float(np.var(np.sqrt(n) * (f - t), ddof=1))
            reports.append(moment_check(f"info:bridge_var_t={t:g}", abs(v / (t * (1 - t)) - 1), 0.10,
                                        variance=v))
    t_big = 1e4
    reports.append(moment_check("info:tail_t=1e4", abs(t_big * info.full_retrieval_sf(n, t_big) - 1), 0.02))
    return reports


def suite_clt(config: ExperimentConfig) -> List:
    n = config.n
    t = config.t_grid[0] if config.t_grid else 0.5
    if not 0 < t < 1:
        raise ConfigError("the jump-count normalization is stated for 0 < t < 1")
    batch = TrajectoryBatch(n, t, "birth", config.seed, config.replications,
                            _progress("clt", n * config.replications))
    y = ((1 - t) * batch.jump_count_at(t) - n * t) / math.sqrt(n)
    v = float(np.var(y, ddof=1))
    return [
        moment_check(f"clt:mean_z_t={t:g}", abs(z_score(y, 0.0)), 4.0, mean=float(y.mean())),
        moment_check(f"clt:var_rel_t={t:g}", abs(v / t - 1), 0.10, variance=v),
    ]


def cmd_validate(config: ExperimentConfig, suite: str, min_coverage: float = 0.99,
                 both: bool = False) -> int:
    if suite == "marginals":
        reports = suite_marginals(config, CONSTRUCTIONS if both else (config.construction,))
    elif suite == "jumps":
        reports = suite_jumps(config)
    elif suite == "graph":
        reports = suite_graph(config, min_coverage)
    elif suite == "info":
        reports = suite_info(config)
    else:
        reports = suite_clt(config)
    out = Output(config)
    out.csv("report.csv", reports_csv(reports))
    sys.stdout.write(reports_csv(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_graph(config: ExperimentConfig, check_generator: bool) -> int:
    if not 1 <= config.n <= MAX_N:
        raise ConfigError(f"graph export is guarded to n <= {MAX_N}")
    g = build_hypercube(config.n)
    out = Output(config)
    out.csv("edges.csv", g.edges_csv())
    out.json("labels.json", {"labels": json.loads(g.labels_json())})
    summary = {"n": config.n, "vertices": g.vertex_count, "edges": g.edge_count}
    status = EXIT_OK
    if check_generator:
        gens = generator_set(g)
        summary["generators"] = len(gens)
        summary["generators_are_all_transpositions"] = gens == all_transpositions(config.n)
        if not summary["generators_are_all_transpositions"]:
            status = EXIT_FAIL
    print(json.dumps(summary, sort_keys=True))
    return status


def cmd_info(config: ExperimentConfig) -> int:
    n = config.n
    if n < 2:
        raise ConfigError("information queries need n >= 2")
    reps = np.arange(config.replications)
    grid = config.t_grid or (0.25, 0.5, 0.75, 1.0, 2.0)
    fractions = [info.info_fraction_batch(n, t, config.seed, reps) for t in grid]
    out = Output(config)
    out.csv("info.csv", info.info_table_csv(n, grid, fractions))
    out.csv("retrieval.csv", info.retrieval_times_csv(
        reps, info.full_retrieval_times_batch(n, config.seed, reps)))
    return EXIT_OK


def cmd_dist(config: ExperimentConfig, q: float, sigma: Optional[str], table: bool) -> int:
    try:
        params = MallowsParams(config.n, q)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = {"n": config.n, "q": q, "log_Z": normalizing_constant(params, log=True)}
    if sigma is not None:
        try:
            perm = Permutation.from_one_based(int(x) for x in sigma.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad permutation {sigma!r}") from exc
        result["sigma"] = list(perm.one_based())
        result["pmf"] = pmf(perm, params)
    print(json.dumps(result, sort_keys=True))
    if table:
        Output(config).csv("inversion_counts.csv", inversion_count_table(config.n).to_csv())
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--replications", type=int)
    p.add_argument("--t", dest="t_grid", help="comma-separated times")
    p.add_argument("--construction", choices=CONSTRUCTIONS)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--alpha", type=float)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mallows-process", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate trajectories")
    _common(p)
    p.add_argument("--replay", help="JSON driver file to replay (uniform construction)")
    p.add_argument("--sigma", action="store_true", help="include sigma_after in each event")

    p = sub.add_parser("validate", help="run a statistical validation suite")
    p.add_argument("suite", choices=SUITES)
    _common(p)
    p.add_argument("--k", type=int, help="number of jumping times (jumps suite)")
    p.add_argument("--both", action="store_true", help="marginals: run both constructions")
    p.add_argument("--min-coverage", type=float, default=0.99)

    p = sub.add_parser("graph", help="export the expanded hypercube")
    _common(p)
    p.add_argument("--check-generator", action="store_true")

    p = sub.add_parser("info", help="information-fraction tables")
    _common(p)

    p = sub.add_parser("dist", help="Mallows pmf and inversion-count queries")
    _common(p)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--sigma", dest="perm", help="one-line permutation, e.g. 2,3,1")
    p.add_argument("--table", action="store_true", help="write inversion_counts.csv")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        config = build_config(args)
        if args.command == "simulate":
            return cmd_simulate(config, args.replay, args.sigma)
        if args.command == "validate":
            return cmd_validate(config, args.suite, args.min_coverage, args.both)
        if args.command == "graph":
            return cmd_graph(config, args.check_generator)
        if args.command == "info":
            return cmd_info(config)
        return cmd_dist(config, args.q, args.perm, args.table)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
