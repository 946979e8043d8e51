"""Command-line entry point: sample / simulate / analyze / verify.

Every run writes its artifacts into --out together with a manifest
(config echo, seed, wall clock, sha256 of each output) so that reruns with
the same config and seed are byte-reproducible.

Exit codes: 0 success, 1 usage error, 2 config error, 3 numeric/size guard.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, bcm, dynamics, local_limit, projection, sampling
from .params import (
    ConfigError, FiniteGroupSizes, ModelConfig, PowerLawGroupSizes,
)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3
ARTIFACT_VERSION = "1"

GUARD_ERRORS = (
    analysis.TruncationError, analysis.InsufficientSampleError,
    analysis.UnsupportedLawError, projection.CliqueGuardError,
    sampling.InstanceTooLargeError, dynamics.HorizonError,
    local_limit.PopulationExplosionError, ArithmeticError, OverflowError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    config: dict | None
    seed: int | None
    version: str = ARTIFACT_VERSION
    outputs: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def add(self, path: Path):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.outputs[path.name] = digest

    def write(self, out_dir: Path):
        path = out_dir / "manifest.json"
        path.write_text(json.dumps({
            "command": self.command, "config": self.config, "seed": self.seed,
            "version": self.version, "outputs": self.outputs,
            "wall_clock_s": round(self.wall_clock_s, 3),
        }, sort_keys=True, indent=2) + "\n")


def _write(out_dir: Path, name: str, text: str, manifest: RunManifest) -> Path:
    path = out_dir / name
    if text and not text.endswith("\n"):
        text += "\n"
    path.write_text(text)
    manifest.add(path)
    return path


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _load_config(path: str, seed_override: int | None) -> ModelConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    config = ModelConfig.from_json(text)
    if seed_override is not None:
        config = ModelConfig(n=config.n, t=config.t, seed=seed_override,
                             weights_spec=config.weights_spec,
                             group_size_spec=config.group_size_spec,
                             mode=config.mode)
    return config


def _replica_rngs(seed: int, replicas: int) -> list:
    """Independent per-replica streams from one splittable root seed."""
    return [np.random.default_rng(ss)
            for ss in np.random.SeedSequence(seed).spawn(replicas)]


def _parse_grid(text: str | None, default: list) -> list:
    if not text:
        return default
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise _UsageError(f"bad --grid value: {e}") from e


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sample(args, out_dir: Path, manifest: RunManifest) -> int:
    config = _load_config(args.config, args.seed)
    manifest.config = json.loads(config.to_json())
    manifest.seed = config.seed
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    rate_scale = 1.0 + config.t if config.mode == "rescaled" else 1.0
    state = sampling.sample_stationary(config, rng, rate_scale=rate_scale)
    _write(out_dir, "state.jsonl", state.to_jsonl(), manifest)
    rows = [["m_over_n", state.m / config.n],
            ["avg_degree", float(state.intersection_degrees.mean())]]
    for k in sorted(state.size_counts):
        rows.append([f"a{k}_over_n", state.size_counts[k] / config.n])
    _write(out_dir, "summary.csv", _csv_text(["stat", "value"], rows), manifest)
    return EXIT_OK


def cmd_simulate(args, out_dir: Path, manifest: RunManifest) -> int:
    config = _load_config(args.config, args.seed)
    manifest.config = json.loads(config.to_json())
    manifest.seed = config.seed
    timeline = dynamics.simulate(config)
    lines = [json.dumps({"time": u, "kind": kind, "members": list(g)})
             for u, kind, g in timeline.event_log()]
    _write(out_dir, "events.jsonl", "\n".join(lines), manifest)
    m_union = len(timeline.marks)
    multi = timeline.count_multi_switch()
    rows = [["n", config.n], ["t", config.t],
            ["m_initial", timeline.initial.m], ["m_union", m_union],
            ["multi_switch", multi],
            ["multi_switch_fraction", multi / m_union if m_union else 0.0]]
    _write(out_dir, "summary.csv", _csv_text(["stat", "value"], rows), manifest)
    return EXIT_OK


def _degree_replica(payload):
    config_json, ss = payload
    config = ModelConfig.from_json(config_json)
    rng = np.random.default_rng(ss)
    state = sampling.sample_stationary(config, rng)
    return np.bincount(state.intersection_degrees).tolist()


def _analyze_degrees(config, args, out_dir, manifest):
    law = config.group_size_law()
    weights = config.weight_model()
    payloads = [(config.to_json(), ss)
                for ss in np.random.SeedSequence(config.seed).spawn(args.replicas)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            counts = list(pool.map(_degree_replica, payloads))
    else:
        counts = [_degree_replica(p) for p in payloads]
    width = max(len(c) for c in counts)
    total = np.zeros(width, dtype=np.int64)
    for c in counts:  # replica order is fixed by index, not completion
        total[:len(c)] += c
    census = analysis.DegreeCensus(total, int(total.sum()))
    k_max = max(width + 10, 50)
    oracle, tail = analysis.degree_law_oracle(weights, law, k_max)
    tv = analysis.tv_degree_test(census, oracle, tail)
    rows = [["tv", tv], ["oracle_tail", tail], ["replicas", args.replicas]]
    _write(out_dir, "degrees.csv", _csv_text(["stat", "value"], rows), manifest)
    return EXIT_OK


def _analyze_giant(config, args, out_dir, manifest):
    laws = analysis.LimitLaws(config.weight_model(), config.group_size_law())
    sol = analysis.solve_giant(laws)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    state = sampling.sample_stationary(config, rng)
    frac, _ = analysis.giant_fraction(state)
    rows = [["eta", sol.eta_l], ["xi", sol.xi_l], ["empirical_fraction", frac],
            ["supercritical", int(sol.supercritical)]]
    _write(out_dir, "giant.csv", _csv_text(["stat", "value"], rows), manifest)
    return EXIT_OK


def _kmax_replica(payload):
    config_json, ss = payload
    config = ModelConfig.from_json(config_json)
    rng = np.random.default_rng(ss)
    timeline = dynamics.simulate(config, rng)
    proc = analysis.kmax_step_process(timeline, config.group_size_law().alpha)
    return int(proc.values[-1])


def _analyze_kmax(config, args, out_dir, manifest):
    law = config.group_size_law()
    alpha = analysis.check_kmax_hypotheses(law)  # warns when alpha <= 3
    payloads = [(config.to_json(), ss)
                for ss in np.random.SeedSequence(config.seed).spawn(args.replicas)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            maxima = list(pool.map(_kmax_replica, payloads))
    else:
        maxima = [_kmax_replica(p) for p in payloads]
    scaled = np.array(maxima, dtype=float) / config.n ** (1.0 / alpha)
    ew = config.weight_model().limit_moment(1)
    ks = analysis.ks_statistic(
        scaled, lambda k: analysis.kmax_limit_cdf(k, config.t, alpha,
                                                  law.tail_constant, ew))
    rows = [["ks", ks], ["replicas", args.replicas], ["alpha", alpha]]
    _write(out_dir, "kmax.csv", _csv_text(["stat", "value"], rows), manifest)
    return EXIT_OK


def _analyze_marks(config, args, out_dir, manifest):
    timeline = dynamics.simulate(config)
    points = _parse_grid(args.grid, [0.25 * config.t, 0.5 * config.t,
                                     0.75 * config.t])
    pairs = [(s1, s2) for s1 in points for s2 in points if s2 >= s1]
    dev = analysis.mark_law_test(timeline, pairs)
    rows = [["max_cdf_deviation", dev], ["grid_pairs", len(pairs)]]
    _write(out_dir, "marks.csv", _csv_text(["stat", "value"], rows), manifest)
    return EXIT_OK


def _analyze_local(config, args, out_dir, manifest):
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    rate_scale = 1.0 + config.t if config.mode in ("union", "rescaled") else 1.0
    if config.mode == "union":
        graph = projection.project(dynamics.simulate(config).union_graph())
    else:
        graph = projection.project(
            sampling.sample_stationary(config, rng, rate_scale=rate_scale))
    laws = analysis.LimitLaws(config.weight_model(), config.group_size_law(),
                              rate_scale=rate_scale)
    m = max(1_000, args.replicas)
    report = local_limit.census_compare(graph, laws, r=1, m=m, rng=rng)
    _write(out_dir, "census.csv", report.to_csv(), manifest)
    rows = [["tv", report.tv], ["m", report.m],
            ["sim_truncated", report.sim_truncated],
            ["bp_truncated", report.bp_truncated]]
    _write(out_dir, "local.csv", _csv_text(["stat", "value"], rows), manifest)
    return EXIT_OK


def _analyze_trajectory(config, args, out_dir, manifest):
    timeline = dynamics.simulate(config)
    grid = _parse_grid(args.grid,
                       [i * config.t / 10 for i in range(11)])
    traj = analysis.giant_trajectory(timeline, root=0, grid=grid)
    rows = list(zip(traj.grid.tolist(), traj.indicator.tolist()))
    _write(out_dir, "trajectory.csv", _csv_text(["s", "in_giant"], rows),
           manifest)
    return EXIT_OK


ANALYZE_KINDS = {
    "degrees": _analyze_degrees, "giant": _analyze_giant,
    "kmax": _analyze_kmax, "marks": _analyze_marks,
    "local": _analyze_local, "trajectory": _analyze_trajectory,
}


def cmd_analyze(args, out_dir: Path, manifest: RunManifest) -> int:
    config = _load_config(args.config, args.seed)
    manifest.config = json.loads(config.to_json())
    manifest.seed = config.seed
    return ANALYZE_KINDS[args.kind](config, args, out_dir, manifest)


# -- verification corpora ----------------------------------------------------

TINY_DEGREE_CORPUS = [
    ((1, 1), (1, 1)),
    ((2,), (2,)),
    ((2, 1, 1), (2, 2)),
    ((2, 2), (2, 2)),
    ((2, 2, 1, 1), (3, 3)),
    ((1, 1, 1, 1), (2, 2)),
]

TINY_BGRG_CORPUS = [
    ([Fraction(1), Fraction(1), Fraction(1)], FiniteGroupSizes({2: 1.0})),
    ([Fraction(1), Fraction(2), Fraction(3)], FiniteGroupSizes({2: 1.0})),
    ([Fraction(1), Fraction(2), Fraction(1)],
     FiniteGroupSizes({2: 0.5, 3: 0.5})),
]


def cmd_verify(args, out_dir: Path, manifest: RunManifest) -> int:
    kind = args.kind
    reports = []
    if kind == "bcm-law":
        for dl, dr in TINY_DEGREE_CORPUS:
            reports.append(bcm.verify_bcm_law(bcm.DegreeSequencePair(dl, dr)))
    elif kind == "bcm-uniform":
        for dl, dr in TINY_DEGREE_CORPUS:
            reports.append(
                bcm.verify_bcm_uniform_given_simple(bcm.DegreeSequencePair(dl, dr)))
    elif kind == "bgrg-uniform":
        for weights, law in TINY_BGRG_CORPUS:
            reports.append(bcm.verify_bgrg_uniform_given_degrees(weights, law))
    elif kind == "bridge":
        for weights, law in TINY_BGRG_CORPUS:
            reports.append(bcm.verify_bridge(weights, law))
    elif kind == "equivalence-bound":
        config = _load_config(args.config, args.seed) if args.config else \
            ModelConfig(n=1000, t=1.0, seed=0)
        bound = dynamics.equivalence_bound(config.weight_model(),
                                           config.group_size_law(), config.t)
        reports.append({"bound": bound, "ok": math.isfinite(bound) and bound >= 0})
    else:
        raise _UsageError(f"unknown verify kind {kind!r}")
    ok = all(r["ok"] for r in reports)
    _write(out_dir, "verify.json",
           json.dumps({"kind": kind, "pass": ok, "reports": _plain(reports)},
                      indent=2, sort_keys=True), manifest)
    print(f"verify {kind}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_GUARD


def _plain(obj):
    """JSON-serializable copy (Fractions to strings, tuples to lists)."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="drig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None)
    common.add_argument("--out", type=str, required=True)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--replicas", type=int, default=1)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--grid", type=str, default=None)
    sub.add_parser("sample", parents=[common])
    sub.add_parser("simulate", parents=[common])
    p = sub.add_parser("analyze", parents=[common])
    p.add_argument("kind", choices=sorted(ANALYZE_KINDS))
    p = sub.add_parser("verify", parents=[common])
    p.add_argument("kind", type=str)
    return parser


COMMANDS = {"sample": cmd_sample, "simulate": cmd_simulate,
            "analyze": cmd_analyze, "verify": cmd_verify}


def main(argv: list | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.command in ("sample", "simulate", "analyze") and not args.config:
        print("usage error: --config is required", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command=args.command, config=None, seed=args.seed)
    start = time.monotonic()
    try:
        code = COMMANDS[args.command](args, out_dir, manifest)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GUARD_ERRORS as e:
        print(f"guard error: {e}", file=sys.stderr)
        return EXIT_GUARD
    manifest.wall_clock_s = time.monotonic() - start
    manifest.write(out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
