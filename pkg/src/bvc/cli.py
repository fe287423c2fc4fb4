"""Experiment driver.

`bvc run` executes a pipeline over one or more seeds on a generated or
loaded graph, validates the result, and emits one JSON record per line.
`bvc verify` replays records and checks that reruns are bit-identical and
the covers still validate. Every record carries enough information
(generator spec or file path, seed, parameters) to be reproduced from
scratch.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import oracle
from .clustering import (
    build_cluster_trees,
    mpx_partition,
    randomized_pipeline,
    shrink_partition,
)
from .errors import BvcError, InvalidParam
from .graph import BipartiteGraph, Matching, SubgraphView, graph_from_spec, read_graph
from .konig import koenig_approx_cover, koenig_exact_cover
from .matching import eliminate_short_aug_paths, parse_provider
from .repair import det_cover_low_diameter

PIPELINES = (
    "exact",
    "diameter1",
    "rand-pipeline",
    "det-low-diam",
    "clustering-only",
    "matching-only",
)

CSV_COLUMNS = [
    "pipeline",
    "graph",
    "seed",
    "n",
    "m",
    "D",
    "max_degree",
    "opt",
    "cover_size",
    "valid",
    "rounds",
    "max_message_bits",
    "total_bits",
    "wall_ms",
]

_DEFAULTS = {
    "pipeline": None,
    "graph": None,
    "seed": 0,
    "repeat": 1,
    "eps": 0.5,
    "k": None,
    "lam": None,
    "provider": None,
    "bandwidth": None,
    "no_oracle": False,
}


def load_graph(spec: str, seed: int = 0) -> BipartiteGraph:
    if spec.startswith("gen:"):
        return graph_from_spec(spec[4:], seed=seed)
    return read_graph(spec)


def _truthy(value) -> bool:
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return bool(value)


def _separation_ok(graph, cluster_set, h=3):
    from collections import deque

    members = cluster_set.members
    for src in graph.node_ids:
        c = members.get(src)
        if c is None:
            continue
        dist = {src: 0}
        queue = deque([src])
        while queue:
            x = queue.popleft()
            if dist[x] >= h - 1:
                continue
            for y in graph.adjacency[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        for v, dv in dist.items():
            cv = members.get(v)
            if cv is not None and cv != c and dv < h:
                return False
    return True


def run_one(config: dict, graph: BipartiteGraph, seed: int) -> dict:
    """Execute one (pipeline, graph, seed) and build its record."""
    pipeline = config["pipeline"]
    view = SubgraphView.whole(graph)
    eps = float(config.get("eps") or 0.5)
    bandwidth = config.get("bandwidth")
    if bandwidth is not None:
        bandwidth = int(bandwidth)
    use_oracle = not _truthy(config.get("no_oracle"))
    record = {
        "pipeline": pipeline,
        "params": {},
        "graph": config["graph"],
        "n": graph.n,
        "m": graph.m,
        "D": oracle.diameter(graph),
        "max_degree": graph.max_degree,
        "opt": None,
        "cover_size": None,
        "valid": False,
        "rounds": 0,
        "max_message_bits": 0,
        "total_bits": 0,
        "seed": seed,
        "wall_ms": 0.0,
    }
    if bandwidth is not None:
        record["params"]["bandwidth"] = int(bandwidth)
    t0 = time.perf_counter()

    extra = {}
    if pipeline == "exact":
        cover, stats = koenig_exact_cover(graph, view, seed=seed, bandwidth=bandwidth)
        record["cover_size"] = cover.size
        valid = cover.is_valid()
    elif pipeline == "diameter1":
        k = int(config["k"]) if config.get("k") else max(1, math.ceil(1.0 / eps))
        record["params"].update({"k": k, "eps": eps})
        matching, m_stats = eliminate_short_aug_paths(
            graph, view, Matching([], view), k, seed=seed, bandwidth=bandwidth
        )
        cover, stats = koenig_approx_cover(
            graph, view, matching, k, seed=seed + 1, bandwidth=bandwidth
        )
        stats.add_sequential(m_stats)
        record["cover_size"] = cover.size
        valid = cover.is_valid() and k * cover.size <= (k + 1) * matching.size
    elif pipeline == "rand-pipeline":
        record["params"]["eps"] = eps
        cover, stats, cluster_set = randomized_pipeline(
            graph, eps, seed=seed, bandwidth=bandwidth
        )
        record["cover_size"] = cover.size
        extra["clusters"] = len(cluster_set.clusters())
        extra["max_tree_height"] = cluster_set.max_tree_height()
        valid = cover.is_valid() and _separation_ok(graph, cluster_set)
    elif pipeline == "det-low-diam":
        record["params"]["eps"] = eps
        cover, stats = det_cover_low_diameter(graph, view, eps, seed=seed, bandwidth=bandwidth)
        record["cover_size"] = cover.size
        valid = cover.is_valid()
    elif pipeline == "clustering-only":
        lam = float(config["lam"]) if config.get("lam") else eps / 4.0
        record["params"]["lam"] = lam
        assignment, stats = mpx_partition(graph, lam, seed=seed, bandwidth=bandwidth)
        cluster_set, shrink_stats = shrink_partition(
            graph, assignment, lam=lam, seed=seed + 1, bandwidth=bandwidth
        )
        stats.add_sequential(shrink_stats)
        stats.add_sequential(
            build_cluster_trees(graph, cluster_set, seed=seed + 2, bandwidth=bandwidth)
        )
        extra["clusters"] = len(cluster_set.clusters())
        extra["max_tree_height"] = cluster_set.max_tree_height()
        extra["congestion"] = cluster_set.congestion
        valid = _separation_ok(graph, cluster_set)
    elif pipeline == "matching-only":
        provider = config.get("provider")
        if not provider:
            provider = f"eliminate:k={config['k']}" if config.get("k") else "maximal"
        record["params"]["provider"] = provider
        spec = parse_provider(provider)
        matching, stats = spec.run(graph, view, seed=seed, bandwidth=bandwidth)
        record["cover_size"] = matching.size
        if spec.kind == "maximal":
            valid = all(
                matching.is_matched(u) or matching.is_matched(v) for u, v in view.in_edges
            )
        elif spec.kind == "eliminate":
            valid = oracle.shortest_aug_path_len(view, matching) >= 2 * spec.k + 1
        else:
            k = max(1, math.ceil(1.0 / spec.delta) - 1)
            valid = oracle.shortest_aug_path_len(view, matching) >= 2 * k + 1
    else:
        raise InvalidParam(f"unknown pipeline {pipeline!r}")

    record["wall_ms"] = round(1000.0 * (time.perf_counter() - t0), 3)
    record["rounds"] = stats.rounds
    record["max_message_bits"] = stats.max_message_bits
    record["total_bits"] = stats.total_bits

    if use_oracle:
        if pipeline == "matching-only":
            record["opt"] = oracle.max_matching_oracle(view).size
            if record["params"].get("provider", "").startswith(("approx", "det-approx")):
                delta = parse_provider(record["params"]["provider"]).delta
                valid = valid and record["cover_size"] >= (1 - delta) * record["opt"] - 1e-9
        elif pipeline != "clustering-only":
            record["opt"] = oracle.min_vc_oracle(view).size
            if pipeline == "exact":
                valid = valid and record["cover_size"] == record["opt"]
            elif pipeline == "det-low-diam":
                valid = valid and record["cover_size"] <= (1 + eps) * record["opt"] + 1e-9
            elif pipeline == "diameter1":
                k = record["params"]["k"]
                valid = valid and k * record["cover_size"] <= (k + 1) * record["opt"]

    record["valid"] = bool(valid)
    record.update(extra)
    return record


def run_experiment(config: dict) -> list[dict]:
    """All (seed) runs for one configuration; records in seed order."""
    if config.get("pipeline") not in PIPELINES:
        raise InvalidParam(f"pipeline must be one of {', '.join(PIPELINES)}")
    if not config.get("graph"):
        raise InvalidParam("a graph file or gen: spec is required")
    graph = load_graph(config["graph"])
    records = []
    base_seed = int(config.get("seed") or 0)
    for i in range(int(config.get("repeat") or 1)):
        records.append(run_one(config, graph, base_seed + i))
    return records


def verify_record(record: dict) -> dict:
    """Re-run a record's configuration and compare byte-for-byte fields."""
    config = {
        "pipeline": record["pipeline"],
        "graph": record["graph"],
        "eps": record.get("params", {}).get("eps"),
        "k": record.get("params", {}).get("k"),
        "lam": record.get("params", {}).get("lam"),
        "provider": record.get("params", {}).get("provider"),
        "bandwidth": record.get("params", {}).get("bandwidth"),
        "no_oracle": record.get("opt") is None,
    }
    graph = load_graph(record["graph"])
    fresh = run_one(config, graph, record["seed"])
    mismatches = {}
    for key in ("cover_size", "rounds", "max_message_bits", "total_bits", "opt"):
        if fresh.get(key) != record.get(key):
            mismatches[key] = {"recorded": record.get(key), "recomputed": fresh.get(key)}
    ok = not mismatches and fresh["valid"]
    return {
        "pipeline": record["pipeline"],
        "graph": record["graph"],
        "seed": record["seed"],
        "pass": ok,
        "valid_rerun": fresh["valid"],
        "mismatches": mismatches,
    }


def _read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise InvalidParam(f"{path}:{lineno}: expected key=value, got {line!r}")
            out[key.strip()] = value.strip()
    return out


def _merge_config(args) -> dict:
    config = dict(_DEFAULTS)
    if args.config:
        file_conf = _read_config_file(args.config)
        unknown = set(file_conf) - set(_DEFAULTS)
        if unknown:
            raise InvalidParam(f"unknown config keys: {sorted(unknown)}")
        config.update(file_conf)
    for key in _DEFAULTS:
        cli_value = getattr(args, key, None)
        if cli_value is not None and cli_value is not False:
            config[key] = cli_value
    return config


def _emit(records, out_path, csv_path):
    lines = [json.dumps(r, sort_keys=True) for r in records]
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        for line in lines:
            print(line)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for r in records:
                fh.write(",".join(str(r.get(c, "")) for c in CSV_COLUMNS) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bvc",
        description="Distributed bipartite vertex cover experiments on a "
        "simulated bandwidth-limited synchronous network.",
        epilog="CSV column order: " + ",".join(CSV_COLUMNS),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a pipeline and emit JSON records")
    p_run.add_argument("--pipeline", choices=PIPELINES)
    p_run.add_argument("--graph", help="graph file, or gen:<family>:k=v,... spec")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--repeat", type=int, help="number of consecutive seeds")
    p_run.add_argument("--eps", type=float)
    p_run.add_argument("--k", type=int)
    p_run.add_argument("--lam", type=float)
    p_run.add_argument("--provider", help="matching provider for matching-only")
    p_run.add_argument("--bandwidth", type=int, help="bits per edge per round")
    p_run.add_argument("--no-oracle", dest="no_oracle", action="store_true")
    p_run.add_argument("--config", help="key=value defaults file")
    p_run.add_argument("--out", help="JSONL output path (default stdout)")
    p_run.add_argument("--csv", help="also write a CSV projection here")

    p_verify = sub.add_parser("verify", help="replay records and compare")
    p_verify.add_argument("--record", required=True, help="JSONL records file")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = _merge_config(args)
            records = run_experiment(config)
            _emit(records, args.out, args.csv)
            return 0 if all(r["valid"] for r in records) else 1
        reports = []
        with open(args.record, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    reports.append(verify_record(json.loads(line)))
        for report in reports:
            print(json.dumps(report, sort_keys=True))
        return 0 if all(r["pass"] for r in reports) else 1
    except BvcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
