"""Command-line entry point: ``bbig {validate,growth,centrality,gen-graph,sample-pop}``.

Exit codes: 0 success, 1 property or run failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import statistics
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    GROWTH_COLUMNS,
    METRICS_COLUMNS,
    build_graph,
    centrality_rows,
    growth_run,
    run_validation,
    sub_seed,
    trend,
)
from .machine import run_bounded
from .runner import sample_population
from .seeding import rng_for
from .svg import line_chart
from .temporal_graph import GenerationError, GraphParseError, store_graph

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class Collector:
    """Writes output files and the run manifest for one command."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.sub_seeds: dict[str, int] = {}
        self.extra: dict = {}

    def csv(self, name: str, header, rows) -> None:
        with open(self.out / name, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            wr.writerows(rows)
        self._add(name)

    def text(self, name: str, body: str) -> None:
        (self.out / name).write_text(body)
        self._add(name)

    def _add(self, name: str) -> None:
        if name not in self.files:
            self.files.append(name)

    def manifest(self, status: str) -> None:
        files = {
            name: hashlib.sha256((self.out / name).read_bytes()).hexdigest()
            for name in sorted(self.files)
        }
        doc = {
            "tool": "bbig",
            "version": __version__,
            "command": self.command,
            "status": status,
            "config_hash": self.cfg.digest(),
            "config": self.cfg.canonical(),
            "sub_seeds": dict(sorted(self.sub_seeds.items())),
            "files": files,
            **self.extra,
        }
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_validate(cfg: ExperimentConfig) -> int:
    col = Collector(cfg, "validate")
    results = run_validation(cfg)
    col.csv("validate.csv", ("check", "cases", "failures", "status", "detail"),
            [(r.name, r.cases, r.failures, "pass" if r.passed else "FAIL", r.detail) for r in results])
    failed = [r for r in results if not r.passed]
    col.text("validate_report.json", json.dumps(
        {"passed": not failed,
         "failures": [{"check": r.name, "count": r.failures, "detail": r.detail} for r in failed]},
        indent=2, sort_keys=True) + "\n")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.cases} cases) {r.detail}".rstrip())
    col.manifest("fail" if failed else "ok")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_growth(cfg: ExperimentConfig) -> int:
    col = Collector(cfg, "growth")
    rows, traces, finals = [], [], []
    status = "ok"
    try:
        for n in cfg.N_grid:
            for r in range(cfg.replicates):
                for name in ("graph", "population", "bindings", "omega"):
                    col.sub_seeds[f"{name}/N={n}/r={r}"] = sub_seed(cfg, name, n, r)
                run = growth_run(cfg, n, r)
                rows.append(run.row)
                traces.extend(run.trace_rows)
                finals.extend(run.final_rows)
                print(f"N={n} r={r} eeac={run.row['eeac']} tau_E={run.row['tau_E']} "
                      f"omega={run.row['omega_hat']} lead={run.row['leading_term']}")
    except Exception as exc:  # flush what we have before reporting
        status = f"error: {type(exc).__name__}: {exc}"
        print(status, file=sys.stderr)

    col.csv("growth.csv", GROWTH_COLUMNS, ([row[k] for k in GROWTH_COLUMNS] for row in rows))
    col.csv("trace.csv", ("run_id", "cycle", "node", "value", "carrier", "lineage", "oracle_flag"), traces)
    col.csv("finals.csv", ("run_id", "node", "net_final", "iso_final", "eac_estimate"), finals)

    ns = sorted({row["N"] for row in rows})
    dat = ["# lgN N mean_eeac mean_leading_term mean_amax_bits"]
    lgn, eeac_means, lead_means = [], [], []
    for n in ns:
        sel = [row for row in rows if row["N"] == n]
        e = statistics.fmean(float(row["eeac"]) for row in sel)
        ld = statistics.fmean(float(row["leading_term"]) for row in sel)
        ab = statistics.fmean(row["amax_bits"] for row in sel)
        lgn.append(math.log2(n))
        eeac_means.append(e)
        lead_means.append(ld)
        dat.append(f"{math.log2(n):.6f} {n} {e:.6f} {ld:.6f} {ab:.6f}")
    col.text("growth.dat", "\n".join(dat) + "\n")
    col.text("growth.svg", line_chart(
        [("EEAC", lgn, eeac_means), ("(tau_E - omega) lg N", lgn, lead_means)],
        title="Emergent complexity versus population size", xlabel="lg N", ylabel="bits"))

    trends = {}
    for metric in ("eeac", "leading_term"):
        t = trend(rows, metric)
        if t is not None:
            trends[metric] = {"means": [round(m, 6) for m in t.means], "monotone": t.monotone,
                              "spearman": round(t.spearman, 6)}
            print(f"trend {metric}: monotone={t.monotone} spearman={t.spearman:.3f}")
    col.extra["trends"] = trends
    col.manifest(status)
    return EXIT_OK if status == "ok" else EXIT_FAIL


def cmd_centrality(cfg: ExperimentConfig) -> int:
    col = Collector(cfg, "centrality")
    rows = []
    for n in cfg.N_grid:
        col.sub_seeds[f"centrality/N={n}"] = sub_seed(cfg, "centrality", n)
        part, diag = centrality_rows(cfg, n)
        rows.extend(part)
        t_cen = part[0][-2] if part else "None"
        print(f"N={n} t_cen={t_cen}")
        if t_cen == "None":
            print(f"warning: N={n}: no qualifying instant ({diag})", file=sys.stderr)
    col.csv("metrics.csv", METRICS_COLUMNS, rows)
    col.manifest("ok")
    return EXIT_OK


def cmd_gen_graph(cfg: ExperimentConfig) -> int:
    col = Collector(cfg, "gen-graph")
    for n in cfg.N_grid:
        if cfg.graph.kind == "small_diameter":
            col.sub_seeds[f"graph/N={n}/r=0"] = sub_seed(cfg, "graph", n)
        g = build_graph(cfg, n)
        name = f"graph_N{n}.tvg"
        store_graph(g, col.out / name)
        col._add(name)
        print(f"wrote {col.out / name}: N={n} T={g.instant_count} edges={len(g.edges)}")
    col.manifest("ok")
    return EXIT_OK


def cmd_sample_pop(cfg: ExperimentConfig) -> int:
    col = Collector(cfg, "sample-pop")
    for n in cfg.N_grid:
        col.sub_seeds[f"population/N={n}/r=0"] = sub_seed(cfg, "population", n)
        pop = sample_population(n, rng_for(cfg.seed, f"population/N={n}/r=0"))
        rows = []
        for label, p in zip(pop.labels, pop.programs):
            res = run_bounded(p, cfg.w, cfg.budget)
            rows.append((label, p.bits, str(p), int(res.halted), res.output, res.steps))
        col.csv(f"population_N{n}.csv", ("label", "bits", "instructions", "halted", "cycle1_value", "steps"), rows)
    col.manifest("ok")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "growth": cmd_growth,
    "centrality": cmd_centrality,
    "gen-graph": cmd_gen_graph,
    "sample-pop": cmd_sample_pop,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bbig", description="Busy Beaver imitation game simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (unsigned 64-bit)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, args.set, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"bbig: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except (GraphParseError, GenerationError, OSError) as exc:
        print(f"bbig: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
