"""Batch command line interface.

Subcommands reproduce the library's studies at desk scale and emit CSV tables
with a JSON metadata sidecar.  Every run is fully determined by its config and
seed: re-running with the same inputs yields byte-identical output files.

Config files are JSON objects whose keys are the fields of the experiment's
config dataclass (see ``circint.experiments``); unknown keys are rejected.
Command line flags override config values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    CollaborationConfig,
    DecompositionConfig,
    KsSweepConfig,
    PaprConfig,
    ResultTable,
    run_collaboration,
    run_ks_sweep,
    run_papr,
    run_single_circle_decomposition,
    curve_csv,
    scenario_digest,
)
from .circular import PathLossLaw, scenario_to_json
from .gamma_sum import canonicalize, sum_pdf, term_set_from_json
from .mapping import deployment_from_text, map_deployment, profiles_to_csv

_CONFIG_TYPES = {
    "ks-sweep": KsSweepConfig,
    "papr": PaprConfig,
    "collab": CollaborationConfig,
    "decompose": DecompositionConfig,
}

# published experiment sizes, restored by --paper-scale
_PAPER_SCALE = {
    "ks-sweep": {"snapshots": 1000, "fading_draws": 10_000},
    "papr": {"snapshots": 1000},
    "collab": {"mc_draws": 10_000_000},
    "decompose": {"mc_draws": 10_000_000},
}


def _load_config(cls, path: str | None, overrides: dict):
    values: dict = {}
    if path is not None:
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise SystemExit(f"config {path} must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise SystemExit(
                f"unknown config keys {sorted(unknown)}; expected a subset of {sorted(known)}"
            )
        values.update(doc)
    values.update({k: v for k, v in overrides.items() if v is not None})
    # JSON lists become the tuples the frozen configs expect
    for f in dataclasses.fields(cls):
        if f.name in values and isinstance(values[f.name], list):
            values[f.name] = tuple(values[f.name])
    try:
        return cls(**values)
    except TypeError as exc:
        raise SystemExit(f"bad config: {exc}") from exc


def _write_table(table: ResultTable, out: str) -> None:
    out_path = Path(out)
    out_path.write_text(table.to_csv())
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(table.metadata(), sort_keys=True, indent=2) + "\n"
    )
    print(f"wrote {out_path} ({len(table.rows)} rows) and {out_path}.meta.json")


def _add_common(p: argparse.ArgumentParser, default_out: str) -> None:
    p.add_argument("--config", help="JSON config file (keys = config dataclass fields)")
    p.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    p.add_argument("--out", default=default_out, help=f"output CSV path (default {default_out})")
    p.add_argument("--snapshots", type=int, help="override snapshot count")
    p.add_argument("--samples", type=int, help="override Monte Carlo sample count")
    p.add_argument(
        "--paper-scale",
        action="store_true",
        help="restore published snapshot/sample counts (long runtimes)",
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="circint",
        description="circular interference model experiments",
    )
    parser.add_argument("--version", action="version", version=f"circint {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ks-sweep", help="mapping fidelity: KS distance over user eccentricity")
    _add_common(p, "ks_sweep.csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    p = sub.add_parser("papr", help="peak-to-average ratios of mapped power profiles")
    _add_common(p, "papr.csv")

    p = sub.add_parser("collab", help="SIR/rate statistics of collaboration schemes")
    _add_common(p, "collab.csv")
    p.add_argument(
        "--curves-dir",
        help="also write per-(scheme, position) two-column SIR CDF curve files here",
    )

    p = sub.add_parser("decompose", help="dominant-interferer decomposition of one circle")
    _add_common(p, "decompose.csv")

    p = sub.add_parser("map", help="condense a deployment file into a circular scenario")
    p.add_argument("--deployment", required=True, help="deployment text file")
    p.add_argument("--circles", type=int, required=True)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--out", default="scenario.json")
    p.add_argument("--intercept", type=float, default=1.0, help="path gain cap (default 1)")
    p.add_argument("--constant", type=float, default=1.0, help="path loss constant (default 1)")
    p.add_argument("--exponent", type=float, default=4.0, help="path loss exponent (default 4)")

    p = sub.add_parser("pdf", help="density/CDF curve of a Gamma term set")
    p.add_argument("--terms", required=True, help="term-set JSON file")
    p.add_argument("--out", default="curve.csv")
    p.add_argument("--kind", choices=("pdf", "cdf"), default="pdf")
    p.add_argument("--points", type=int, default=400)

    args = parser.parse_args(argv)

    if args.command in _CONFIG_TYPES:
        overrides: dict = {}
        if args.snapshots is not None:
            overrides["snapshots"] = args.snapshots
        if args.samples is not None:
            key = {"ks-sweep": "fading_draws", "collab": "mc_draws", "decompose": "mc_draws"}.get(
                args.command
            )
            if key is None:
                raise SystemExit(f"--samples does not apply to {args.command}")
            overrides[key] = args.samples
        if args.paper_scale:
            for k, v in _PAPER_SCALE[args.command].items():
                overrides.setdefault(k, v)
        config = _load_config(_CONFIG_TYPES[args.command], args.config, overrides)
        if args.command == "ks-sweep":
            table = run_ks_sweep(config, args.seed, jobs=args.jobs)
        elif args.command == "papr":
            table = run_papr(config, args.seed)
        elif args.command == "collab":
            table = run_collaboration(config, args.seed)
            if args.curves_dir:
                from .experiments import collaboration_curve_files

                curve_dir = Path(args.curves_dir)
                curve_dir.mkdir(parents=True, exist_ok=True)
                for name, body in collaboration_curve_files(config, args.seed).items():
                    (curve_dir / name).write_text(body)
                print(f"wrote curve files to {curve_dir}")
        else:
            table = run_single_circle_decomposition(config, args.seed)
        _write_table(table, args.out)
        return 0

    if args.command == "map":
        dep = deployment_from_text(Path(args.deployment).read_text())
        law = PathLossLaw(args.intercept, args.constant, args.exponent)
        scenario = map_deployment(dep, law, args.circles, args.nodes)
        Path(args.out).write_text(scenario_to_json(scenario))
        profile_path = Path(args.out).with_suffix(".profiles.csv")
        profile_path.write_text(profiles_to_csv(scenario))
        print(f"wrote {args.out} (digest {scenario_digest(scenario)}) and {profile_path}")
        return 0

    if args.command == "pdf":
        raw = term_set_from_json(Path(args.terms).read_text())
        term_set = canonicalize(raw)
        mix = sum_pdf(term_set)
        x_max = 40.0 * max(t.mean for t in term_set)
        xs = np.linspace(0.0, x_max, args.points)
        ys = mix.pdf(xs) if args.kind == "pdf" else mix.cdf(xs)
        meta = {
            "kind": args.kind,
            "terms": [[t.shape, t.scale] for t in term_set],
            "points": args.points,
        }
        Path(args.out).write_text(curve_csv(xs, ys, meta))
        print(f"wrote {args.out}")
        return 0

    raise SystemExit(f"unhandled command {args.command}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
