"""Command line front end.

Subcommands: whitney (decompose + contract report), extend (sample the
extension on a grid), functional (evaluate one functional from a JSON
config), tracenorm (trace-norm estimate with breakdown), verify
(equivalence experiment), demo (acceptance suite / deterministic report
pipeline).  Exit codes: 0 ok, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .canonical import CANONICAL_NAMES, CanonicalSpec, generate_canonical
from .canonical import test_function_family as function_family
from .grid import GridField
from .measures import (
    A_p_mu,
    DiscreteMeasure,
    averaged_modulus_w1,
    besov_trace_functional_jonsson,
    counting_measure,
    distance_pair_energy,
    dset_besov_norm,
    local_pair_energy,
    measure_diagnostics,
    quasidistance_pair_energy,
)
from .norms import TraceEstimateConfig, grid_sobolev_norms, trace_estimate
from .oscillation import (
    grid_packing_functional,
    modulus_of_smoothness,
    packing_functional_details,
    sharp_maximal,
)
from .sets import ClosedSet
from .util import ConfigError, NumericalFailure, json_default
from .verify import boundary_measure, verify_equivalence, whitney_contract_report
from .whitney import extend_grid, whitney_decomposition


def _emit(payload: dict, out: str | None, name: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=json_default)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text + "\n")
    else:
        print(text)


def _parse_level(token: str) -> float:
    token = token.strip()
    if "/" in token:
        num, den = token.split("/", 1)
        return float(num) / float(den)
    return float(token)


def _parse_levels(text: str | None):
    if not text:
        return None
    return [_parse_level(tok) for tok in text.split(",") if tok.strip()]


def _load_set(args) -> tuple[ClosedSet, DiscreteMeasure]:
    if getattr(args, "set", None):
        S = ClosedSet.load(args.set)
        if getattr(args, "measure", None):
            mu = DiscreteMeasure.load(args.measure)
        else:
            mu = counting_measure(S, normalized=True)
        return S, mu
    if getattr(args, "canonical", None):
        return generate_canonical(CanonicalSpec(args.canonical, args.h))
    raise ConfigError("need --set FILE or --canonical NAME")


def _load_values(args, S: ClosedSet) -> np.ndarray:
    if getattr(args, "function", None):
        obj = json.loads(Path(args.function).read_text())
        vals = np.asarray(obj["values"] if isinstance(obj, dict) else obj, float)
    elif getattr(args, "family", None):
        members = function_family(args.family, S)
        idx = args.member
        if not (0 <= idx < len(members)):
            raise ConfigError(
                f"family {args.family!r} has {len(members)} members, got index {idx}"
            )
        vals = members[idx].values
    else:
        raise ConfigError("need --function FILE or --family NAME")
    if len(vals) != len(S.points):
        raise ConfigError(
            f"function has {len(vals)} values for {len(S.points)} samples"
        )
    return vals


def _set_flags(sub, with_measure: bool = True) -> None:
    sub.add_argument("--set", help="ClosedSet JSON file")
    sub.add_argument("--canonical", choices=CANONICAL_NAMES, help="generator name")
    sub.add_argument("--h", type=_parse_level, default=1 / 128, help="resolution for --canonical")
    if with_measure:
        sub.add_argument("--measure", help="DiscreteMeasure JSON file (with --set)")


def _function_flags(sub) -> None:
    sub.add_argument("--function", help="JSON file with a values array")
    sub.add_argument("--family", help="test family name, e.g. hoelder(0.7)")
    sub.add_argument("--member", type=int, default=0, help="family member index")


# -- subcommands -------------------------------------------------------


def cmd_whitney(args) -> int:
    S, _ = _load_set(args)
    W = whitney_decomposition(S)
    report = whitney_contract_report(S, W, seed=args.seed)
    slack = 2 * S.h + 1e-12
    dists = np.maximum(
        0.0, S.nearest_distance(W.centers) - W.radii - S.sample_radius
    )
    per_cube_ok = (W.diams - dists <= slack) & (dists - 4 * W.diams <= slack)
    payload = {
        "set": S.name,
        "report": report,
        "pass_count": int(per_cube_ok.sum()),
        "cube_count": len(W),
        "cubes": [c.to_json() for c in W.cubes()],
    }
    _emit(payload, args.out, "whitney.json")
    return 0


def cmd_extend(args) -> int:
    S, _ = _load_set(args)
    vals = _load_values(args, S)
    W = whitney_decomposition(S)
    span = float(np.max(S.points.max(axis=0) - S.points.min(axis=0)))
    delta = args.delta if args.delta is not None else max(span, S.h)
    F = extend_grid(W, vals, delta, args.cbar)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    F.save(out / "extension", fmt=args.format)
    norms = grid_sobolev_norms(F, args.p)
    _emit(
        {
            "set": S.name,
            "delta": delta,
            "cbar": args.cbar,
            "grid_shape": list(F.values.shape),
            "lp": norms.lp,
            "seminorm": norms.seminorm,
            "total": norms.total,
        },
        args.out,
        "extend.json",
    )
    return 0


def _run_functional(kind: str, cfg: dict, S, mu, vals):
    p = float(cfg.get("p", 3.0))
    if kind == "packing":
        return packing_functional_details(
            S, vals, float(cfg["t"]), p,
            centers=cfg.get("centers", "set"),
            alpha=cfg.get("alpha"),
            strong=bool(cfg.get("strong", False)),
            mode=cfg.get("mode", "greedy"),
        )
    if kind == "grid-packing":
        F = GridField.load(cfg["field"])
        return grid_packing_functional(F, float(cfg["t"]), p, details=True)
    if kind == "sharp-maximal":
        x = np.asarray(cfg["x"], float)
        return {"value": sharp_maximal(S, vals, x, variant=cfg.get("variant", "range_ratio"))}
    if kind == "ap-mu":
        return A_p_mu(
            S, mu, vals, float(cfg["t"]), p,
            q=float(cfg.get("q", 1.0)),
            alpha=cfg.get("alpha"),
            strong=bool(cfg.get("strong", False)),
            variant=cfg.get("variant", "pair"),
            mode=cfg.get("mode", "greedy"),
            details=True,
        )
    if kind == "local-pair-energy":
        val = local_pair_energy(mu, vals, float(cfg["t"]), p, kernel=cfg.get("kernel", "square"))
        return {"value": val}
    if kind == "distance-pair-energy":
        return {"value": distance_pair_energy(mu, vals, float(cfg["eps"]), p)}
    if kind == "quasidistance-energy":
        return quasidistance_pair_energy(
            S, mu, vals, float(cfg["eps"]), p,
            alpha=float(cfg.get("alpha", 1 / 15)),
            pair_budget=int(cfg.get("pair_budget", 4000)),
            seed=int(cfg.get("seed", 0)),
            details=True,
        )
    if kind == "besov-dset":
        return {
            "value": dset_besov_norm(
                mu, vals, float(cfg["s"]), p, float(cfg.get("d", 1.0))
            )
        }
    if kind == "besov-jonsson":
        return {
            "value": besov_trace_functional_jonsson(
                mu, vals, float(cfg["s"]), p, float(cfg.get("q", p)),
                float(cfg.get("level_floor", 4 * S.h)),
            )
        }
    if kind == "averaged-modulus":
        return {"value": averaged_modulus_w1(mu, vals, float(cfg["t"]), p)}
    if kind == "modulus":
        F = GridField.load(cfg["field"])
        return {"value": modulus_of_smoothness(F, float(cfg["t"]), p)}
    if kind == "measure-diagnostics":
        diag = measure_diagnostics(mu, seed=int(cfg.get("seed", 0)))
        return dataclasses.asdict(diag)
    raise ConfigError(f"unknown functional {kind!r}")


def cmd_functional(args) -> int:
    cfg = json.loads(Path(args.config).read_text())
    kind = cfg.pop("functional", None)
    if not kind:
        raise ConfigError("config needs a 'functional' key")
    S, mu = _load_set(args)
    needs_f = kind not in ("grid-packing", "modulus", "measure-diagnostics")
    vals = _load_values(args, S) if needs_f else None
    result = _run_functional(kind, cfg, S, mu, vals)
    _emit(
        {"functional": kind, "set": S.name, "params": cfg, "result": result},
        args.out,
        "functional.json",
    )
    return 0


def cmd_tracenorm(args) -> int:
    raw = json.loads(Path(args.config).read_text())
    cfg = TraceEstimateConfig(**raw)
    S, mu = _load_set(args)
    vals = _load_values(args, S)
    sigma = boundary_measure(S) if cfg.theorem == "decomposed" else None
    report = trace_estimate(S, vals, cfg, mu=mu, sigma=sigma)
    payload = {
        "theorem": cfg.theorem,
        "set": S.name,
        "value": report.value,
        "breakdown": report.breakdown,
        "resolution": report.resolution,
        "notes": list(report.notes),
    }
    _emit(payload, args.out, "tracenorm.json")
    if args.out:
        with open(Path(args.out) / "tracenorm.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["term", "value"])
            for key in sorted(report.breakdown):
                writer.writerow([key, repr(report.breakdown[key])])
            writer.writerow(["total", repr(report.value)])
    return 0


def cmd_verify(args) -> int:
    cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    theorem = cfg.pop("theorem", None) or args.theorem
    set_name = cfg.pop("set", None) or args.canonical
    family = cfg.pop("family", None) or args.family or "restrictions-of-smooth"
    if not theorem or not set_name:
        raise ConfigError("verify needs a theorem id and a canonical set name")
    levels = _parse_levels(args.h_levels) or cfg.pop("h_levels", None)
    cfg.setdefault("pair_budget", args.pair_budget)
    cfg.setdefault("seed", args.seed)
    report = verify_equivalence(theorem, set_name, family, levels, **cfg)
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        report.save(path / "report.json")
    else:
        print(report.dumps())
    return 0


def cmd_demo(args) -> int:
    from . import acceptance

    out = Path(args.out or "demo_out")
    out.mkdir(parents=True, exist_ok=True)
    if args.profile == "quick":
        acceptance.quick_reports(out, seed=args.seed)
        print(f"wrote quick report files to {out}")
        return 0
    results = acceptance.run_all(out_dir=out, seed=args.seed)
    width = max(len(r.label) for r in results)
    for r in results:
        print(f"{r.label:<{width}}  {'pass' if r.passed else 'FAIL'}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return 0 if n_fail == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sobtrace",
        description="trace-norm functionals and Whitney extension experiments",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="output directory (default: print JSON)")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("whitney", help="decompose the complement, check the contract")
    _set_flags(s, with_measure=False)
    s.set_defaults(func=cmd_whitney)

    s = sub.add_parser("extend", help="sample the extension operator on a grid")
    _set_flags(s, with_measure=False)
    _function_flags(s)
    s.add_argument("--delta", type=float, default=None, help="smoothing scale (default: set span)")
    s.add_argument("--cbar", type=float, default=0.0, help="far-field fill constant")
    s.add_argument("--p", type=float, default=3.0)
    s.add_argument("--format", choices=("binary", "csv"), default="binary")
    s.set_defaults(func=cmd_extend)

    s = sub.add_parser("functional", help="evaluate one functional from a JSON config")
    _set_flags(s)
    _function_flags(s)
    s.add_argument("--config", required=True, help="JSON config with a 'functional' key")
    s.set_defaults(func=cmd_functional)

    s = sub.add_parser("tracenorm", help="trace-norm estimate with breakdown")
    _set_flags(s)
    _function_flags(s)
    s.add_argument("--config", required=True, help="TraceEstimateConfig as JSON")
    s.set_defaults(func=cmd_tracenorm)

    s = sub.add_parser("verify", help="equivalence experiment across h-levels")
    s.add_argument("--config", help="keyword arguments as JSON")
    s.add_argument("--theorem", help="theorem id, e.g. T11")
    s.add_argument("--canonical", choices=CANONICAL_NAMES)
    s.add_argument("--family", help="test family name")
    s.add_argument("--h-levels", help="comma list, e.g. 1/64,1/128")
    s.add_argument("--pair-budget", type=int, default=4000)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("demo", help="run the acceptance suite")
    s.add_argument("--profile", choices=("full", "quick"), default="full")
    s.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
