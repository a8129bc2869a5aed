"""Command-line entry point: ``apernet <command> --config cfg.json``.

Exit codes: 0 on success, 1 on runtime errors, 2 on configuration errors.
Every output embeds the format version, the resolved configuration and the
seed; the worker count is deliberately left out so outputs do not depend on it.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import _parallel
from . import io as aio
from .bdmatch import build_instance, lattice_pointset, max_matching, min_bd_radius
from .correlation import RationalSubspace, dilation_table, linearity_spread, not_correlated_test, orbit_section_count
from .diophantine import complete_basis, growth_fit, min_inner_product, strongly_dioph_sum
from .equidist import BirkhoffQuery, birkhoff_exact_1d, birkhoff_estimate, discrepancy_scan, erdos_turan_bound, nt_estimate_bound
from .errors import ApernetError, ConfigError
from .geometry import AlignedBox, AlignedParallelotope, Basis, box_membership, check_injective
from .netgen import FlowSpec, Section, visit_set
from .selberg import build_selberg_pair, build_trig_pair, eval_trig, fourier_coefficient_bound, zero_coefficient_excess

FORMAT_VERSION = aio.FORMAT_VERSION


# ---------------------------------------------------------------------------
# config helpers


def _require(cfg: dict, key: str) -> Any:
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"missing required field {key!r}")
    return cfg[key]


def _parse(builder: Callable, raw: Any, what: str):
    try:
        return builder(raw)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def parse_flow(raw: dict) -> FlowSpec:
    return _parse(FlowSpec.from_dict, raw, "flow")


def parse_box(raw: dict) -> AlignedBox:
    return _parse(AlignedBox.from_dict, raw, "box")


def parse_target(raw: dict):
    if "linear_part" in raw:
        return _parse(AlignedParallelotope.from_dict, raw, "parallelotope")
    return parse_box(raw)


def parse_section(raw: dict) -> Section:
    return _parse(Section.from_dict, raw, "section")


def set_path(cfg: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def load_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        cfg = aio.read_json(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    cfg = copy.deepcopy(cfg)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError:
            parsed = val
        set_path(cfg, key, parsed)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    if args.output:
        cfg["output"] = args.output
    return cfg


def envelope(command: str, cfg: dict, result: dict) -> dict:
    return {"format_version": FORMAT_VERSION, "command": command, "config": cfg, "seed": cfg.get("seed", 0), "result": result}


def _output(cfg: dict, default: str) -> Path:
    return Path(cfg.get("output", default))


# ---------------------------------------------------------------------------
# commands


def cmd_gen(cfg: dict, threads: int) -> dict:
    flow = parse_flow(_require(cfg, "flow"))
    section = parse_section(_require(cfg, "section"))
    window = parse_box(_require(cfg, "window"))
    ps = visit_set(flow, section, window, threads=threads)
    out = _output(cfg, "points.txt")
    aio.write_pointset(out, ps, {"config": cfg, "seed": cfg.get("seed", 0)})
    return {"points": len(ps), "file": str(out)}


def cmd_discrepancy(cfg: dict, threads: int) -> dict:
    flow = parse_flow(_require(cfg, "flow"))
    U = parse_target(_require(cfg, "U"))
    T_list = _require(cfg, "T_list")
    rule = cfg.get("M_rule", "T^delta")
    if rule not in ("T^delta", "T^d"):
        raise ConfigError("M_rule must be 'T^delta' or 'T^d'")
    report = discrepancy_scan(flow, U, T_list, rule, float(cfg.get("delta", 0.5)), int(cfg["seed"]), threads)
    prefix = _output(cfg, "discrepancy")
    csv_path = prefix.with_suffix(".csv")
    csv_path.write_text(report.to_csv(), encoding="utf-8")
    summary = {"slope": report.slope, "stderr": report.stderr, "degenerate": report.degenerate, "rows": report.rows}
    aio.write_json(prefix.with_suffix(".json"), envelope("discrepancy", cfg, summary))
    return {"rows": len(report.rows), "csv": str(csv_path)}


def _random_parallelotope(rng: np.random.Generator, k: int, max_cond: float = 3.0) -> AlignedParallelotope:
    while True:
        L = np.eye(k) + 0.3 * rng.normal(size=(k, k))
        b = rng.uniform(0.05, 0.4, k)
        if np.linalg.cond(L) > max_cond:
            continue
        U = AlignedParallelotope(L, b, rng.random(k))
        try:
            check_injective(U)
        except ApernetError:
            continue
        return U


def cmd_selberg(cfg: dict, threads: int) -> dict:
    rng = np.random.default_rng(int(cfg["seed"]))
    ks = cfg.get("k_list", [2, 3])
    Ms = cfg.get("M_list", [4, 8, 16])
    n_inst = int(cfg.get("instances", 6))
    samples = int(cfg.get("samples", 10000))
    pairs = []
    for b, M in cfg.get("pairs", [[0.3, 4], [0.5, 10], [1.0, 16]]):
        P = build_selberg_pair(b, M)
        pairs.append({"b": b, "M": M, "C_hat0": float(P.majorant_hat(0.0)), "c_hat0": float(P.minorant_hat(0.0))})
    rows = []
    for i in range(n_inst):
        k, M = int(ks[i % len(ks)]), float(Ms[i % len(Ms)])
        U = _random_parallelotope(rng, k)
        phi, psi = build_trig_pair(U, M, threads=threads)
        x = rng.random((samples, k))
        chi = box_membership(U, x).astype(float)
        slack = min(float(np.min(eval_trig(psi, x) - chi)), float(np.min(chi - eval_trig(phi, x))))
        bound = fourier_coefficient_bound(U, psi.freqs)
        ok = bool(np.all(np.abs(psi.coeffs) <= bound) and np.all(np.abs(phi.coeffs) <= bound))
        up, low = zero_coefficient_excess(U, M)
        rows.append({"k": k, "M": M, "terms": len(psi), "min_slack": slack, "fourier_bound_ok": ok, "psi0_excess": up, "phi0_deficit": low, "U": U.to_dict()})
    worst = min(r["min_slack"] for r in rows) if rows else 0.0
    result = {"pairs": pairs, "instances": rows, "max_violation": max(0.0, -worst)}
    aio.write_json(_output(cfg, "selberg.json"), envelope("selberg", cfg, result))
    return {"max_violation": result["max_violation"]}


def cmd_et_bound(cfg: dict, threads: int) -> dict:
    flow = parse_flow(_require(cfg, "flow"))
    U = parse_target(_require(cfg, "U"))
    T_list = cfg.get("T_list", [cfg.get("T")])
    M_list = cfg.get("M_list", [cfg.get("M")])
    if None in T_list or None in M_list:
        raise ConfigError("need T (or T_list) and M (or M_list)")

    def row(tm):
        T, M = float(tm[0]), float(tm[1])
        if isinstance(U, AlignedBox):
            lead, tail = erdos_turan_bound(U, flow, T, M)
        else:
            lead, tail = nt_estimate_bound(U, flow, T, M)
        q = BirkhoffQuery(flow, U, T)
        N = birkhoff_exact_1d(q) if flow.d == 1 else birkhoff_estimate(q, seed=int(cfg["seed"]))[0]
        return {"T": T, "M": M, "leading": lead, "sum_term": tail, "N_T": N, "abs_diff": abs(N - q.volume_term)}

    rows = _parallel.ordered_map(row, [(T, M) for T in T_list for M in M_list], threads)
    aio.write_json(_output(cfg, "et_bound.json"), envelope("et-bound", cfg, {"rows": rows}))
    return {"rows": len(rows)}


def cmd_dioph(cfg: dict, threads: int) -> dict:
    rng = np.random.default_rng(int(cfg["seed"]))
    if "vs" in cfg:
        vs = np.asarray(cfg["vs"], dtype=float)
    else:
        rnd = cfg.get("random", {"k": 3, "d": 2})
        vs = rng.random((int(rnd["d"]), int(rnd["k"])))
    d, k = vs.shape
    basis = Basis(np.asarray(cfg["T"], dtype=float)) if "T" in cfg else complete_basis(vs)
    M_list = [int(m) for m in cfg.get("M_list", [16, 32, 64, 128])]
    rows = []
    for M in M_list:
        total = strongly_dioph_sum(vs, basis, M, threads=threads, allow_large=bool(cfg.get("allow_large", False)))
        mins = [min_inner_product(v, M, threads) for v in vs]
        best = min(range(d), key=lambda i: mins[i][0])
        rows.append({"M": M, "sum": total, "min_inner_product": mins[best][0], "argmin": list(mins[best][1])})
    fit = growth_fit([(r["M"], r["sum"]) for r in rows], k, d, start_M=cfg.get("trend_from", 32)) if len(rows) >= 4 else None
    prefix = _output(cfg, "dioph")
    lines = ["M,sum,min_inner_product,argmin"]
    lines += [f"{r['M']},{r['sum']!r},{r['min_inner_product']!r},{' '.join(map(str, r['argmin']))}" for r in rows]
    prefix.with_suffix(".csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    summary = {"vs": vs.tolist(), "T": basis.matrix.tolist(), "rows": rows}
    if fit is not None:
        summary.update({"eps_est": fit.eps_est, "normalized": fit.normalized, "log_power": fit.log_power, "non_increasing": fit.non_increasing})
    aio.write_json(prefix.with_suffix(".json"), envelope("dioph", cfg, summary))
    return {"rows": len(rows)}


def _load_Y(raw: dict):
    if "file" in raw:
        return aio.read_pointset(raw["file"])
    if "lattice" in raw:
        lat = raw["lattice"]
        return lattice_pointset(Basis(np.asarray(lat["basis"], dtype=float)), parse_box(raw["window"]), lat.get("shift"))
    raise ConfigError("Y needs 'file' or 'lattice'")


def cmd_match(cfg: dict, threads: int) -> dict:
    Y = _load_Y(_require(cfg, "Y"))
    lattice = Basis(np.asarray(_require(cfg, "lattice"), dtype=float))
    lam = float(cfg.get("lambda", 1.0 / abs(lattice.det)))
    window = parse_box(_require(cfg, "window"))
    rho = float(_require(cfg, "rho"))
    res = max_matching(build_instance(Y, lattice, lam, window, rho))
    result = res.to_dict()
    if "rho_max" in cfg:
        result["min_bd_radius"] = min_bd_radius(Y, lattice, lam, window, float(cfg["rho_max"]))
    aio.write_json(_output(cfg, "match.json"), envelope("match", cfg, result))
    return {"deficiency": res.deficiency}


def cmd_correlate(cfg: dict, threads: int) -> dict:
    Q = _parse(lambda r: RationalSubspace(np.asarray(r)), _require(cfg, "Q"), "rational subspace")
    S = parse_section(_require(cfg, "section"))
    witness = not_correlated_test(Q, S, int(cfg.get("samples", 256)), int(cfg["seed"]))
    result: dict = {"Q_basis": Q.integer_basis.tolist(), "witness": None}
    if witness is not None:
        result["witness"] = {"x1": list(witness.x1), "x2": list(witness.x2), "counts": [witness.count_1, witness.count_2]}
        lam = float(cfg.get("lambda", 0.0))
        table = dilation_table(Q, S, witness.x1, lam, cfg.get("N_list", [1, 2, 4, 8]))
        result["dilation"] = table
        result["linearity_spread"] = linearity_spread(table)
    if "x" in cfg:
        oc = orbit_section_count(Q, np.asarray(cfg["x"], dtype=float), S)
        result["count"] = {"open": oc.count_open, "closed": oc.count_closed, "boundary_hit": oc.boundary_hit}
    aio.write_json(_output(cfg, "correlate.json"), envelope("correlate", cfg, result))
    return {"witness": witness is not None}


def cmd_report(cfg: dict, threads: int) -> dict:
    inputs = cfg.get("inputs")
    if not inputs:
        raise ConfigError("report needs a list of input JSON files")
    entries = {}
    for path in inputs:
        data = aio.read_json(path)
        entries[Path(path).name] = {"command": data.get("command"), "seed": data.get("seed"), "result": data.get("result")}
    aio.write_json(_output(cfg, "report.json"), envelope("report", cfg, {"entries": entries}))
    return {"entries": len(entries)}


COMMANDS: dict[str, Callable[[dict, int], dict]] = {
    "gen": cmd_gen,
    "discrepancy": cmd_discrepancy,
    "selberg": cmd_selberg,
    "et-bound": cmd_et_bound,
    "dioph": cmd_dioph,
    "match": cmd_match,
    "correlate": cmd_correlate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apernet", description="Separated nets from toral flows: generation, discrepancy, bounds and matching.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="JSON configuration file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (dotted path, JSON value)")
    common.add_argument("--output", "-o", help="output file or prefix")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${_parallel.THREADS_ENV} or 1)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "report":
            p.add_argument("inputs", nargs="*", help="JSON outputs to collect")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    threads = _parallel.resolve_threads(args.threads)
    try:
        cfg = load_config(args)
        if args.command == "report" and args.inputs:
            cfg["inputs"] = args.inputs
        summary = COMMANDS[args.command](cfg, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ApernetError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(aio.dumps(summary), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
