"""Command-line entry point: ``mipt-xeb <command>``.

Exit codes: 0 success, 1 audit or recipe failure, 2 configuration error,
3 recipe inconclusive (budget exceeded).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .campaign import CampaignConfig, ConfigError, load_rows, run_campaign

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3

log = logging.getLogger("mipt_xeb")

# flag -> CampaignConfig field
CAMPAIGN_FLAGS = {
    "connectivity": "connectivity", "L": "L_list", "p": "p_list", "q": "q", "n_circuits": "n_circuits",
    "n_shots": "n_shots", "rho": "rho", "sigma": "sigma", "encoding_ratio": "encoding_ratio",
    "bulk_ratio": "bulk_ratio", "periodic": "periodic", "estimator": "estimator", "seed": "master_seed",
    "output": "output_path", "workers": "worker_count",
}


def _pair(text: str) -> tuple:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi but got {text!r}") from None
    return lo, hi


def _kv(items) -> dict:
    out = {}
    for it in items or ():
        if "=" not in it:
            raise ConfigError(f"--set expects key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _add_campaign_flags(sp) -> None:
    sp.add_argument("--config", help="key = value configuration file")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    g = sp.add_argument_group("campaign fields (override the file)")
    g.add_argument("--connectivity", help="1d or a2a")
    g.add_argument("--L", help="comma-separated system sizes")
    g.add_argument("--p", help="comma-separated measurement rates")
    g.add_argument("--q", help="erasure rate per spacetime location")
    g.add_argument("--n-circuits", dest="n_circuits")
    g.add_argument("--n-shots", dest="n_shots")
    g.add_argument("--rho", help="zero, mixed or plus")
    g.add_argument("--sigma", help="zero, mixed or plus")
    g.add_argument("--encoding-ratio", dest="encoding_ratio")
    g.add_argument("--bulk-ratio", dest="bulk_ratio")
    g.add_argument("--periodic", help="true/false boundary for 1d")
    g.add_argument("--estimator", help="affine or trajectory shot sampler")
    g.add_argument("--seed", help="master seed")
    g.add_argument("--output", help="result store path (.jsonl)")
    g.add_argument("--workers", help="worker processes (0 = all cores)")


def config_from_args(args) -> CampaignConfig:
    values = CampaignConfig.parse_text(Path(args.config).read_text()) if args.config else {}
    for flag, name in CAMPAIGN_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    values.update(_kv(args.set))
    return CampaignConfig.from_mapping(values)


# -- commands ---------------------------------------------------------------------------------

def cmd_run(args, mode: str) -> int:
    cfg = config_from_args(args)
    store = run_campaign(cfg, mode)
    print(store.path)
    return EXIT_OK


def cmd_fit(args) -> int:
    from .collapse import DataCollapse

    if args.p_c_bounds is None or args.nu_bounds is None:
        raise ConfigError("fit needs explicit --p-c-bounds and --nu-bounds")
    rows = load_rows(args.input)
    if args.L:
        keep = {int(x) for x in args.L.split(",")}
        rows = [r for r in rows if r["L"] in keep]
    if not rows:
        raise ConfigError("no rows to fit")
    X = np.array([[r["L"], r["p"]] for r in rows], dtype=float)
    y = np.array([r["chi_bar"] for r in rows])
    eps = np.array([r.get("eps") or 0.0 for r in rows])
    m = DataCollapse(p_c_bounds=args.p_c_bounds, nu_bounds=args.nu_bounds, grid=args.grid, eta=args.eta,
                     weighted=args.weighted).fit(X, y, eps)
    res = m.result_.to_dict()
    text = json.dumps(res, indent=1)
    print(text)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.json").write_text(text + "\n")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "chi", "L"])
        w.writerows(m.rescaled_table().tolist())
        Path(f"{prefix}-rescaled.csv").write_text(buf.getvalue())
        pg, ng, surf = m.cost_surface_
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["nu", "p_c", "cost"])
        for i, nu in enumerate(ng):
            for j, pc in enumerate(pg):
                w.writerow([nu, pc, surf[i, j]])
        Path(f"{prefix}-surface.csv").write_text(buf.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    from .audits import AUDITS

    modes = list(AUDITS) if "all" in args.modes else args.modes
    failed = False
    for mode in modes:
        kw = {"seed": args.seed}
        if args.budget is not None:
            kw["budget"] = args.budget
        if mode == "inequality":
            kw.update(L=args.L, q=args.q)
        rep = AUDITS[mode](**kw)
        print(rep.line())
        for f in rep.failures[:10]:
            print(f"  failure: {f}")
        failed |= not rep.passed
    return EXIT_FAIL if failed else EXIT_OK


def cmd_compress(args) -> int:
    from .circuits import Circuit
    from .compression import compress, decompose_to_gates, to_pbc

    c = Circuit.from_text(Path(args.input).read_text())
    A = None if args.A is None else [int(x) for x in args.A.split(",")]
    cc = compress(to_pbc(c), A)
    Path(args.output).write_text(cc.to_text())
    if args.gates:
        Path(args.gates).write_text(decompose_to_gates(cc).to_text())
    print(f"{c.n_measurements} measurements -> {len(cc.quantum_measurements)} on {cc.k} qubits "
          f"({len(cc.coin_flips)} coins, {len(cc.deterministic)} deterministic)")
    return EXIT_OK


def cmd_report(args) -> int:
    from .circuits import CircuitSpec, build_circuit, derive_seed
    from .compression import compress, resource_report, to_pbc

    L, p = args.L, args.p
    reps = []
    for i in range(args.n_circuits):
        spec = CircuitSpec(L, args.connectivity, p, seed=derive_seed(args.seed, L, i))
        reps.append(resource_report(spec, compress(to_pbc(build_circuit(spec)))).to_dict())
    out = {k: float(np.mean([r[k] for r in reps])) for k in reps[0]}
    out["max_compressed_measurement_count"] = int(max(r["compressed_measurement_count"] for r in reps))
    conn = CircuitSpec(L, args.connectivity).connectivity
    if conn == "chain1d":
        out["reference"] = {"depth": 6 * L, "two_qubit_gates": 3 * L * L, "measurements": 3 * L * L * p}
    else:
        out["reference"] = {"two_qubit_gates": 2 * L ** 3, "measurements": 3 * L * L * p}
    out["reference"]["compressed_qubits"] = L // 2
    out["n_circuits"] = args.n_circuits
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from .recipes import list_recipes, run_recipe

    if args.list:
        for name in list_recipes():
            print(name)
        return EXIT_OK
    names = args.names or list_recipes()
    status = EXIT_OK
    for name in names:
        res = run_recipe(name, _kv(args.set), output_dir=args.output_dir, budget_seconds=args.budget)
        print(res.table())
        if not res.gating:
            continue
        if res.status == "fail":
            status = EXIT_FAIL
        elif res.status == "inconclusive" and status == EXIT_OK:
            status = EXIT_INCONCLUSIVE
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mipt-xeb", description="Monitored Clifford circuit XEB toolkit")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="shot-based sweep campaign")
    _add_campaign_flags(sp)
    sp = sub.add_parser("exact", help="exact (variance-free) sweep campaign")
    _add_campaign_flags(sp)

    sp = sub.add_parser("fit", help="collapse fit of a sweep (.jsonl store or .csv)")
    sp.add_argument("input")
    sp.add_argument("--p-c-bounds", type=_pair, metavar="LO,HI")
    sp.add_argument("--nu-bounds", type=_pair, metavar="LO,HI")
    sp.add_argument("--grid", type=int, default=61)
    sp.add_argument("--eta", type=float, default=0.1)
    sp.add_argument("--weighted", action="store_true", help="inverse-variance weights")
    sp.add_argument("--L", help="restrict to these sizes")
    sp.add_argument("--out", help="prefix for .json, -rescaled.csv and -surface.csv")

    sp = sub.add_parser("verify", help="randomized correctness audits")
    sp.add_argument("modes", nargs="+", choices=["compression", "inequality", "oracle", "all"])
    sp.add_argument("--budget", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--L", type=int, default=10, help="largest size for the inequality audit")
    sp.add_argument("--q", type=float, default=0.005, help="erasure rate for the inequality audit")

    sp = sub.add_parser("compress", help="compress a circuit text file")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--A", help="comma-separated magic register (default: odd qubits)")
    sp.add_argument("--gates", help="also write the gate-level compressed circuit here")

    sp = sub.add_parser("report", help="resource accounting before and after compression")
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--connectivity", default="1d")
    sp.add_argument("--n-circuits", dest="n_circuits", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("reproduce", help="run reproduction recipes")
    sp.add_argument("names", nargs="*")
    sp.add_argument("--list", action="store_true")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.add_argument("--budget", type=float, help="override every recipe's budget (seconds)")
    sp.add_argument("--output-dir", dest="output_dir")
    return ap


def _setup_logging(verbose: bool) -> None:
    for h in [h for h in log.handlers if getattr(h, "_mipt_xeb", False)]:
        log.removeHandler(h)
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    h._mipt_xeb = True
    log.addHandler(h)
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        if args.command in ("run", "exact"):
            return cmd_run(args, args.command)
        return {"fit": cmd_fit, "verify": cmd_verify, "compress": cmd_compress, "report": cmd_report,
                "reproduce": cmd_reproduce}[args.command](args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
