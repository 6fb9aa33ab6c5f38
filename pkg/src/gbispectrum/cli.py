"""Command-line front end: ``gbispectrum {counts,verify,bench,reconstruct}``.

Data (JSON by default, CSV with ``--format csv``) goes to stdout or to
``--output``; one-line human summaries go to stderr.  Exit codes: 0 success,
1 verification failure, 2 usage error.  The default seed is read from
``GBISPECTRUM_SEED`` (0 when unset).
"""

from __future__ import annotations

import argparse
import inspect
import os
import sys

import numpy as np

from . import harness
from .exceptions import BispectrumError, GenericityError, InvalidParameterError
from .models import MODULES, canonical_key, make_model
from .reconstruct import ReconstructConfig

SEED_ENV = "GBISPECTRUM_SEED"
INVARIANCE_TOL = 1e-10
INVERSION_TOL = 1e-8
INVARIANT_RESIDUAL_TOL = 1e-6
SIZE_ARGS = ("n", "a", "b", "L", "N_m", "K")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _common(p, module_required=True):
    p.add_argument("--module", required=module_required, help=f"one of {', '.join(MODULES)} (or 'all' for verify)")
    for name in ("n", "a", "b", "L", "K"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--N-m", dest="N_m", type=int)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--selective", dest="mode", action="store_const", const="selective")
    g.add_argument("--full", dest="mode", action="store_const", const="full")
    p.set_defaults(mode="selective")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gbispectrum", description="Selective and full G-bispectra: counts, checks and timings.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("counts", help="computed coefficient counts against published targets")
    _common(p)

    p = sub.add_parser("verify", help="invariance, inversion and parity checks")
    _common(p)
    p.add_argument("--trials", type=int, default=4)
    p.add_argument("--invert", action="store_true", help="also run inversion round-trips")
    p.add_argument("--parity", action="store_true", help="sphere parity and vanishing checks (so3 only)")

    p = sub.add_parser("bench", help="forward-pass timings of both modes")
    _common(p)
    p.add_argument("--sweep", default=None, help="comma-separated sizes n, e.g. 32,64,128,256")
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--runs", type=int, default=30)
    p.add_argument("--warmup", type=int, default=3)

    p = sub.add_parser("reconstruct", help="invert the invariant of a randomly moved signal and align")
    _common(p)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--iterations", type=int, default=400)
    return ap


def _size(args, module: str) -> dict:
    accepted = set(inspect.signature(MODULES[module].__init__).parameters) & set(SIZE_ARGS)
    size = {}
    for k in SIZE_ARGS:
        v = getattr(args, k, None)
        if v is None:
            continue
        if k not in accepted:
            raise UsageError(f"--{k.replace('_', '-')} does not apply to module {module}")
        size[k] = v
    return size


def _emit(args, payload, rows=None, fields=None):
    text = harness.rows_to_csv(rows, fields) if args.format == "csv" else harness.reports_to_json(payload) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _note(msg: str):
    print(msg, file=sys.stderr)


def cmd_counts(args) -> int:
    module = canonical_key(args.module)
    size = _size(args, module)
    model = make_model(module, **size)
    counts = model.counts()
    key = ";".join(f"{k}={v}" for k, v in sorted(model.size().items()))
    rows = [
        r for r in harness.run_count_audit(modules={module})
        if r["size"] == key
    ]
    hard_ok = all(r["status"] == "PASS" for r in rows if r["kind"] == "hard")
    flag = "N.A." if not rows else ("PASS" if hard_ok else "FAIL")
    shown = dict(counts)
    if "bispectral" in shown:
        shown = {"bispectral": counts["bispectral"], "cg_power": counts["cg_power"],
                 "total": counts["selective"], "full": counts["full"]}
    summary = " ".join(f"{k}={v}" for k, v in shown.items())
    _note(f"{module} {key or '-'}: {summary} {flag}")
    for r in rows:
        _note(f"  {r['quantity']}: computed={r['computed']} target={r['target']} [{r['kind']}] {r['status']}")
    out_rows = rows or [
        {"module": module, "size": key, "quantity": q, "computed": v, "target": None, "kind": None, "status": "N.A."}
        for q, v in counts.items()
    ]
    _emit(args, {"module": module, "size": model.size(), "counts": counts, "audit": rows, "status": flag},
          out_rows, harness.AUDIT_FIELDS)
    return EXIT_OK if hard_ok else EXIT_FAIL


def _verify_one(module: str, size: dict, args) -> tuple:
    """Returns ``(report dict, failures)`` for one module."""
    model = make_model(module, **size)
    cfg = harness.TrialConfig(module, model.size(), trials=args.trials, seed=args.seed, mode=args.mode)
    rep = harness.run_invariance_trial(cfg, model)
    failures = []
    if rep.invariance_max_rel > INVARIANCE_TOL:
        failures.append(f"{module}: invariance deviation {rep.invariance_max_rel:.3e} > {INVARIANCE_TOL:g}")
    out = rep.to_dict()
    if args.invert and model.invertible:
        if module == "so3":
            res = _so3_reconstruct(model, args.seed, getattr(args, "restarts", 8))
            out["invariant_residual"] = res["invariant_residual"]
            out["inversion_residual"] = res["aligned_residual"]
            if res["invariant_residual"] > INVARIANT_RESIDUAL_TOL:
                failures.append(f"so3: invariant residual {res['invariant_residual']:.3e} > {INVARIANT_RESIDUAL_TOL:g}")
        else:
            inv = harness.run_inversion_trial(cfg, model)
            out["inversion_residual"] = inv.inversion_residual
            if inv.inversion_residual > INVERSION_TOL:
                failures.append(f"{module}: inversion residual {inv.inversion_residual:.3e} > {INVERSION_TOL:g}")
    if args.parity and module == "so3":
        checks = harness.run_parity_checks(max(model.L, 4), witnesses=max(args.trials, 20), seed=args.seed)
        out["parity"] = checks
        failures += [f"so3: parity check {k} value {c['value']:.3e}" for k, c in checks.items() if not c["pass"]]
    return out, failures


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.module.lower() == "all":
        if any(getattr(args, k) is not None for k in SIZE_ARGS):
            raise UsageError("size options cannot be combined with --module all")
        targets = [(m, {}) for m in MODULES]
        args.parity = True
    else:
        module = canonical_key(args.module)
        if args.parity and module != "so3":
            raise UsageError("--parity applies to the so3 module only")
        targets = [(module, _size(args, module))]
    reports, failures = [], []
    for module, size in targets:
        if args.mode == "full" and not make_model(module, **size).has_full:
            raise UsageError(f"{module} has no full mode")
        rep, fails = _verify_one(module, size, args)
        reports.append(rep)
        failures += fails
        _note(f"{module}: invariance {rep['invariance_max_rel']:.2e}"
              + (f", inversion {rep['inversion_residual']:.2e}" if rep.get("inversion_residual") is not None else ""))
    for f in failures:
        _note(f"FAIL {f}")
    status = "PASS" if not failures else "FAIL"
    _note(status)
    rows = [{k: r.get(k) for k in harness.REPORT_FIELDS} | {"size": _size_str(r["size"])} for r in reports]
    _emit(args, {"reports": reports, "failures": failures, "status": status}, rows, harness.REPORT_FIELDS)
    return EXIT_OK if not failures else EXIT_FAIL


def _size_str(size: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(size.items()))


def cmd_bench(args) -> int:
    module = canonical_key(args.module)
    if args.batch < 1 or args.runs < 1 or args.warmup < 0:
        raise UsageError("--batch and --runs must be positive, --warmup non-negative")
    if args.sweep is not None:
        try:
            sizes = [int(s) for s in args.sweep.split(",") if s.strip()]
        except ValueError:
            raise UsageError(f"--sweep must be comma-separated integers, got {args.sweep!r}") from None
        if not sizes:
            raise UsageError("--sweep is empty")
        if "n" not in inspect.signature(MODULES[module].__init__).parameters:
            raise UsageError(f"--sweep varies n, which module {module} does not take")
        if args.n is not None:
            raise UsageError("--sweep and --n are exclusive")
        if len(sizes) == 1:
            rows = [harness.bench_row(module, {"n": sizes[0]}, args.batch, args.seed, args.warmup, args.runs)]
            payload = {"rows": rows}
        else:
            payload = harness.timing_sweep(module, sizes, args.batch, args.seed, args.warmup, args.runs)
            rows = payload["rows"]
            _note("slopes: selective {:.3f}".format(payload["slope_selective"])
                  + (" full {:.3f} gap {:.3f}".format(payload["slope_full"], payload["slope_gap"])
                     if "slope_full" in payload else ""))
    else:
        size = _size(args, module)
        rows = [harness.bench_row(module, size, args.batch, args.seed, args.warmup, args.runs)]
        payload = {"rows": rows}
    for r in rows:
        _note(f"{r['module']} {r['size']}: selective {r['selective_median_ms']:.4f} ms"
              + (f", full {r['full_median_ms']:.4f} ms" if r["full_median_ms"] is not None else ""))
    _emit(args, payload, rows, harness.BENCH_FIELDS)
    return EXIT_OK


def _so3_reconstruct(model, seed: int, restarts: int, iterations: int = 400) -> dict:
    from .reconstruct import reconstruct
    from .so3 import evaluate_invariant

    rng = np.random.default_rng(seed)
    f = model.random_signal(rng)
    moved = model.act(f, model.actions(rng, 1)[0])
    target = evaluate_invariant(moved, model.index)
    cfg = ReconstructConfig(restarts=restarts, iterations=iterations, seed=seed)
    res = reconstruct(target, model.L, cfg, model.index)
    _, aligned = model.align(res.signal, f)
    return {"invariant_residual": res.residual, "aligned_residual": aligned}


def cmd_reconstruct(args) -> int:
    module = canonical_key(args.module)
    size = _size(args, module)
    model = make_model(module, **size)
    if not model.invertible:
        _note(f"inversion not available for module {module}")
        return EXIT_USAGE
    if args.restarts < 1 or args.iterations < 1:
        raise UsageError("--restarts and --iterations must be positive")
    if module == "so3":
        res = _so3_reconstruct(model, args.seed, args.restarts, args.iterations)
        ok = res["invariant_residual"] <= INVARIANT_RESIDUAL_TOL
        _note(f"so3 L={model.L}: invariant residual {res['invariant_residual']:.3e}, "
              f"aligned residual {res['aligned_residual']:.3e}")
    else:
        cfg = harness.TrialConfig(module, model.size(), trials=1, seed=args.seed)
        try:
            rep = harness.run_inversion_trial(cfg, model)
        except GenericityError as e:
            _note(f"genericity violation: {e}")
            _emit(args, {"module": module, "error": str(e)}, [{"module": module, "error": str(e)}], ("module", "error"))
            return EXIT_FAIL
        res = {"aligned_residual": rep.inversion_residual}
        ok = rep.inversion_residual <= INVERSION_TOL
        _note(f"{module} {_size_str(model.size())}: aligned residual {rep.inversion_residual:.3e}")
    row = {"module": module, "size": _size_str(model.size()), "seed": args.seed,
           "invariant_residual": res.get("invariant_residual"), "aligned_residual": res["aligned_residual"],
           "status": "PASS" if ok else "FAIL"}
    _emit(args, row, [row], tuple(row))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"counts": cmd_counts, "verify": cmd_verify, "bench": cmd_bench, "reconstruct": cmd_reconstruct}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed is None:
            args.seed = _default_seed()
        return COMMANDS[args.command](args)
    except UsageError as e:
        _note(f"error: {e}")
        return EXIT_USAGE
    except InvalidParameterError as e:
        _note(f"error: {e}")
        return EXIT_USAGE
    except GenericityError as e:
        _note(f"genericity violation: {e}")
        return EXIT_FAIL
    except BispectrumError as e:
        _note(f"error: {e}")
        return EXIT_FAIL
    except SystemExit as e:  # --help
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
