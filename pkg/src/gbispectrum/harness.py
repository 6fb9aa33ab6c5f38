"""Verification and profiling drivers shared by the tests and the command line.

Reports are plain dataclasses that serialize to JSON records and CSV rows;
column order is fixed by ``REPORT_FIELDS`` and ``AUDIT_FIELDS``.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InvalidParameterError
from . import so3 as _so3
from .models import Model, canonical_key, make_model

__all__ = [
    "TrialConfig",
    "TrialReport",
    "random_signal",
    "run_invariance_trial",
    "run_inversion_trial",
    "run_count_audit",
    "run_parity_checks",
    "run_timing",
    "bench_row",
    "timing_sweep",
    "loglog_slope",
    "reports_to_json",
    "rows_to_csv",
    "REPORT_FIELDS",
    "AUDIT_FIELDS",
    "BENCH_FIELDS",
]

REPORT_FIELDS = (
    "module",
    "size",
    "mode",
    "trials",
    "seed",
    "selective_count",
    "full_count",
    "invariance_max_rel",
    "inversion_residual",
    "median_ms",
    "p10_ms",
    "p90_ms",
    "throughput",
)

AUDIT_FIELDS = ("module", "size", "quantity", "computed", "target", "kind", "status")


@dataclass(frozen=True)
class TrialConfig:
    module: str
    size: dict = field(default_factory=dict)
    trials: int = 4
    batch: int = 16
    seed: int = 0
    mode: str = "selective"
    actions: int = 32

    def __post_init__(self):
        object.__setattr__(self, "module", canonical_key(self.module))
        if self.trials < 1:
            raise InvalidParameterError("trial count must be at least 1")
        if self.batch < 1:
            raise InvalidParameterError("batch size must be at least 1")
        if self.mode not in ("selective", "full"):
            raise InvalidParameterError(f"mode must be 'selective' or 'full', got {self.mode!r}")

    @property
    def selective(self) -> bool:
        return self.mode == "selective"


@dataclass
class TrialReport:
    module: str
    size: dict
    mode: str
    trials: int
    seed: int
    selective_count: int | None = None
    full_count: int | None = None
    invariance_max_rel: float | None = None
    inversion_residual: float | None = None
    median_ms: float | None = None
    p10_ms: float | None = None
    p90_ms: float | None = None
    throughput: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_row(self) -> dict:
        d = self.to_dict()
        d["size"] = ";".join(f"{k}={v}" for k, v in sorted(self.size.items()))
        return d


def _model(cfg: TrialConfig) -> Model:
    return make_model(cfg.module, **cfg.size)


def random_signal(module: str, size: dict, seed: int, real: bool = True):
    """Deterministic random signal for ``module`` at ``size``."""
    return make_model(module, **size).random_signal(np.random.default_rng(seed), real=real)


def _rel_dev(a, b) -> float:
    scale = float(np.abs(a).max(initial=0.0))
    return float(np.abs(a - b).max(initial=0.0) / (scale if scale > 0 else 1.0))


def _base_report(cfg: TrialConfig, model: Model) -> TrialReport:
    counts = model.counts()
    return TrialReport(
        module=cfg.module,
        size=dict(cfg.size),
        mode=cfg.mode,
        trials=cfg.trials,
        seed=cfg.seed,
        selective_count=counts.get("selective"),
        full_count=counts.get("full") if model.has_full else None,
    )


def run_invariance_trial(cfg: TrialConfig, model: Model | None = None) -> TrialReport:
    """Max over trials and actions of ``max|Phi(g f) - Phi(f)| / max|Phi(f)|``.

    Finite groups of order at most 64 are swept exhaustively; otherwise
    ``cfg.actions`` random group elements are drawn per trial.
    """
    model = model or _model(cfg)
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.trials):
        f = model.random_signal(rng)
        ref = model.forward(f, cfg.selective)
        for a in model.actions(rng, cfg.actions):
            worst = max(worst, _rel_dev(ref, model.forward(model.act(f, a), cfg.selective)))
    rep = _base_report(cfg, model)
    rep.invariance_max_rel = worst
    return rep


def run_inversion_trial(cfg: TrialConfig, model: Model | None = None) -> TrialReport:
    """Act by a random group element, invert the selective invariant, align to the original."""
    model = model or _model(cfg)
    if not model.invertible:
        raise InvalidParameterError(f"inversion is not available for {cfg.module}")
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.trials):
        f = model.random_signal(rng)
        g = model.actions(rng, 1)
        moved = model.act(f, g[int(rng.integers(len(g)))])
        est = model.invert(model.forward(moved, True))
        worst = max(worst, model.align(est, f)[1])
    rep = _base_report(cfg, model)
    rep.mode = "selective"
    rep.inversion_residual = worst
    return rep


# rows: (module, size, quantity, target, kind); kind "hard" fails the audit, "soft" is reported only
AUDIT_ROWS = (
    ("cn", {"n": 128}, "selective", 128, "hard"),
    ("cn", {"n": 128}, "full", 8256, "hard"),
    ("torus", {"a": 32, "b": 32}, "selective", 1024, "hard"),
    ("torus", {"a": 32, "b": 32}, "full", 524800, "hard"),
    ("octa", {}, "full", 576, "hard"),
    ("octa", {}, "selective", 172, "soft"),
    ("dn", {"n": 32}, "selective", 245, "soft"),
    ("disk", {"L": 16}, "selective", 105, "soft"),
    ("so3", {"L": 4}, "bispectral", 24, "hard"),
    ("so3", {"L": 5}, "bispectral", 37, "hard"),
    ("so3", {"L": 15}, "bispectral", 307, "hard"),
    ("so3", {"L": 16}, "bispectral", 348, "hard"),
    ("so3", {"L": 4}, "cg_power", 10, "soft"),
    ("so3", {"L": 5}, "cg_power", 17, "soft"),
    ("so3", {"L": 15}, "cg_power", 77, "soft"),
    ("so3", {"L": 16}, "cg_power", 82, "soft"),
    ("so3", {"L": 4}, "selective", 34, "within10"),
    ("so3", {"L": 5}, "selective", 54, "within10"),
    ("so3", {"L": 15}, "selective", 384, "within10"),
    ("so3", {"L": 16}, "selective", 430, "within10"),
)


def _status(computed, target, kind) -> str:
    if kind == "within10":
        ok = abs(computed - target) <= 0.1 * target
        return "PASS" if ok else "FAIL"
    if computed == target:
        return "PASS"
    return "FAIL" if kind == "hard" else "SOFT-MISS"


def run_count_audit(rows=AUDIT_ROWS, modules=None) -> list:
    """Computed coefficient counts next to their published targets.

    ``status`` is PASS/FAIL for hard rows and ``within10`` rows (total within
    10% of target), and PASS/SOFT-MISS for soft rows.
    """
    cache: dict = {}
    out = []
    for module, size, quantity, target, kind in rows:
        if modules is not None and module not in modules:
            continue
        key = (module, tuple(sorted(size.items())))
        if key not in cache:
            cache[key] = make_model(module, **size).counts()
        computed = int(cache[key][quantity])
        out.append(
            {
                "module": module,
                "size": ";".join(f"{k}={v}" for k, v in sorted(size.items())),
                "quantity": quantity,
                "computed": computed,
                "target": target,
                "kind": "hard" if kind == "within10" else kind,
                "status": _status(computed, target, kind),
            }
        )
    return out


def _batch(model: Model, rng, batch: int):
    """A batch of signals in the raw form ``forward`` accepts for timing."""
    sigs = [model.random_signal(rng) for _ in range(batch)]
    if isinstance(sigs[0], np.ndarray):
        return np.stack(sigs)
    return sigs


def _time_forward(model: Model, X, selective: bool) -> float:
    t0 = time.perf_counter()
    if isinstance(X, np.ndarray):
        model.forward(X, selective)
    else:
        for x in X:
            model.forward(x, selective)
    return time.perf_counter() - t0


def run_timing(cfg: TrialConfig, warmup: int = 3, runs: int = 30, model: Model | None = None) -> TrialReport:
    """Median and p10/p90 wall-clock (ms) of one batched forward pass."""
    model = model or _model(cfg)
    rng = np.random.default_rng(cfg.seed)
    X = _batch(model, rng, cfg.batch)
    for _ in range(warmup):
        _time_forward(model, X, cfg.selective)
    times = np.array([_time_forward(model, X, cfg.selective) for _ in range(runs)]) * 1e3
    rep = _base_report(cfg, model)
    rep.median_ms = float(np.median(times))
    rep.p10_ms = float(np.percentile(times, 10))
    rep.p90_ms = float(np.percentile(times, 90))
    rep.throughput = float(cfg.batch / (rep.median_ms / 1e3))
    return rep


BENCH_FIELDS = (
    "module",
    "size",
    "batch",
    "selective_count",
    "full_count",
    "selective_median_ms",
    "selective_p10_ms",
    "selective_p90_ms",
    "full_median_ms",
    "full_p10_ms",
    "full_p90_ms",
)


def bench_row(module: str, size: dict, batch: int = 16, seed: int = 0, warmup: int = 3, runs: int = 30) -> dict:
    """One timing row holding both modes (full columns are None when a model has no full mode)."""
    module = canonical_key(module)
    model = make_model(module, **size)
    row = {"module": module, "size": ";".join(f"{k}={v}" for k, v in sorted(size.items())), "batch": batch}
    for mode in ("selective", "full"):
        if mode == "full" and not model.has_full:
            continue
        cfg = TrialConfig(module, size, trials=1, batch=batch, seed=seed, mode=mode)
        rep = run_timing(cfg, warmup, runs, model)
        row[f"{mode}_count"] = getattr(rep, f"{mode}_count")
        row[f"{mode}_median_ms"] = rep.median_ms
        row[f"{mode}_p10_ms"] = rep.p10_ms
        row[f"{mode}_p90_ms"] = rep.p90_ms
    return {k: row.get(k) for k in BENCH_FIELDS}


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def timing_sweep(module: str, sizes, batch: int = 16, seed: int = 0, warmup: int = 3, runs: int = 30) -> dict:
    """Time both modes over a sweep of ``n`` and fit log-log slopes of median time against ``n``."""
    sizes = [int(n) for n in sizes]
    if len(sizes) < 2:
        raise InvalidParameterError("a sweep needs at least two sizes")
    rows = [bench_row(module, {"n": n}, batch, seed, warmup, runs) for n in sizes]
    out = {"rows": rows, "slope_selective": loglog_slope(sizes, [r["selective_median_ms"] for r in rows])}
    if rows[0]["full_median_ms"] is not None:
        out["slope_full"] = loglog_slope(sizes, [r["full_median_ms"] for r in rows])
        out["slope_gap"] = out["slope_full"] - out["slope_selective"]
    return out


def _jsonable(x):
    if isinstance(x, TrialReport):
        return x.to_dict()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def reports_to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def rows_to_csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.to_row() if isinstance(r, TrialReport) else r)
    return buf.getvalue()


def _all_triples(L: int) -> tuple:
    return tuple(
        (l1, l2, l)
        for l1 in range(L + 1)
        for l2 in range(l1, L + 1)
        for l in range(l2 - l1, min(l1 + l2, L) + 1)
    )


def run_parity_checks(L: int = 10, witnesses: int = 20, seed: int = 0, tol: float = 1e-12) -> dict:
    """Parity structure of the sphere bispectrum on random real witnesses.

    ``parity_part``: every entry is real (even ``l1+l2+l``) or imaginary (odd),
    measured as the wrong part over ``max|beta|``.  ``parity_map``: the
    coefficient map ``a_l^m -> (-1)^m a_l^{-m}`` scales each entry by
    ``(-1)^{l1+l2+l}``.  ``zero_rows``: ``max |beta_{r,2r-1,r}|`` for
    ``r = 2..7`` (evaluated at band limit ``max(L, 13)``).  ``first_odd``:
    the smallest ``|Im beta_{2,3,4}|``, which must exceed ``1e-6`` and flip
    sign under the map.
    """
    rng = np.random.default_rng(seed)
    trip = _all_triples(L)
    prog = _so3._program(trip, ())
    odd = np.array([sum(t) % 2 for t in trip], dtype=bool)
    sign = np.where(odd, -1.0, 1.0)
    Lz = max(L, 13)
    zero_rows = tuple((r, 2 * r - 1, r) for r in range(2, 8))
    zprog = _so3._program(zero_rows, ())
    part = pmap = zmax = 0.0
    first_odd = np.inf
    flips = True
    for _ in range(witnesses):
        f = _so3.random_sph_signal(L, rng)
        b = prog(f.coeffs)
        scale = np.abs(b).max()
        wrong = np.where(odd, b.real, b.imag)
        part = max(part, float(np.abs(wrong).max() / scale))
        bt = prog(_so3.parity_transform(f).coeffs)
        pmap = max(pmap, float(np.abs(bt - sign * b).max() / scale))
        fz = _so3.random_sph_signal(Lz, rng)
        zmax = max(zmax, float(np.abs(zprog(fz.coeffs)).max()))
        if L >= 4:
            i = trip.index((2, 3, 4))
            im, im_t = b[i].imag, bt[i].imag
            first_odd = min(first_odd, abs(im))
            flips = flips and bool(np.sign(im_t) == -np.sign(im))
    checks = {
        "parity_part": {"value": part, "tol": tol, "pass": part <= tol},
        "parity_map": {"value": pmap, "tol": tol, "pass": pmap <= tol},
        "zero_rows": {"value": zmax, "tol": tol, "pass": zmax <= tol},
    }
    if L >= 4:
        checks["first_odd"] = {"value": float(first_odd), "tol": 1e-6, "pass": first_odd > 1e-6 and flips}
    return checks
