"""Command line front end: spectra, echo traces, comparisons, gap calibration.

Examples
--------
    loschmidt spectrum --n 7 --gamma 1 --h 0.5
    loschmidt le --n 7 --gamma 1 --h 0.5026 --dh 0.2 --tmax 100 --steps 1000 \
        --methods exact,resummed-sp --out trace.csv
    loschmidt compare --config run.json --format json --out report.json
    loschmidt calibrate-gap --n 7 --gamma 1 --target 0.18
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from . import cumulants, exact, resum
from .errors import ConfigError, DegeneracyError, LoschmidtError
from .spectral import ChainSpec, QuenchSpec, mode_table, nondegeneracy_check
from .traces import AmplitudeTrace

log = logging.getLogger("loschmidt")

CONVENTIONS = ("pbc-signed", "force-nonnegative")
FORMATS = ("csv", "json")


@dataclass
class RunConfig:
    n: int
    gamma: float
    h: float
    dh: float = 0.0
    tmax: float = 10.0
    steps: int = 100
    methods: list = field(default_factory=lambda: ["exact"])
    J: int = 1
    mode_convention: str = "pbc-signed"
    format: str = "csv"
    out: str | None = None
    trunc: int | None = None
    workers: int = 1
    parallel: bool = False
    nonnegative_variant: bool = False
    cap: int = exact.DEFAULT_CAP
    order_cap: int = cumulants.DEFAULT_ORDER_CAP

    @property
    def chain(self) -> ChainSpec:
        return ChainSpec(self.n, self.gamma, self.h, self.J)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.tmax, self.steps + 1)

    @property
    def quench(self) -> QuenchSpec:
        return QuenchSpec(self.dh, tuple(self.times))

    def to_dict(self) -> dict:
        return asdict(self)


_FIELDS = {
    "n": int, "gamma": float, "h": float, "dh": float, "tmax": float, "steps": int,
    "methods": list, "J": int, "mode_convention": str, "format": str, "out": (str, type(None)),
    "trunc": (int, type(None)), "workers": int, "parallel": bool, "nonnegative_variant": bool,
    "cap": int, "order_cap": int,
}
_REQUIRED = ("n", "gamma", "h")


def _check_type(name, value):
    want = _FIELDS[name]
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, bool):
        raise ConfigError("expected an integer", name)
    if want is float and isinstance(value, bool):
        raise ConfigError("expected a number", name)
    if not isinstance(value, want):
        raise ConfigError(f"expected {getattr(want, '__name__', want)}, got {type(value).__name__}", name)
    return value


def _normalize_method(m: str, trunc):
    m = m.strip()
    if m in ("exact", "resummed-sp"):
        return m
    if m.startswith("cumulant"):
        head, _, order = m.partition(":")
        if head != "cumulant" or not order.isdigit():
            raise ConfigError(f"cumulant method needs an order, e.g. cumulant:3 (got {m!r})", "methods")
        return f"cumulant:{int(order)}"
    if m.startswith("resummed-full"):
        head, _, k = m.partition(":")
        if head != "resummed-full":
            raise ConfigError(f"unknown method {m!r}", "methods")
        if not k:
            if trunc is None:
                raise ConfigError("resummed-full requires a truncation order (trunc or resummed-full:M)", "trunc")
            k = str(trunc)
        if not k.isdigit() or int(k) < 1:
            raise ConfigError("truncation order must be a positive integer", "trunc")
        return f"resummed-full:{int(k)}"
    raise ConfigError(f"unknown method {m!r}", "methods")


def parse_config(text, overrides: dict | None = None) -> RunConfig:
    """Validate a JSON configuration document (str or dict) plus flag overrides."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    else:
        doc = dict(text or {})
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(doc) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}", sorted(unknown)[0])
    for name in _REQUIRED:
        if name not in doc:
            raise ConfigError("missing required field", name)
    vals = {k: _check_type(k, v) for k, v in doc.items()}
    if vals["n"] < 3:
        raise ConfigError("must be >= 3", "n")
    if vals.get("steps", 1) < 1:
        raise ConfigError("must be >= 1", "steps")
    if vals.get("tmax", 1.0) <= 0 or not np.isfinite(vals.get("tmax", 1.0)):
        raise ConfigError("must be positive and finite", "tmax")
    for name in ("gamma", "h", "dh"):
        if name in vals and not np.isfinite(vals[name]):
            raise ConfigError("must be finite", name)
    if vals.get("J", 1) not in (1, -1):
        raise ConfigError("must be +1 or -1", "J")
    if vals.get("mode_convention", "pbc-signed") not in CONVENTIONS:
        raise ConfigError(f"must be one of {CONVENTIONS}", "mode_convention")
    if vals.get("format", "csv") not in FORMATS:
        raise ConfigError(f"must be one of {FORMATS}", "format")
    if vals.get("trunc") is not None and vals["trunc"] < 1:
        raise ConfigError("must be >= 1", "trunc")
    if vals.get("workers", 1) < 1:
        raise ConfigError("must be >= 1", "workers")
    methods = vals.get("methods", ["exact"])
    if not methods:
        raise ConfigError("at least one method is required", "methods")
    if not all(isinstance(m, str) for m in methods):
        raise ConfigError("methods must be strings", "methods")
    vals["methods"] = [_normalize_method(m, vals.get("trunc")) for m in methods]
    return RunConfig(**vals)


# ---------------------------------------------------------------------------
# runners


def compute_trace(method: str, cfg: RunConfig, convention: str | None = None) -> AmplitudeTrace:
    spec, quench = cfg.chain, cfg.quench
    conv = convention or cfg.mode_convention
    if method == "exact":
        return exact.le_exact(spec, quench, cap=cfg.cap)
    modes = mode_table(spec, conv)
    if method.startswith("cumulant:"):
        k = int(method.split(":")[1])
        tr = cumulants.log_g_series(modes, quench, k, workers=cfg.workers, cap=cfg.order_cap)
        tr.method = method
        return tr
    if method == "resummed-sp":
        return resum.log_g_resummed_sp(modes, quench)
    if method.startswith("resummed-full:"):
        tr = resum.log_g_resummed_full(modes, quench, trunc=int(method.split(":")[1]))
        tr.method = method
        return tr
    raise ConfigError(f"unknown method {method!r}", "methods")


def run_spectrum(cfg: RunConfig) -> dict:
    """Mode table, sector and ground energy; the exact gap when N is within the cap."""
    spec = cfg.chain
    modes = mode_table(spec, cfg.mode_convention)
    out = modes.to_dict()
    out["nondegeneracy"] = nondegeneracy_check(spec)
    if spec.n_sites <= cfg.cap:
        w = np.linalg.eigvalsh(exact.build_h0(spec, cfg.cap))
        gap = float(w[1] - w[0])
        if gap < exact.GAP_THRESHOLD:
            raise DegeneracyError(f"ground state is degenerate (gap = {gap:.3e})")
        out["ed_gap"] = gap
        out["ed_e0"] = float(w[0])
    return out


def run_le(cfg: RunConfig) -> list[AmplitudeTrace]:
    """One trace per configured method (plus the optional nonnegative variant)."""
    jobs = [(m, None) for m in cfg.methods]
    if cfg.nonnegative_variant:
        jobs += [(m, "force-nonnegative") for m in cfg.methods if m.startswith("resummed")]
    run = lambda job: _labelled(compute_trace(job[0], cfg, job[1]), job[1])
    if cfg.parallel and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as ex:
            return list(ex.map(run, jobs))
    return [run(j) for j in jobs]


def _labelled(tr, variant):
    if variant:
        tr.method = f"{tr.method}[{variant}]"
    return tr


@dataclass
class ComparisonReport:
    traces: list
    pairs: list
    convergence: dict | None
    gap: float | None
    calibration: dict

    def to_dict(self) -> dict:
        return {"pairs": self.pairs, "convergence": self.convergence, "gap": self.gap,
                "calibration": self.calibration}


def l_metrics(a: AmplitudeTrace, b: AmplitudeTrace) -> tuple[float, float]:
    d = np.abs(a.l_values - b.l_values)
    return float(d.max()), float(np.sqrt(np.mean(d ** 2)))


def run_compare(cfg: RunConfig) -> ComparisonReport:
    if len(cfg.methods) < 2 and not cfg.nonnegative_variant:
        raise ConfigError("compare needs at least two methods", "methods")
    traces = run_le(cfg)
    pairs = []
    for i in range(len(traces)):
        for j in range(i + 1, len(traces)):
            sup, rms = l_metrics(traces[i], traces[j])
            pairs.append({"a": traces[i].method, "b": traces[j].method, "sup": sup, "rms": rms})
    conv = None
    if any(m.startswith("resummed") for m in cfg.methods):
        rs = resum.build_resolvent_set(mode_table(cfg.chain, cfg.mode_convention), cfg.quench)
        conv = rs.convergence.to_dict()
    gap = exact.ed_gap(cfg.chain, cfg.cap) if cfg.n <= cfg.cap else None
    calib = {"n": cfg.n, "gamma": cfg.gamma, "h": cfg.h, "nondegeneracy": nondegeneracy_check(cfg.chain)}
    return ComparisonReport(traces, pairs, conv, gap, calib)


def calibrate_gap(n: int, gamma: float, target: float, lo: float = 0.0, hi: float = 1.0,
                  scan: int = 64, xtol: float = 1e-10, cap: int = exact.DEFAULT_CAP) -> dict:
    """Field h in (lo, hi) where the exact gap equals ``target``.

    The interval is scanned on a uniform grid for the first sign change of
    gap(h) - target, which is then refined by bisection.
    """
    if not 0 < target:
        raise ConfigError("must be positive", "target")

    def gap(h):
        w = np.linalg.eigvalsh(exact.build_h0(ChainSpec(n, gamma, h), cap))
        return w[1] - w[0]

    hs = np.linspace(lo, hi, scan + 2)[1:-1]
    g = np.array([gap(x) - target for x in hs])
    idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if idx.size == 0:
        raise LoschmidtError(f"no field in ({lo}, {hi}) reaches gap {target}")
    i = int(idx[0])
    h = optimize.bisect(lambda x: gap(x) - target, hs[i], hs[i + 1], xtol=xtol)
    return {"n": n, "gamma": gamma, "target": target, "h": float(h), "gap": float(gap(h)),
            "nondegeneracy": nondegeneracy_check(ChainSpec(n, gamma, h))}


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def traces_to_csv(traces) -> str:
    buf = io.StringIO()
    buf.write("t,re_g,im_g,l,method\n")
    for tr in traces:
        for t, g, l in zip(tr.times, tr.g_values, tr.l_values):
            buf.write(f"{_fmt(t)},{_fmt(g.real)},{_fmt(g.imag)},{_fmt(l)},{tr.method}\n")
    return buf.getvalue()


def traces_from_csv(text: str) -> list[AmplitudeTrace]:
    rows = [r.split(",") for r in text.strip().split("\n")[1:]]
    out = {}
    for t, re, im, _, m in rows:
        out.setdefault(m, []).append((float(t), complex(float(re), float(im))))
    return [AmplitudeTrace(m, [r[0] for r in v], [r[1] for r in v]) for m, v in out.items()]


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        if not np.isfinite(obj):
            raise LoschmidtError("non-finite number in output")
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def document(cfg: RunConfig, traces=(), report=None, convergence=None, extra=None) -> dict:
    doc = {"config": cfg.to_dict(), "traces": [t.to_dict() for t in traces]}
    if report is not None:
        doc["report"] = report
    if convergence is not None:
        doc["convergence"] = convergence
    if extra:
        doc.update(extra)
    return _json_safe(doc)


def write_atomic(path: str | None, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename; stdout if no path."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--n", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--dh", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--methods", help="comma separated, e.g. exact,cumulant:3,resummed-sp,resummed-full:2")
    p.add_argument("--trunc", type=int)
    p.add_argument("--mode-convention", choices=CONVENTIONS, dest="mode_convention")
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--workers", type=int)
    p.add_argument("--parallel", action="store_true", default=None)
    p.add_argument("--nonnegative-variant", action="store_true", default=None, dest="nonnegative_variant")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loschmidt", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, hlp in (("spectrum", "mode table, sector, E0 and exact gap"),
                      ("le", "echo traces for the requested methods"),
                      ("compare", "pairwise comparison of methods")):
        _add_common(sub.add_parser(name, help=hlp))
    cal = sub.add_parser("calibrate-gap", help="find h in (0, 1) with a given exact gap")
    cal.add_argument("--n", type=int, required=True)
    cal.add_argument("--gamma", type=float, default=1.0)
    cal.add_argument("--target", type=float, required=True)
    cal.add_argument("--lo", type=float, default=0.0)
    cal.add_argument("--hi", type=float, default=1.0)
    cal.add_argument("--out")
    return ap


def _config_from_args(args) -> RunConfig:
    text = "{}"
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "config") from exc
    over = {k: getattr(args, k) for k in ("n", "gamma", "h", "dh", "tmax", "steps", "trunc", "mode_convention",
                                           "out", "format", "workers", "parallel", "nonnegative_variant")}
    if args.methods:
        over["methods"] = [m for m in args.methods.split(",") if m]
    return parse_config(text, over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "calibrate-gap":
            res = calibrate_gap(args.n, args.gamma, args.target, args.lo, args.hi)
            write_atomic(args.out, json.dumps(_json_safe(res), indent=2) + "\n")
            return 0
        cfg = _config_from_args(args)
        if args.command == "spectrum":
            res = run_spectrum(cfg)
            write_atomic(cfg.out, json.dumps(_json_safe({"config": cfg.to_dict(), "spectrum": res}), indent=2) + "\n")
            return 0
        if args.command == "le":
            traces = run_le(cfg)
            conv = next((t.meta.get("convergence") for t in traces if t.meta.get("convergence")), None)
            if cfg.format == "csv":
                text = traces_to_csv(traces)
            else:
                text = json.dumps(document(cfg, traces, convergence=conv), indent=1) + "\n"
            write_atomic(cfg.out, text)
            return 0
        if args.command == "compare":
            rep = run_compare(cfg)
            if cfg.format == "csv":
                text = traces_to_csv(rep.traces)
                for p in rep.pairs:
                    log.warning("%s vs %s: sup %.3e rms %.3e", p["a"], p["b"], p["sup"], p["rms"])
            else:
                text = json.dumps(document(cfg, rep.traces, rep.to_dict(), rep.convergence), indent=1) + "\n"
            write_atomic(cfg.out, text)
            return 0
    except LoschmidtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
