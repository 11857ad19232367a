"""Command-line front end: ``slh analyze | windows | synth``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 computation
degeneracy.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields

from .config import AnalysisConfig
from .errors import ConfigError, SLHierarchyError, StageError
from .hierarchy import analyze, equal_windows, windowed_analyze
from .ingest import load_price_series, write_price_series
from .synth import CascadeSpec, generate_cascade, generate_fbm

SUMMARY_FIELDS = ("label", "beta", "beta_stderr", "h0", "C", "C_spread", "flat",
                  "max_abs_f", "config_hash")


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    column: object = 0
    output_dir: str = "slh_out"
    windows: dict | None = None      # {"count": k} or {"ranges": [[start, stop], ...]}
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def problems(self):
        out = [] if self.input else ["input path is required (--input or config file)"]
        if self.windows is not None:
            w = self.windows
            if "count" in w:
                if not isinstance(w["count"], int) or w["count"] < 1:
                    out.append("window count must be a positive integer")
            elif "ranges" in w:
                for r in w["ranges"]:
                    if len(r) != 2 or not 0 <= r[0] < r[1]:
                        out.append(f"bad window range {r!r}")
            else:
                out.append("windows needs 'count' or 'ranges'")
        return out + self.analysis.problems()

    def validate(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def to_dict(self):
        return {"input": self.input, "column": self.column, "output_dir": self.output_dir,
                "windows": self.windows, "analysis": self.analysis.to_dict()}

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in unknown])
        d = dict(d)
        d["analysis"] = AnalysisConfig.from_dict(d.get("analysis") or {})
        return cls(**d)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# -- file output -------------------------------------------------------------

def _file_mode():
    # mkstemp creates 0600 files; give outputs the usual umask-derived mode
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def write_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        os.chmod(tmp, _file_mode())
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        vals = [r.get(h) for h in header] if isinstance(r, dict) else list(r)
        w.writerow([_cell(v) for v in vals])
    return buf.getvalue()


def xi_csv(est):
    x = est.xi_fit
    return csv_text(("p", "xi", "stderr", "r2"), zip(x.p_grid, x.xi, x.stderr, x.r2))


def f_csv(est):
    rows = []
    if est.flatness is not None:
        rows = [(p, q, t, math.log2(t), v) for p, q, t, v in est.flatness.rows()]
    return csv_text(("p", "q", "tau", "log2_tau", "F"), rows)


def write_reports(est, outdir, scatter_csv=None):
    write_atomic(os.path.join(outdir, "report.json"), est.to_json())
    write_atomic(os.path.join(outdir, "summary.csv"), csv_text(SUMMARY_FIELDS, [est.summary_row()]))
    write_atomic(os.path.join(outdir, "xi_vs_p.csv"), xi_csv(est))
    write_atomic(os.path.join(outdir, "scatter.csv"), est.scatter.to_csv())
    write_atomic(os.path.join(outdir, "f_vs_log2tau.csv"), f_csv(est))
    if scatter_csv:
        write_atomic(scatter_csv, est.scatter.to_csv())


# -- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _pair(cast):
    def parse(text):
        parts = [cast(x) for x in text.split(",")]
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
        return tuple(parts)
    return parse


def _range(text):
    a, _, b = text.partition(":")
    return [int(a), int(b)]


# (flag, AnalysisConfig field, type)
_ANALYSIS_FLAGS = (
    ("--p-start", "p_start", float),
    ("--p-stop", "p_stop", float),
    ("--p-step", "p_step", float),
    ("--tau-grid", "tau_grid", _ints),
    ("--fit-tau-range", "fit_tau_range", _pair(int)),
    ("--n", "n", float),
    ("--q", "q", float),
    ("--delta-p", "delta_p", float),
    ("--rho-p-range", "rho_p_range", _pair(float)),
    ("--flat-p-set", "flat_p_set", _floats),
    ("--flat-q-set", "flat_q_set", _floats),
    ("--tau0", "tau0", int),
    ("--flat-threshold", "flat_threshold", float),
    ("--c-p-range", "c_p_range", _pair(float)),
    ("--monofractal-trend", "monofractal_trend", float),
    ("--workers", "workers", int),
)


def _add_run_options(p):
    p.add_argument("--config", help="JSON run config; flags override its values")
    p.add_argument("--input", help="price file (comma or tab separated)")
    p.add_argument("--column", help="value column: header name or 0-based index")
    p.add_argument("--log-prices", action="store_true", default=None,
                   help="difference log prices instead of raw prices")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--print-config", action="store_true",
                   help="print the effective config and exit")
    for flag, name, typ in _ANALYSIS_FLAGS:
        p.add_argument(flag, dest=name, type=typ)


def build_parser():
    parser = _Parser(prog="slh", description="She-Leveque hierarchy analysis of time series")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="estimate beta, h0 and C for one series")
    _add_run_options(a)
    a.add_argument("--scatter-csv", help="extra copy of the Delta-rho pairs")

    w = sub.add_parser("windows", help="analyze index windows separately")
    _add_run_options(w)
    g = w.add_mutually_exclusive_group()
    g.add_argument("--windows", dest="window_count", type=int, help="number of equal windows")
    g.add_argument("--window", dest="window_ranges", type=_range, action="append",
                   help="START:STOP sample range (repeatable)")

    s = sub.add_parser("synth", help="generate synthetic test series")
    kinds = s.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    c = kinds.add_parser("cascade", help="log-Poisson multiplicative cascade")
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--C", dest="C", type=float, required=True)
    c.add_argument("--h0", type=float, default=0.0)
    c.add_argument("--levels", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", help="CSV path (sidecar JSON written next to it)")
    f = kinds.add_parser("fbm", help="fractional Brownian motion")
    f.add_argument("--H", dest="H", type=float, required=True)
    f.add_argument("--length", type=int, required=True)
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--out")
    return parser


def run_config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                base = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from None
    cfg = RunConfig.from_dict(base)

    analysis = cfg.analysis.to_dict()
    for _, name, _ in _ANALYSIS_FLAGS:
        v = getattr(args, name)
        if v is not None:
            analysis[name] = v
    if args.log_prices:
        analysis["log_prices"] = True

    top = cfg.to_dict()
    top["analysis"] = analysis
    for name in ("input", "output_dir"):
        if getattr(args, name) is not None:
            top[name] = getattr(args, name)
    if args.column is not None:
        top["column"] = int(args.column) if args.column.lstrip("-").isdigit() else args.column
    if getattr(args, "window_count", None) is not None:
        top["windows"] = {"count": args.window_count}
    elif getattr(args, "window_ranges", None):
        top["windows"] = {"ranges": args.window_ranges}
    return RunConfig.from_dict(top)


def _fail(exc):
    print(f"error: {exc}", file=sys.stderr)
    if isinstance(exc, ConfigError) and len(exc.problems) > 1:
        for p in exc.problems:
            print(f"  - {p}", file=sys.stderr)
    return getattr(exc, "exit_code", 2)


def cmd_analyze(cfg: RunConfig, scatter_csv=None) -> int:
    cfg.validate()
    series = load_price_series(cfg.input, cfg.column)
    est = analyze(series, cfg.analysis)
    write_reports(est, cfg.output_dir, scatter_csv)
    return 0


def cmd_windows(cfg: RunConfig) -> int:
    cfg.validate()
    series = load_price_series(cfg.input, cfg.column)
    w = cfg.windows or {"count": 1}
    if "count" in w:
        windows = equal_windows(len(series), w["count"])
    else:
        windows = [tuple(r) for r in w["ranges"]]
    results = windowed_analyze(series, windows + [(0, len(series))], cfg.analysis)

    header = ("window", "start", "stop") + SUMMARY_FIELDS + ("status", "error")
    rows = []
    for i, res in enumerate(results):
        name = "total" if i == len(windows) else str(i)
        row = {"window": name, "start": res.window[0], "stop": res.window[1]}
        row.update({k: None for k in SUMMARY_FIELDS})
        if res.estimate is not None:
            row.update(res.estimate.summary_row())
            failed = res.estimate.stage_failures
            row["status"] = "ok" if not failed else "partial"
            row["error"] = "; ".join(failed.values()) or None
        else:
            row["status"] = "failed"
            row["error"] = str(res.error)
        rows.append(row)
    text = csv_text(header, rows)
    write_atomic(os.path.join(cfg.output_dir, "windows.csv"), text)

    if any(r.ok for r in results[:len(windows)]):
        return 0
    errs = [r.error for r in results[:len(windows)] if r.error is not None]
    return errs[0].exit_code if errs else 3


def cmd_synth(args) -> int:
    if args.kind == "cascade":
        spec = CascadeSpec(args.beta, args.C, args.h0, args.levels, args.seed)
        syn = generate_cascade(spec)
    else:
        syn = generate_fbm(args.H, args.length, args.seed)
    out = args.out or f"{syn.series.label}.csv"
    d = os.path.dirname(os.path.abspath(out))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
    os.close(fd)
    try:
        os.chmod(tmp, _file_mode())
        write_price_series(syn.series, tmp)
        os.replace(tmp, out)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    sidecar = os.path.splitext(out)[0] + ".json"
    write_atomic(sidecar, json.dumps(syn.sidecar(), indent=2, sort_keys=True) + "\n")
    print(out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        cfg = run_config_from_args(args)
        if args.print_config:
            sys.stdout.write(cfg.canonical_json())
            return 0
        if args.command == "analyze":
            return cmd_analyze(cfg, args.scatter_csv)
        return cmd_windows(cfg)
    except FileNotFoundError as exc:
        print(f"error: FileNotFound: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        return _fail(exc)
    except SLHierarchyError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
