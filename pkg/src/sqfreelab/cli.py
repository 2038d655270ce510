"""sqfree-lab: batch experiments with CSV/JSON reports and a run manifest.

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 an audited
property failed (the report is still written).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__, curves, nil
from .arith import iroot
from .calibrate import calibrate_all, load_constants, tomllib, tomli_w
from .differencing import boosted_approx, membership_scan, pair_family, roth_param
from .sieve import Interval, ScaleContext, count_squarefree, d_set, dyadic_scales, gap_scan, mobius_decomposition

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_AUDIT = 0, 1, 2, 3

KINDS = ("count", "decompose", "dset", "gaps", "diff-scan", "curve-bounds", "nil-dichotomy", "boost-g", "calibrate")
RANDOMIZED = {"curve-bounds", "nil-dichotomy"}


class ConfigError(ValueError):
    pass


@dataclass
class Report:
    columns: list[str]
    rows: list[dict]
    audit_ok: bool = True
    audit_note: str = ""
    seeds: list[int] = field(default_factory=list)


# --- formatting -------------------------------------------------------------


def fmt_value(v):
    """Rationals as "num/den", reals with 17 significant digits, everything else as text."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (tuple, list)):
        return ";".join(fmt_value(x) for x in v)
    return str(v)


def _json_value(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return float(format(v, ".17g")) if math.isfinite(v) else str(v)
    if isinstance(v, (tuple, list)):
        return [_json_value(x) for x in v]
    return fmt_value(v)


def emit(report: Report, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([fmt_value(row.get(c, "")) for c in report.columns])
        return buf.getvalue()
    if fmt == "json":
        recs = [{c: _json_value(row.get(c)) for c in report.columns} for row in report.rows]
        return json.dumps(recs, indent=1) + "\n"
    raise ConfigError(f"format must be csv or json, got {fmt!r}")


def task_seed(master: int, index: int) -> int:
    """64-bit per-task seed: sha256 of "master:index"."""
    h = hashlib.sha256(f"{master}:{index}".encode()).digest()
    return int.from_bytes(h[:8], "little")


# --- experiments -------------------------------------------------------------------


def _need(cfg: dict, *names):
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise ConfigError(f"missing required parameter(s): {', '.join(missing)}")
    return [cfg[n] for n in names]


def run_count(cfg) -> Report:
    X, H = _need(cfg, "X", "H")
    c = count_squarefree(Interval(X, H))
    return Report(["X", "H", "count", "density"], [{"X": X, "H": H, "count": c, "density": c / (H + 1)}])


def run_decompose(cfg) -> Report:
    X, H = _need(cfg, "X", "H")
    top = math.isqrt(X + H)
    D_plus = top if top * top == X + H else top + 1
    D = cfg.get("D") or max(1, iroot(X, 5))
    rep = mobius_decomposition(Interval(X, H), D, D_plus)
    sieve_count = count_squarefree(Interval(X, H))
    ok = rep.exact_count == sieve_count
    row = {"X": X, "H": H, "D": D, "count": rep.exact_count, "bound-ratio": rep.bound_ratio,
           "main_term": rep.main_term, "residual": rep.residual}
    return Report(list(row), [row], ok, "" if ok else f"decomposition {rep.exact_count} != sieve {sieve_count}")


def run_dset(cfg) -> Report:
    X, H, D = _need(cfg, "X", "H", "D")
    s = d_set(ScaleContext(X, H, D))
    rows = [{"d": d, "m": -(-X // (d * d)), "frac_dist": _dist_float(X, d)} for d in s.members]
    return Report(["d", "m", "frac_dist"], rows)


def _dist_float(X, d):
    r = X % (d * d)
    return min(r, d * d - r) / (d * d)


def run_gaps(cfg) -> Report:
    (N,) = _need(cfg, "N")
    rep = gap_scan(N, threads=cfg.get("threads") or 1)
    rows = [{"q": q, "gap": g, "ratio": g / q ** 0.2} for q, g in rep.record_gaps]
    ok = rep.fifth_root_violations == 0
    return Report(["q", "gap", "ratio"], rows, ok, "" if ok else f"{rep.fifth_root_violations} gaps above 5 q^(1/5)")


def run_diff_scan(cfg) -> Report:
    X, H = _need(cfg, "X", "H")
    scales = [cfg["D"]] if cfg.get("D") else dyadic_scales(H, math.isqrt(X))
    rows = membership_scan(X, H, scales, cfg.get("a"))
    bad = sum(r["violations_F"] + r["violations_R"] for r in rows)
    cols = ["X", "H", "D", "a", "family_size", "violations_F", "violations_R", "worst_slack_R",
            "min_spacing", "lemma_ratio", "max_fiber", "C_prime"]
    return Report(cols, rows, bad == 0, "" if bad == 0 else f"{bad} near-integer inequality violations")


def run_curve_bounds(cfg, constants) -> Report:
    family = cfg.get("family") or "frac"
    if family not in curves.FAMILIES:
        raise ConfigError(f"family must be one of {sorted(curves.FAMILIES)}")
    trials = cfg.get("trials") or 100
    seed = task_seed(cfg["seed"], 0)
    reps = curves.validate_family(family, trials, seed)
    C = constants["curves"]["C"][family]
    rows = [{"trial": i, "count": r.brute_count, "bound": r.bound_value, "ratio": r.ratio,
             "hypothesis_ok": r.hypothesis_ok} for i, r in enumerate(reps)]
    worst = curves.max_ratio(reps)
    ok = worst <= C
    return Report(["trial", "count", "bound", "ratio", "hypothesis_ok"], rows, ok,
                  "" if ok else f"max ratio {worst:.4g} exceeds pinned C = {C}", [seed])


def run_nil_dichotomy(cfg, constants) -> Report:
    N = cfg.get("N") or 10**5
    delta = cfg.get("delta") or N ** -0.25
    Q = cfg.get("Q") or 200
    trials = cfg.get("trials") or 200
    seed = task_seed(cfg["seed"], 0)
    rep = nil.dichotomy_experiment(trials, N, delta, Q, constants["nil"]["eps"], seed)
    rows = []
    for i, t in enumerate(rep.trials):
        best = t.obstructions[0].char if t.obstructions else None
        rows.append({"trial": i, "kind": t.kind, "q": t.q if t.q is not None else "", "D_star": t.D_star,
                     "equidistributed": t.equidistributed, "obstructions": len(t.obstructions),
                     "best": (best.q1, best.q2, best.q3) if best else "", "flagged": t.flagged})
    # planted misses are a resolution limit of delta; only unexplained control failures are alarms
    flagged = sum(1 for t in rep.flagged if t.kind == "control")
    return Report(["trial", "kind", "q", "D_star", "equidistributed", "obstructions", "best", "flagged"],
                  rows, flagged == 0, "" if not flagged else f"{flagged} flagged control trial(s)", [seed])


def run_boost_g(cfg) -> Report:
    X, H, D, a = _need(cfg, "X", "H", "D", "a")
    fam = pair_family(d_set(ScaleContext(X, H, D)), a)
    if not fam.members:
        raise ConfigError(f"no consecutive pairs at gap a={a} for this (X, H, D)")
    rep = boosted_approx(roth_param(fam))
    rows = [{"r": r.r, "j": r.j, "d_star": r.d_star, "f_tilde": r.f_tilde, "f_star": r.f_star,
             "g": r.g, "dist": r.dist, "envelope": rep.envelope} for r in rep.rows]
    return Report(["r", "j", "d_star", "f_tilde", "f_star", "g", "dist", "envelope"], rows)


# --- driver ---------------------------------------------------------------------------

INT_FIELDS = ("X", "H", "D", "a", "N", "Q", "seed", "threads", "trials")


def build_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg.update(tomllib.loads(Path(args.config).read_text()))
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}")
    for k in (*INT_FIELDS, "delta", "family", "format", "out", "constants"):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    kind = cfg.setdefault("kind", args.kind)
    if kind != args.kind:
        raise ConfigError(f"config kind {kind!r} does not match subcommand {args.kind!r}")
    for k in INT_FIELDS:
        if k in cfg and (not isinstance(cfg[k], int) or isinstance(cfg[k], bool)):
            raise ConfigError(f"field {k!r} must be an integer")
    if "delta" in cfg and not (isinstance(cfg["delta"], (int, float)) and 0 < cfg["delta"] < 1):
        raise ConfigError("field 'delta' must lie in (0, 1)")
    if kind in RANDOMIZED and cfg.get("seed") is None:
        raise ConfigError(f"field 'seed' is required for {kind}")
    cfg.setdefault("format", "csv")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("field 'format' must be csv or json")
    return cfg


def run(cfg: dict) -> tuple[Report | None, dict]:
    kind = cfg["kind"]
    constants = load_constants(cfg.get("constants"))
    if kind == "calibrate":
        return None, calibrate_all()
    table = {
        "count": run_count, "decompose": run_decompose, "dset": run_dset, "gaps": run_gaps,
        "diff-scan": run_diff_scan, "boost-g": run_boost_g,
    }
    if kind in table:
        return table[kind](cfg), {}
    if kind == "curve-bounds":
        return run_curve_bounds(cfg, constants), {}
    if kind == "nil-dichotomy":
        return run_nil_dichotomy(cfg, constants), {}
    raise ConfigError(f"unknown experiment kind {kind!r}")


def _config_hash(cfg: dict) -> str:
    canon = json.dumps({k: fmt_value(v) for k, v in sorted(cfg.items())}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()


class _Parser(argparse.ArgumentParser):
    # malformed flags are validation errors (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML experiment config")
    for name in INT_FIELDS:
        common.add_argument(f"--{name}", type=int)
    common.add_argument("--delta", type=float)
    common.add_argument("--family", help="curve family: frac, stat, poisson, ft6")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="report path (stdout if omitted)")
    common.add_argument("--constants", help="calibrated constants file")
    p = _Parser(prog="sqfree-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="kind", required=True)
    for k in KINDS:
        sub.add_parser(k, parents=[common])
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        cfg = build_config(args)
        report, extra = run(cfg)
    except (ConfigError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    text = tomli_w.dumps(extra) if report is None else emit(report, cfg["format"])
    out = cfg.get("out")
    if out:
        try:
            Path(out).write_text(text)
        except OSError as e:
            print(f"error: cannot write {out}: {e}", file=sys.stderr)
            return EXIT_INVALID
        manifest = {
            "config_hash": _config_hash(cfg),
            "version": __version__,
            "started": started,
            "finished": time.time(),
            "seeds": report.seeds if report else [],
            "outputs": {out: hashlib.sha256(text.encode()).hexdigest()},
        }
        Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    else:
        sys.stdout.write(text)
    if report is not None and not report.audit_ok:
        print(f"audit failure: {report.audit_note}", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
