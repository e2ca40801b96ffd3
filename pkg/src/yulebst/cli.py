"""Command-line entry point: ``yulebst <command> [flags]``.

Every output starts with the run configuration (``# key=value`` lines for
CSV, a ``config`` object for JSON), which is enough to reproduce it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from . import acceptance, bst_process, exact_oracle, martingales, tilted_models, yule_process
from .stat_harness import _plain, stream, summarize

DEFAULTS: dict[str, Any] = {
    "seed": 1,
    "n": 100,
    "t": None,
    "z": "1",
    "two_z": 2.0,
    "replicates": 1000,
    "output": "-",
    "format": "csv",
    "q": "2",
}


@dataclass
class RunConfig:
    command: str
    seed: int = 1
    n: int = 100
    t: float | None = None
    z: list = field(default_factory=lambda: [1.0])
    two_z: float = 2.0
    replicates: int = 1000
    output: str = "-"
    format: str = "csv"
    extra: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.t is not None and self.t < 0:
            raise ValueError("t must be >= 0")
        if not self.two_z > 0:
            raise ValueError("two-z must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    def header(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("output")
        extra = d.pop("extra")
        d["z"] = ";".join(_format_z(z) for z in self.z)
        d.update(extra)
        return d


def _format_z(z) -> str:
    if isinstance(z, complex):
        return f"{z.real!r},{z.imag!r}"
    return repr(float(z))


def parse_z(text: str) -> list:
    """``x``, ``start:stop:step`` (stop included), ``re,im`` or several of these joined by ``;``."""
    out: list = []
    for item in str(text).split(";"):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            a, b, s = (float(x) for x in item.split(":"))
            if s <= 0 or b < a:
                raise ValueError(f"bad z grid {item!r}")
            count = int(math.floor((b - a) / s + 1e-9)) + 1
            out.extend(float(a + i * s) for i in range(count))
        elif "," in item:
            re, im = (float(x) for x in item.split(","))
            out.append(complex(re, im))
        else:
            out.append(float(item))
    if not out:
        raise ValueError("empty z specification")
    return out


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


# -- output -------------------------------------------------------------------------------

def _open_output(cfg: RunConfig):
    return sys.stdout if cfg.output == "-" else open(cfg.output, "w", newline="")


def emit(cfg: RunConfig, columns: list[str], rows: list[list], summary: dict | None = None) -> None:
    out = _open_output(cfg)
    try:
        if cfg.format == "json":
            doc = {"config": cfg.header(), "columns": columns, "rows": rows}
            if summary is not None:
                doc["summary"] = summary
            out.write(json.dumps(_plain(doc), sort_keys=True) + "\n")
            return
        for key, value in cfg.header().items():
            out.write(f"# {key}={value}\n")
        for key, value in (summary or {}).items():
            out.write(f"# result.{key}={json.dumps(_plain(value))}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    if isinstance(v, np.integer):
        return int(v)
    return v


# -- commands -------------------------------------------------------------------------------

def cmd_constants(cfg: RunConfig) -> int:
    cc = martingales.critical_constants()
    qs = [float(q) for q in str(cfg.extra.get("q", "2")).split(";")]
    intervals = {repr(q): list(martingales.lq_real_interval(q)) for q in qs}
    summary = {"c_prime": cc.c_prime, "c": cc.c, "z_minus": cc.z_minus, "z_plus": cc.z_plus,
               "real_interval": intervals}
    rows = [[x, martingales.eta(2.0, x), martingales.eta(2.0, x) - 1] for x in np.arange(0.0, 6.01, 0.25)]
    emit(cfg, ["x", "eta_2", "rate_minus_1"], rows, summary)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    kind = cfg.extra["kind"]
    g = stream(cfg.seed, 0)
    if kind == "bst":
        chain = bst_process.run_chain(cfg.n, g)
        buf = io.StringIO()
        bst_process.write_trajectory_csv(chain, buf)
        rows = [r for r in csv.reader(buf.getvalue().splitlines())][1:]
        emit(cfg, ["n", "d_n", "h_n", "H_n"], [[int(x) for x in r] for r in rows],
             {"profile": chain.tree.profile().counts})
    elif kind == "yule":
        if cfg.t is not None:
            path = yule_process.yule_simulate(g, t=cfg.t)
        else:
            path = yule_process.yule_simulate(g, leaves=max(cfg.n, 1))
        n = path.n_jumps
        summary = {"jumps": n}
        if n:
            summary["xi_estimate"] = yule_process.xi_estimate(path, n)
        emit(cfg, ["n", "tau_n"], [[i, float(tau)] for i, tau in enumerate(path.jump_times)], summary)
    elif kind == "biased":
        state, trace = tilted_models.run_biased_bst(cfg.n, cfg.two_z, g)
        emit(cfg, ["n", "s_n"], [[i + 1, s] for i, s in enumerate(trace)],
             {"spine_leaf": str(state.spine_leaf)})
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return 0


def cmd_profile(cfg: RunConfig) -> int:
    n = cfg.n
    counts = np.bincount(bst_process.leaf_depths(n, stream(cfg.seed, 0)))
    if n <= exact_oracle.STIRLING_N_MAX:
        exact = exact_oracle.expected_profile_exact(n)
        expected = np.zeros(max(counts.size, max(exact) + 1))
        for k, v in exact.items():
            expected[k] = float(v)
    else:
        expected = exact_oracle.expected_profile_recurrence(n)
    ln = math.log(n) if n > 1 else float("nan")
    support = np.nonzero(expected >= 1e-12)[0]
    rows = []
    for k in range(max(counts.size, int(support[-1]) + 1)):
        u = int(counts[k]) if k < counts.size else 0
        e = float(expected[k]) if k < expected.size else 0.0
        ratio = u / e if e > 0 else float("nan")
        mart = martingales.bst_martingale(counts, k / (2 * ln)) if k >= 1 and n > 1 else float("nan")
        rows.append([k, u, e, ratio, mart])
    emit(cfg, ["k", "U_k", "E_U_k", "ratio", "M_n_at_k_over_2logn"], rows, {"leaves": int(counts.sum())})
    return 0


def cmd_martingale(cfg: RunConfig) -> int:
    g = stream(cfg.seed, 0)
    rows = []
    if cfg.t is not None:
        path = yule_process.yule_simulate(g, t=cfg.t)
        counts = np.bincount([u.depth for u in path.tree_at(path.n_jumps - 1).leaves])
        for z in cfg.z:
            d = martingales.yule_derivative_martingale(counts, cfg.t, z) if _positive(z) else float("nan")
            rows.append([_format_z(z), martingales.yule_martingale(counts, cfg.t, z), d])
        emit(cfg, ["z", "M_t", "M_t_derivative"], rows, {"leaves": int(counts.sum())})
        return 0
    counts = np.bincount(bst_process.leaf_depths(cfg.n, g))
    for z in cfg.z:
        d = martingales.bst_derivative_martingale(counts, z) if _positive(z) else float("nan")
        rows.append([_format_z(z), martingales.bst_martingale(counts, z), d, martingales.c_n(z, cfg.n)])
    emit(cfg, ["z", "M_n", "M_n_derivative", "C_n"], rows)
    return 0


def _positive(z) -> bool:
    return not isinstance(z, complex) and z > 0


def cmd_quicksort(cfg: RunConfig) -> int:
    if cfg.replicates < 2:
        raise ValueError("quicksort needs at least two replicates")
    x = acceptance.quicksort_sample(cfg.n, cfg.replicates, cfg.seed)
    mc = summarize(x)
    summary = {"mean": mc.mean, "stderr": mc.stderr, "variance": float(x.var(ddof=1)),
               "limit_variance": exact_oracle.quicksort_moments()[1]}
    emit(cfg, ["replicate", "M_n_derivative_at_1"], [[i, v] for i, v in enumerate(x)], summary)
    return 0


def cmd_spine(cfg: RunConfig) -> int:
    s = tilted_models.spine_depths_skip(cfg.n, cfg.two_z, cfg.replicates, cfg.seed)
    summary: dict[str, Any] = {}
    if cfg.n >= 2:
        a_values = [cfg.two_z * f for f in (1.25, 1.5, 2.0)]
        st = tilted_models.spine_statistics(s, cfg.n, cfg.two_z, a_values)
        summary = {"lln": st["lln"], "lln_exact": st["lln_exact"], "clt_ks": st["clt_ks"],
                   "ldp_curve": {repr(a): [r, martingales.eta(cfg.two_z, a)] for a, r in st["ldp_curve"].items()}}
    emit(cfg, ["n", "s_n"], [[cfg.n, int(v)] for v in s], summary)
    return 0


def cmd_tilted(cfg: RunConfig) -> int:
    t = 1.0 if cfg.t is None else cfg.t
    counts, depth = tilted_models.biased_yule_samples(t, cfg.two_z, cfg.replicates, cfg.seed)
    summary = {"mean_N_t": float(counts.mean()), "expected_N_t": 1 + cfg.two_z * math.expm1(t),
               "mean_s_t": float(depth.mean()), "expected_s_t": cfg.two_z * t}
    emit(cfg, ["t", "N_t", "s_t"], [[t, int(c), int(d)] for c, d in zip(counts, depth)], summary)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    suite = cfg.extra.get("suite", "fast")
    out = _open_output(cfg)
    reports = []
    try:
        def show(rep):
            reports.append(rep)
            for line in acceptance.report_lines(rep):
                print(line, file=sys.stderr if out is sys.stdout else sys.stdout, flush=True)
            out.write(rep.to_json() + "\n")
            out.flush()

        acceptance.run_suite(suite, cfg.seed, on_report=show)
    finally:
        if out is not sys.stdout:
            out.close()
    failed = [r.name for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} criteria passed", file=sys.stderr)
    return 1 if failed else 0


HANDLERS = {
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "profile": cmd_profile,
    "martingale": cmd_martingale,
    "quicksort": cmd_quicksort,
    "spine": cmd_spine,
    "tilted": cmd_tilted,
    "verify": cmd_verify,
}


# -- argument handling -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of key=value lines; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--t", type=float)
    common.add_argument("--z", help="value, start:stop:step, or re,im; join several with ';'")
    common.add_argument("--two-z", dest="two_z", type=float)
    common.add_argument("--replicates", type=int)
    common.add_argument("--output", help="output path, '-' for stdout")
    common.add_argument("--format", choices=("csv", "json"))

    parser = argparse.ArgumentParser(prog="yulebst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("constants", parents=[common], help="critical constants, rate function, L^q interval")
    p.add_argument("--q", help="exponents in (1, 2], joined by ';'")
    p = sub.add_parser("simulate", parents=[common], help="simulate one trajectory")
    p.add_argument("kind", choices=("bst", "yule", "biased"))
    sub.add_parser("profile", parents=[common], help="profile of one tree against its expectation")
    sub.add_parser("martingale", parents=[common], help="martingales of one tree over a z grid")
    sub.add_parser("quicksort", parents=[common], help="samples of the Quicksort functional")
    sub.add_parser("spine", parents=[common], help="spine depth samples under the tilt")
    sub.add_parser("tilted", parents=[common], help="leaf count and spine depth of the tilted Yule tree")
    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("suite", nargs="?", choices=("fast", "all"), default="fast")
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in ("seed", "n", "t", "z", "two_z", "replicates", "output", "format", "q"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    t = merged["t"]
    cfg = RunConfig(
        command=args.command,
        seed=int(merged["seed"]),
        n=int(merged["n"]),
        t=None if t in (None, "", "none") else float(t),
        z=parse_z(merged["z"]),
        two_z=float(merged["two_z"]),
        replicates=int(merged["replicates"]),
        output=str(merged["output"]),
        format=str(merged["format"]),
    )
    if args.command == "constants":
        cfg.extra["q"] = str(merged["q"])
    if args.command == "simulate":
        cfg.extra["kind"] = args.kind
    if args.command == "verify":
        cfg.extra["suite"] = args.suite
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return HANDLERS[cfg.command](cfg)
    except BrokenPipeError:
        sys.stdout = open(os.devnull, "w")
        return 0
    except (ValueError, OSError) as exc:
        print(f"yulebst: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
