"""Command-line front end.

Every subcommand writes a '#'-prefixed metadata block followed by a CSV (or
JSON-lines) payload.  The payload depends only on the resolved configuration,
so reruns with the same config and seed reproduce it byte for byte.

Configuration precedence: built-in defaults < ``--config`` file (flat
``key=value`` lines) < command-line flags.  ``DRAINAGE_SEED`` supplies the
seed when neither the file nor the flags do.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .dynamics import SearchExceeded

COMMON_DEFAULTS: dict[str, Any] = {
    "d": 2,
    "p": 0.5,
    "seed": None,
    "n_replicates": 1000,
    "height": 100,
    "t_cap": 10**6,
    "format": "csv",
    "out": None,
    "threads": None,
    "overwrite": False,
    "max_search_height": 64,
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "trace": {"x0": 0},
    "regen": {"gap": 1},
    "coalesce": {"x": "1,2,4,8", "t_grid": "100,1000,10000"},
    "triple": {"gaps": "1:1,2:2,4:4,8:8"},
    "scaling": {"n_scale": 100},
    "eta": {"n_scale": 100, "t": 1.0, "epsilon": "0.5,0.25"},
    "treescan": {"spacing": 10},
    "exact": {"m_max": 4},
}

INT_KEYS = {
    "d", "seed", "n_replicates", "height", "t_cap", "threads", "max_search_height",
    "x0", "gap", "n_scale", "spacing", "m_max",
}
FLOAT_KEYS = {"p", "t"}
BOOL_KEYS = {"overwrite"}
D2_ONLY = {"regen", "coalesce", "triple", "scaling", "eta"}


class ConfigError(ValueError):
    pass


def read_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
        if key in BOOL_KEYS:
            if isinstance(value, bool):
                return value
            return str(value).lower() in ("1", "true", "yes", "on")
    except ValueError as e:
        raise ConfigError(f"{key}: cannot parse {value!r}") from e
    return value


def resolve_config(cmd: str, flags: dict[str, Any]) -> dict[str, Any]:
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[cmd])
    if flags.get("config"):
        for k, v in read_config(flags["config"]).items():
            if k not in cfg:
                raise ConfigError(f"{k}: unknown config key")
            cfg[k] = v
    for k, v in flags.items():
        if k in cfg and v is not None:
            cfg[k] = v
    if cfg["seed"] is None:
        env_seed = os.environ.get("DRAINAGE_SEED")
        cfg["seed"] = env_seed if env_seed is not None else 0
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    validate(cmd, cfg)
    return cfg


def validate(cmd: str, cfg: dict[str, Any]) -> None:
    if cfg["d"] < 2:
        raise ConfigError(f"d: must be >= 2, got {cfg['d']}")
    if not 0.0 < cfg["p"] < 1.0:
        raise ConfigError(f"p: must lie in (0, 1), got {cfg['p']}")
    if cfg["n_replicates"] < 1:
        raise ConfigError(f"n_replicates: must be >= 1, got {cfg['n_replicates']}")
    if cfg["height"] < 0:
        raise ConfigError(f"height: must be >= 0, got {cfg['height']}")
    if cfg["t_cap"] < 1:
        raise ConfigError(f"t_cap: must be >= 1, got {cfg['t_cap']}")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format: must be csv or json, got {cfg['format']!r}")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError(f"threads: must be >= 1, got {cfg['threads']}")
    if cfg["max_search_height"] < 1:
        raise ConfigError(f"max_search_height: must be >= 1, got {cfg['max_search_height']}")
    if cmd in D2_ONLY and cfg["d"] != 2:
        raise ConfigError(f"d: {cmd} runs in d=2 only, got {cfg['d']}")
    if cmd == "regen" and cfg["gap"] < 1:
        raise ConfigError(f"gap: must be >= 1, got {cfg['gap']}")
    if cmd == "treescan" and cfg["spacing"] < 0:
        raise ConfigError(f"spacing: must be >= 0, got {cfg['spacing']}")
    if cmd == "exact" and cfg["m_max"] < 0:
        raise ConfigError(f"m_max: must be >= 0, got {cfg['m_max']}")


def _ints(s: str, key: str) -> list[int]:
    try:
        return [int(v) for v in str(s).split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"{key}: expected comma-separated integers, got {s!r}") from e


def _floats(s: str, key: str) -> list[float]:
    try:
        return [float(v) for v in str(s).split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {s!r}") from e


def _params(cfg):
    from .env import ModelParams

    return ModelParams(cfg["d"], cfg["p"], cfg["seed"], cfg["max_search_height"])


Rows = tuple[list[str], list[list[Any]]]


def cmd_trace(cfg) -> Rows:
    from .dynamics import trace

    params = _params(cfg)
    start = (cfg["x0"],) + (0,) * (params.d - 1)
    rec = trace(params, start, cfg["height"])
    cols = ["k"] + [f"x{i + 1}" for i in range(params.d - 1)] + ["level"]
    return cols, [[k, *v] for k, v in enumerate(rec.vertices)]


def cmd_regen(cfg) -> Rows:
    from .joint import run_regenerations

    params = _params(cfg)
    recs = run_regenerations(params, [(0, 0), (cfg["gap"], 0)], cfg["n_replicates"])
    cols = ["l", "tau", "sigma", "T", "z"]
    return cols, [[r.l, r.tau, r.sigma, r.T, r.z[0]] for r in recs]


def cmd_coalesce(cfg) -> Rows:
    from .stats import coalescence_survival

    params = _params(cfg)
    grid = _floats(cfg["t_grid"], "t_grid")
    if not grid or min(grid) <= 0:
        raise ConfigError("t_grid: need positive times")
    if max(grid) > cfg["t_cap"]:
        raise ConfigError("t_grid: largest time exceeds t_cap")
    rows = []
    for x in _ints(cfg["x"], "x"):
        if x < 1:
            raise ConfigError(f"x: offsets must be >= 1, got {x}")
        c = coalescence_survival(params, x, grid, cfg["n_replicates"], cfg["t_cap"])
        for t, s, se in zip(c.t, c.survival, c.se):
            rows.append([x, t, s, se, c.N, c.censored])
    return ["x", "t", "survival", "se", "n", "censored"], rows


def cmd_triple(cfg) -> Rows:
    from .stats import triple_sample

    params = _params(cfg)
    rows = []
    for item in str(cfg["gaps"]).split(","):
        try:
            a, b = (int(v) for v in item.split(":"))
        except ValueError as e:
            raise ConfigError(f"gaps: expected a:b pairs, got {item!r}") from e
        if a < 1 or b < 1:
            raise ConfigError(f"gaps: entries must be >= 1, got {item!r}")
        s = triple_sample(params, 0, a, a + b, cfg["n_replicates"], cfg["t_cap"])
        n = s.n.size
        rows.append([
            0, a, a + b, s.product,
            s.n.mean(), s.n.std(ddof=1) / math.sqrt(n),
            s.nu.mean(), s.nu.std(ddof=1) / math.sqrt(n),
            s.T1.mean(), s.T1.std(ddof=1) / math.sqrt(n),
            int(s.capped.sum()),
        ])
    cols = ["x", "y", "z", "product", "n_mean", "n_se", "nu_mean", "nu_se",
            "T1_mean", "T1_se", "capped"]
    return cols, rows


def cmd_scaling(cfg) -> Rows:
    from .analytic import gamma_exact, sigma2_exact
    from .stats import ScalingParams, estimate_scaling, rescaled_endpoint_sample
    from scipy.stats import kstest

    params = _params(cfg)
    est = estimate_scaling(params, max(cfg["n_replicates"], 1000))
    g, s2 = gamma_exact(params.p), sigma2_exact(params.p)
    rows = [
        ["gamma", est.gamma.value, est.gamma.se, g],
        ["sigma2", est.sigma2.value, est.sigma2.se, s2],
        ["sigma", est.sigma.value, est.sigma.se, math.sqrt(s2)],
    ]
    sp = ScalingParams(math.sqrt(s2), g, cfg["n_scale"])
    e = rescaled_endpoint_sample(params.replicate(1 << 40), sp, cfg["n_replicates"])
    rows.append(["endpoint_mean", e.mean(), e.std(ddof=1) / math.sqrt(e.size), 0.0])
    rows.append(["endpoint_var", e.var(ddof=1), math.nan, 1.0])
    rows.append(["endpoint_ks_pvalue", kstest(e, "norm").pvalue, math.nan, math.nan])
    return ["quantity", "estimate", "se", "exact"], rows


def cmd_eta(cfg) -> Rows:
    from .analytic import gamma_exact, sigma2_exact
    from .stats import ScalingParams, eta_estimate

    params = _params(cfg)
    sp = ScalingParams(math.sqrt(sigma2_exact(params.p)), gamma_exact(params.p), cfg["n_scale"])
    rows = []
    for eps in _floats(cfg["epsilon"], "epsilon"):
        if eps <= 0:
            raise ConfigError(f"epsilon: must be > 0, got {eps}")
        e = eta_estimate(params, sp, cfg["t"], eps, cfg["n_replicates"])
        rows.append([
            eps, e.width, e.level, e.N,
            e.prob_ge2.value, e.prob_ge2.lo, e.prob_ge2.hi,
            e.prob_ge3.value, e.prob_ge3.lo, e.prob_ge3.hi,
        ])
    cols = ["epsilon", "width", "level", "n", "p_ge2", "p_ge2_lo", "p_ge2_hi",
            "p_ge3", "p_ge3_lo", "p_ge3_hi"]
    return cols, rows


def cmd_treescan(cfg) -> Rows:
    from .treescan import pair_survival

    params = _params(cfg)
    r = pair_survival(params, cfg["spacing"], cfg["height"], cfg["n_replicates"])
    cols = ["d", "spacing", "height", "n", "survived", "fraction", "lo", "hi"]
    return cols, [[r.d, r.spacing, r.height, r.N, r.survived.k, r.fraction,
                   r.survived.lo, r.survived.hi]]


def cmd_exact(cfg) -> Rows:
    from .analytic import gamma_exact, sigma2_exact, y_tail

    p = cfg["p"]
    rows: list[list[Any]] = [["y_tail", m, y_tail(p, m)] for m in range(cfg["m_max"] + 1)]
    rows.append(["gamma", "", gamma_exact(p)])
    rows.append(["sigma2", "", sigma2_exact(p)])
    return ["quantity", "m", "value"], rows


COMMANDS: dict[str, Callable[[dict], Rows]] = {
    "trace": cmd_trace,
    "regen": cmd_regen,
    "coalesce": cmd_coalesce,
    "triple": cmd_triple,
    "scaling": cmd_scaling,
    "eta": cmd_eta,
    "treescan": cmd_treescan,
    "exact": cmd_exact,
}


def _plain(v: Any) -> Any:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return v


def render_payload(cols: list[str], rows: list[list[Any]], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_plain(v) for v in r])
    else:
        for r in rows:
            obj = {}
            for c, v in zip(cols, r):
                v = v.item() if isinstance(v, np.generic) else v
                if isinstance(v, float) and not math.isfinite(v):
                    v = None
                obj[c] = v
            buf.write(json.dumps(obj) + "\n")
    return buf.getvalue()


def git_describe() -> str:
    try:
        res = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def metadata_block(cmd: str, cfg: dict[str, Any], wall: float) -> str:
    shown = {k: v for k, v in cfg.items() if k not in ("out", "overwrite", "threads")}
    lines = [
        f"drainage {cmd}",
        f"seed: {cfg['seed']}",
        "config: " + json.dumps(shown, sort_keys=True),
        f"git: {git_describe()}",
        f"wall_time_s: {wall:.3f}",
    ]
    return "".join(f"# {l}\n" for l in lines)


def split_payload(text: str) -> str:
    """The results payload of an output file (metadata lines removed)."""
    return "".join(l for l in text.splitlines(keepends=True) if not l.startswith("#"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drainage", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--d", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n-replicates", dest="n_replicates", type=int)
        sp.add_argument("--height", type=int)
        sp.add_argument("--t-cap", dest="t_cap", type=int)
        sp.add_argument("--max-search-height", dest="max_search_height", type=int)
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--out")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--overwrite", action="store_true", default=None)
        for key, default in COMMAND_DEFAULTS[name].items():
            flag = "--" + key.replace("_", "-")
            typ = int if key in INT_KEYS else float if key in FLOAT_KEYS else str
            sp.add_argument(flag, dest=key, type=typ, help=f"default {default}")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k != "cmd"}
    try:
        cfg = resolve_config(args.cmd, flags)
        from .env import ModelParams

        ModelParams(cfg["d"], cfg["p"], cfg["seed"], cfg["max_search_height"])
    except (ConfigError, ValueError, OSError) as e:
        print(f"drainage: invalid configuration: {e}", file=sys.stderr)
        return 1
    out = cfg["out"]
    if out and Path(out).exists() and not cfg["overwrite"]:
        print(f"drainage: {out} exists; pass --overwrite to replace it", file=sys.stderr)
        return 1
    if cfg["threads"]:
        import numba

        numba.set_num_threads(min(cfg["threads"], numba.config.NUMBA_NUM_THREADS))
    t0 = time.perf_counter()
    try:
        cols, rows = COMMANDS[args.cmd](cfg)
    except ConfigError as e:
        print(f"drainage: invalid configuration: {e}", file=sys.stderr)
        return 1
    except SearchExceeded as e:
        print(f"drainage: search exceeded: {e}", file=sys.stderr)
        return 2
    text = metadata_block(args.cmd, cfg, time.perf_counter() - t0)
    text += render_payload(cols, rows, cfg["format"])
    if out:
        Path(out).write_text(text, newline="")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
