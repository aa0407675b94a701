"""Command-line front end.

Subcommands emit tables as CSV (17 significant digits) or JSON (columns as
arrays plus a ``meta`` object). Exit codes: 0 success, 2 invalid input,
3 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import applications as app
from . import asymptotics as asy
from . import iasolver as ia
from .nystrom import ResolutionError, eigenfunction_at, reference_spectrum
from .operators import KernelSpec
from .sampler import kl_sample

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 2, 3


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = "fbm"
    hurst: float = 0.75
    n_max: int = 10
    grid: int = 2000
    eps: list = field(default_factory=list)
    t_grid: list = field(default_factory=list)
    gain: float = 1.0
    modes: int = 200
    count: int = 1000
    seed: int = 0
    points: int = 101
    format: str = "csv"
    out: str | None = None

    def validate(self):
        if self.model not in ("fbm", "fbn"):
            raise ValidationError("model must be 'fbm' or 'fbn'")
        if not 0.0 < self.hurst < 1.0:
            raise ValidationError("hurst must lie in (0, 1)")
        if self.model == "fbn" and self.hurst == 0.5:
            raise ValidationError("the noise model needs hurst != 0.5")
        if self.n_max < 1:
            raise ValidationError("n-max must be at least 1")
        if self.command in ("eigs", "eigfun") and self.grid < 8 * self.n_max:
            raise ValidationError(f"grid must be at least 8*n-max = {8 * self.n_max}")
        if any(not e > 0 for e in self.eps):
            raise ValidationError("eps values must be positive")
        if any(not t > 0 for t in self.t_grid):
            raise ValidationError("T values must be positive")
        if not self.gain > 0:
            raise ValidationError("gain must be positive")
        if self.modes < 1 or self.count < 1 or self.points < 2:
            raise ValidationError("modes, count and points must be positive")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")
        if self.format not in ("csv", "json"):
            raise ValidationError("format must be csv or json")
        return self


# ---------------------------------------------------------------------------
# commands: each returns (columns, meta)


def _exact(model, n, H):
    if model == "fbm":
        return ia.solve_nu_fbm(n, H)
    return ia.solve_fbn(n, H)


def cmd_eigs(cfg: RunConfig):
    H, nmax = cfg.hurst, cfg.n_max
    k = KernelSpec.for_model(cfg.model, H)
    spec = reference_spectrum(k, cfg.grid, nmax, strict=False)
    est = asy.estimate_fbm if cfg.model == "fbm" else asy.estimate_fbn
    cols = {c: [] for c in ("n", "nu_first", "nu_second", "lambda_first", "lambda_second",
                            "lambda_iasolver", "lambda_nystrom", "rel_err_first_pct",
                            "rel_err_second_pct", "nu_iasolver")}
    for n in range(1, nmax + 1):
        e1, e2 = est(n, H, "first"), est(n, H, "second")
        sol = _exact(cfg.model, n, H)
        lam = sol.lam
        cols["n"].append(n)
        cols["nu_first"].append(e1.nu)
        cols["nu_second"].append(e2.nu)
        cols["lambda_first"].append(e1.lam)
        cols["lambda_second"].append(e2.lam)
        cols["lambda_iasolver"].append(lam)
        cols["lambda_nystrom"].append(float(spec.eigenvalues[n - 1]))
        cols["rel_err_first_pct"].append(100.0 * (lam - e1.lam) / lam)
        cols["rel_err_second_pct"].append(100.0 * (lam - e2.lam) / lam)
        cols["nu_iasolver"].append(sol.nu)
    return cols, {"n_reliable": spec.n_reliable, "grid": cfg.grid}


def cmd_eigfun(cfg: RunConfig):
    H = cfg.hurst
    x = np.linspace(0.0, 1.0, cfg.points)
    k = KernelSpec.for_model(cfg.model, H)
    spec = reference_spectrum(k, cfg.grid, cfg.n_max, strict=False)
    asym = asy.eigfun_fbm if cfg.model == "fbm" else asy.eigfun_fbn
    cols = {c: [] for c in ("n", "x", "phi_asymptotic", "phi_iasolver", "phi_nystrom")}
    for n in range(1, cfg.n_max + 1):
        a = asym(n, H, x) if not (cfg.model == "fbm" and H == 0.5) else \
            math.sqrt(2.0) * np.sin((n - 0.5) * math.pi * x)
        sol = _exact(cfg.model, n, H)
        ef = ia.eigenfunction_fbm(sol) if cfg.model == "fbm" else ia.eigenfunction_fbn(sol)
        e = ef(x, normalized=True)
        e = e if np.dot(e, a) >= 0 else -e
        if n <= spec.n_reliable and cfg.model == "fbm":
            ny = eigenfunction_at(spec, n, x)
            ny = ny if np.dot(ny, a) >= 0 else -ny
        else:
            ny = np.full_like(x, np.nan)
        cols["n"] += [n] * x.size
        cols["x"] += list(x)
        cols["phi_asymptotic"] += list(a)
        cols["phi_iasolver"] += list(e)
        cols["phi_nystrom"] += list(ny)
    return cols, {"n_reliable": spec.n_reliable}


def cmd_smallball(cfg: RunConfig):
    sb = app.small_ball(cfg.hurst, max(100, cfg.n_max))
    cols = {"H": [sb.H], "beta": [sb.beta], "gamma": [sb.gamma], "C_d": [sb.C_d],
            "C_d_error": [sb.C_d_error], "n_used": [sb.n_used]}
    return cols, {}


def cmd_perturbed(cfg: RunConfig):
    H = cfg.hurst
    if not H > 0.5:
        raise ValidationError("the perturbed problem needs hurst > 0.5")
    eps = np.array(cfg.eps or [1e-2, 1e-3, 1e-4, 1e-5])
    k = KernelSpec.for_model("fbn", H)
    d = [app.solve_perturbed(k, float(e)).diagnostics for e in eps]
    l2 = np.array([v["l2_error"] for v in d])
    ep = np.array([v["endpoint_value"] for v in d])
    av = np.array([v["average"] for v in d])
    if eps.size >= 2:
        s_l2, s_ep = app._slope(eps, l2), app._slope(eps, ep)
    else:
        s_l2 = s_ep = float("nan")
    expected = (1.0 - H) / (2.0 * H - 1.0) if H > 2.0 / 3.0 else 1.0
    n = eps.size
    cols = {"eps": list(eps), "l2_error": list(l2), "endpoint_value": list(ep),
            "average": list(av), "l2_slope": [s_l2] * n, "endpoint_slope": [s_ep] * n,
            "expected_l2_slope": [expected] * n}
    return cols, {"u0_norm": math.sqrt(app.u0_norm_sq(H))}


def cmd_filter(cfg: RunConfig):
    H, a = cfg.hurst, cfg.gain
    T = cfg.t_grid or [1.0, 10.0, 100.0, 1e3, 1e4]
    r = app.filtering_error(H, a, T)
    hs = np.linspace(0.01, 0.99, 99)
    worst = float(hs[np.argmax([app.P_inf(h, a) for h in hs])])
    n = len(T)
    nan = [float("nan")] * n
    cols = {"T": list(r.T), "P_T": list(r.P_T), "P_inf": [r.P_inf] * n,
            "tail_fraction": list(r.tail_fraction),
            "bracket": list(r.bracket) if r.bracket is not None else nan,
            "bracket_derivative": list(r.bracket_derivative) if r.bracket is not None else nan,
            "H_worst": [worst] * n}
    return cols, {"H_worst": worst, "near_worst": abs(H - worst) <= 0.01}


def cmd_sample(cfg: RunConfig):
    if cfg.model != "fbm":
        raise ValidationError("sampling is implemented for fbm")
    t = np.linspace(0.0, 1.0, cfg.points)
    s = kl_sample(cfg.hurst, cfg.modes, t, cfg.count, cfg.seed, N=cfg.grid)
    cols = {"t": list(t)}
    for i in range(s.count):
        cols[f"path_{i}"] = list(s.paths[i])
    return cols, {"n_nystrom": s.n_nystrom, "seed": s.seed, "modes": s.n_modes}


COMMANDS = {"eigs": cmd_eigs, "eigfun": cmd_eigfun, "smallball": cmd_smallball,
            "perturbed": cmd_perturbed, "filter": cmd_filter, "sample": cmd_sample}


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def render(cols: dict, meta: dict, fmt: str) -> str:
    if fmt == "json":
        def conv(v):
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (float, np.floating)):
                return None if not math.isfinite(v) else float(v)
            if isinstance(v, np.bool_):
                return bool(v)
            return v
        data = {"columns": {k: [conv(x) for x in v] for k, v in cols.items()},
                "meta": {k: conv(v) for k, v in meta.items()}}
        return json.dumps(data, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    names = list(cols)
    w.writerow(names)
    for row in zip(*(cols[k] for k in names)):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _floats(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbmspec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--model", default="fbm")
        s.add_argument("--hurst", type=float, default=0.75)
        s.add_argument("--n-max", type=int, default=10)
        s.add_argument("--grid", type=int, default=2000)
        s.add_argument("--eps", type=_floats, default=[])
        s.add_argument("--t-grid", type=_floats, default=[])
        s.add_argument("--gain", type=float, default=1.0)
        s.add_argument("--modes", type=int, default=200)
        s.add_argument("--count", type=int, default=1000)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--points", type=int, default=101)
        s.add_argument("--format", default="csv")
        s.add_argument("--out", default=None)
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    cfg = RunConfig(**{k.replace("-", "_"): v for k, v in vars(args).items()})
    try:
        cfg.validate()
        cols, meta = COMMANDS[cfg.command](cfg)
    except (ValidationError, ResolutionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ia.ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    text = render(cols, meta, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
