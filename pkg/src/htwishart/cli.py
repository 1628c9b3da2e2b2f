"""Command-line interface: ``htwishart <subcommand> ...``.

Exit codes: 0 success, 1 I/O or numerical failure, 2 invalid parameters
(including moments or integrals that do not exist), 3 when ``mc-verify``
finds a z-score above 3.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimation import GAUGE, estimate_sigma_xi
from .io import dump_json, format_matrix, load_params, params_to_json, read_batches, read_matrix, write_matrix
from .kernels import backend_name
from .model import (
    ExistenceError,
    ModelParams,
    ParameterError,
    log_density_alg,
    log_density_gauss,
    validate_params,
)
from .moments import first_moment, matrix_variance, normalize_model, second_moment
from .montecarlo import Z_LIMIT, verification_table
from .sampling import DEFAULT_CHUNK, GENERATOR_VERSION, RngState, draw_batch
from .special import (
    AomotoParams,
    aomoto_closed,
    aomoto_laguerre_limit,
    ingham_siegel_closed,
    log_phi1,
    log_phi2,
    psi_closed,
)

EXIT_OK, EXIT_IO, EXIT_PARAM, EXIT_MC = 0, 1, 2, 3


class CliError(ParameterError):
    pass


def _add_params(p: argparse.ArgumentParser, need_shape: bool = True) -> None:
    g = p.add_argument_group("model parameters")
    g.add_argument("--params", help="JSON parameter file (K, N, L, M, sigma/xi or sigma_path/xi_path)")
    g.add_argument("--K", type=int)
    g.add_argument("--N", type=int)
    if need_shape:
        g.add_argument("--L", type=float)
        g.add_argument("--M", type=float)
    g.add_argument("--sigma", help="CSV file with Sigma (K x K)")
    g.add_argument("--xi", help="CSV file with Xi (N x N)")
    g.add_argument("--sigma-scalar", type=float, help="Sigma = value * identity")
    g.add_argument("--xi-scalar", type=float, help="Xi = value * identity")


def _add_rng(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("random numbers")
    g.add_argument("--seed", type=int, help="64-bit seed (falls back to $HTW_SEED)")
    g.add_argument("--stream", type=int, default=0, help="stream id")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK)
    g.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htwishart",
                                     description="Heavy-tailed doubly correlated Wishart ensembles")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("sample", help="draw data matrices")
    _add_params(s)
    _add_rng(s)
    s.add_argument("--model", default="gauss")
    s.add_argument("--out", help="file ending in .csv, or a directory (one CSV per draw)")

    m = sub.add_parser("moments", help="closed-form matrix moments")
    _add_params(m)
    m.add_argument("--model", default="alg")
    m.add_argument("--order", default="1", choices=["1", "2", "variance"])
    m.add_argument("--side", default="time", choices=["time", "position"])
    m.add_argument("--format", default="json", choices=["json", "csv"])
    m.add_argument("--out")

    v = sub.add_parser("mc-verify", help="closed forms vs Monte Carlo")
    _add_params(v)
    _add_rng(v)
    v.set_defaults(count=100_000)
    v.add_argument("--out")

    e = sub.add_parser("estimate", help="fit Sigma and Xi to a directory of CSV data matrices")
    e.add_argument("--data", required=True)
    e.add_argument("--L", type=float, required=True)
    e.add_argument("--out")

    sp = sub.add_parser("special", help="special integrals (natural log and value)")
    sp.add_argument("kind", choices=["ingham-siegel", "aomoto", "laguerre", "psi", "phi1", "phi2"])
    _add_params(sp)
    sp.add_argument("--which", choices=["d", "p", "m"], default="d")
    sp.add_argument("--q", type=float)
    sp.add_argument("--R", help="CSV file with R")
    sp.add_argument("--R-scalar", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--gamma", type=float, default=0.5)
    sp.add_argument("--m", type=int, default=0)
    sp.add_argument("--out")

    d = sub.add_parser("density", help="log density of a data matrix")
    _add_params(d)
    d.add_argument("--model", default="alg")
    d.add_argument("--x", required=True, help="CSV file with the K x N data matrix")
    d.add_argument("--out")
    return parser


# --- resolution ---------------------------------------------------------------

def _matrix(path, scalar, dim, name):
    if path is not None and scalar is not None:
        raise CliError(f"give either --{name} or --{name}-scalar, not both")
    if path is not None:
        return read_matrix(path)
    if scalar is not None:
        return scalar * np.eye(dim)
    return None


def resolve_params(args) -> ModelParams:
    if args.params:
        base = load_params(args.params)
        K = args.K if args.K is not None else base.K
        N = args.N if args.N is not None else base.N
        L = getattr(args, "L", None)
        M = getattr(args, "M", None)
        sigma = _matrix(args.sigma, args.sigma_scalar, K, "sigma")
        xi = _matrix(args.xi, args.xi_scalar, N, "xi")
        return ModelParams(K, N, base.L if L is None else L, base.M if M is None else M,
                           base.Sigma if sigma is None else sigma, base.Xi if xi is None else xi)
    if args.K is None or args.N is None:
        raise CliError("--K and --N are required without --params")
    L = getattr(args, "L", None)
    M = getattr(args, "M", None)
    if L is None:
        L = math.inf
    if M is None:
        M = 2.0 * L - 1.0 - (args.K + args.N) if math.isfinite(L) else 1.0
    sigma = _matrix(args.sigma, args.sigma_scalar, args.K, "sigma")
    xi = _matrix(args.xi, args.xi_scalar, args.N, "xi")
    return ModelParams(args.K, args.N, L, M,
                       np.eye(args.K) if sigma is None else sigma,
                       np.eye(args.N) if xi is None else xi)


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HTW_SEED")
    if env is None:
        raise CliError("a seed is required: pass --seed or set HTW_SEED")
    try:
        return int(env)
    except ValueError:
        raise CliError(f"HTW_SEED must be an integer, got {env!r}") from None


def provenance(args, params: ModelParams | None = None, seed=None) -> dict:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    if params is not None:
        config["resolved_params"] = params_to_json(params)
    out = {"subcommand": args.subcommand, "config": config, "seed": seed, "version": __version__}
    if seed is not None:
        out["generator"] = GENERATOR_VERSION
        out["backend"] = backend_name()
    return out


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _emit(report: dict, out) -> None:
    text = dump_json(report, out)
    if out is None:
        sys.stdout.write(text)


# --- subcommands --------------------------------------------------------------

def cmd_sample(args) -> int:
    p = resolve_params(args)
    seed = resolve_seed(args)
    batch = draw_batch(p, args.model, args.count, RngState(seed, args.stream),
                       args.chunk_size, args.threads)
    out = args.out
    if out is None or out.endswith(".csv"):
        idx = np.repeat(np.arange(len(batch)), p.K)[:, None]
        text = format_matrix(np.hstack([idx, batch.X.reshape(-1, p.N)]))
        if out is None:
            sys.stdout.write(text)
        else:
            Path(out).write_text(text)
        return EXIT_OK
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(len(batch) - 1)))
    for i in range(len(batch)):
        write_matrix(d / f"draw_{i:0{width}d}.csv", batch.X[i])
    report = {"provenance": provenance(args, p, seed), "count": len(batch),
              "model": batch.model, "wishart_retries": batch.retries}
    dump_json(report, d / "provenance.json")
    return EXIT_OK


def cmd_moments(args) -> int:
    p = resolve_params(args)
    fn = {"1": first_moment, "2": second_moment, "variance": matrix_variance}[args.order]
    rep = fn(p, args.model, args.side)
    if not rep.exists:
        raise ExistenceError(rep.message, rep.message)
    if args.format == "csv":
        if args.out:
            write_matrix(args.out, rep.matrix)
        else:
            sys.stdout.write(format_matrix(rep.matrix))
        return EXIT_OK
    _emit({**rep.to_dict(), "provenance": provenance(args, p)}, args.out)
    return EXIT_OK


def cmd_mc_verify(args) -> int:
    p = resolve_params(args)
    seed = resolve_seed(args)
    rows = verification_table(p, args.count, RngState(seed, args.stream), args.chunk_size,
                              args.threads)
    ok = all(r["pass"] for r in rows)
    _emit({"rows": rows, "all_pass": ok, "z_limit": Z_LIMIT,
           "provenance": provenance(args, p, seed)}, args.out)
    return EXIT_OK if ok else EXIT_MC


def cmd_estimate(args) -> int:
    batches = read_batches(args.data)
    res = estimate_sigma_xi(batches, args.L, GAUGE)
    _emit({**res.to_dict(), "provenance": provenance(args)}, args.out)
    return EXIT_OK


def _special_value(args) -> float:
    kind = args.kind
    if kind == "ingham-siegel":
        if args.q is None:
            raise CliError("ingham-siegel needs --q")
        if args.R is not None:
            R = read_matrix(args.R)
        elif args.R_scalar is not None and args.N is not None:
            R = args.R_scalar * np.eye(args.N)
        else:
            raise CliError("ingham-siegel needs --R, or --R-scalar with --N")
        return ingham_siegel_closed(args.q, R)
    if kind in ("aomoto", "laguerre"):
        if args.a is None or args.N is None:
            raise CliError(f"{kind} needs --a and --N")
        if kind == "laguerre":
            return aomoto_laguerre_limit(args.a, args.N, args.m)
        if args.b is None:
            raise CliError("aomoto needs --b")
        return aomoto_closed(AomotoParams(args.a, args.b, args.gamma, args.N, args.m))
    if kind == "psi":
        if None in (args.K, args.N, args.L):
            raise CliError("psi needs --K, --N and --L")
        return psi_closed(args.K, args.N, args.L).log(args.which)
    p = resolve_params(args)
    if kind == "phi1":
        return log_phi1(p)
    return list(log_phi2(p))


def cmd_special(args) -> int:
    try:
        logs = _special_value(args)
    except ExistenceError as exc:
        _emit({"kind": args.kind, "value_log": None, "value": None, "exists": False,
               "message": str(exc), "provenance": provenance(args)}, args.out)
        return EXIT_PARAM
    vals = [_safe_exp(v) for v in logs] if isinstance(logs, list) else _safe_exp(logs)
    _emit({"kind": args.kind, "value_log": logs, "value": vals, "exists": True,
           "provenance": provenance(args)}, args.out)
    return EXIT_OK


def cmd_density(args) -> int:
    p = resolve_params(args)
    X = read_matrix(args.x)
    model = normalize_model(args.model)
    logd = log_density_alg(p, X) if model == "algebraic" else log_density_gauss(p, X)
    report = validate_params(p)
    _emit({"model": model, "log_density": logd, "density": _safe_exp(logd),
           "validation": {"density_exists": report.density_exists,
                          "first_moment_exists": report.first_moment_exists,
                          "second_moment_exists": report.second_moment_exists},
           "provenance": provenance(args, p)}, args.out)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "moments": cmd_moments,
    "mc-verify": cmd_mc_verify,
    "estimate": cmd_estimate,
    "special": cmd_special,
    "density": cmd_density,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.subcommand](args)
    except ParameterError as exc:
        print(f"htwishart: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (OSError, ArithmeticError) as exc:
        print(f"htwishart: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
