"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 solver failure,
3 verification failure. Every run writes manifest.json to the output
directory with the resolved parameters and the package version.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SolverError

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# shared helpers


def _lattice(m, N):
    from .lattice import LatticeConfig

    return LatticeConfig(m, N)


def resolve_solution(m: int, N: int, solution_id: str, rotate: bool = False) -> np.ndarray:
    """Coefficient vector of length N+1 for a named matching solution.

    ``positive`` is the positive 6 | m solution at truncation N. A closed-form
    label such as ``N1``, ``N2_1``, ``N3_0`` or ``N4_3`` selects that solution
    at its own truncation and pads it with zeros. ``rotate`` applies the half
    period rotation a_n -> (-1)^n a_n.
    """
    from .continuum import positive_matching_solution
    from .matching import closed_form_solutions, rotate_half_period

    if solution_id == "positive":
        if m % 6:
            raise ValueError("the positive solution needs 6 | m")
        a = positive_matching_solution(N)
    else:
        if not (solution_id.startswith("N") and solution_id[1:2].isdigit()):
            raise ValueError(f"unknown solution id {solution_id!r}")
        n_sol = int(solution_id[1])
        if n_sol > N:
            raise ValueError(f"solution {solution_id} needs N >= {n_sol}")
        sols = {s.label: s.a for s in closed_form_solutions(_lattice(m, n_sol))}
        if solution_id not in sols:
            have = ", ".join(sorted(sols)) or "none"
            raise ValueError(f"no solution {solution_id!r} for m={m}, N={n_sol} (available: {have})")
        a = np.zeros(N + 1)
        a[: n_sol + 1] = sols[solution_id]
    return rotate_half_period(a) if rotate else a


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2))


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"config file {path} not found")
    if path.suffix == ".json":
        return json.loads(path.read_text())
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


GALERKIN_KEYS = {
    "m": None, "N": None, "r_star": None, "T": None, "mu0": None, "gamma": 1.6,
    "solution_id": None, "steps": 100, "step_size": 0.05, "a": None, "rotate": False,
    "beta": None, "beta_scale": 1.0, "direction": 1.0, "tol": 1e-8, "mu_path": [],
    "snapshots": [], "max_corrector": 8,
}


def galerkin_config(raw: dict) -> dict:
    unknown = set(raw) - set(GALERKIN_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = {k: raw.get(k, v) for k, v in GALERKIN_KEYS.items()}
    for k in ("m", "N", "r_star", "mu0"):
        if cfg[k] is None:
            raise ValueError(f"config key {k!r} is required")
    if cfg["a"] is None and cfg["solution_id"] is None:
        raise ValueError("config needs either 'a' or 'solution_id'")
    if cfg["T"] is None:
        cfg["T"] = int(round(3 * cfg["r_star"]))
    return cfg


# subcommands


def cmd_match(args, out: Path) -> tuple[int, list]:
    from .matching import closed_form_solutions, enumerate_solutions

    cfg = _lattice(args.m, args.N)
    enumerate_mode = args.enumerate or args.mode == "enumerate"
    if enumerate_mode:
        sols = enumerate_solutions(cfg, args.starts, seed=args.seed, tol=args.tol)
    else:
        sols = closed_form_solutions(cfg)
    records = [s.to_record(cfg) for s in sols]
    path = out / "solutions.json"
    _write_json(path, records)
    print(json.dumps(records))
    return EXIT_OK, [path]


def cmd_continuum(args, out: Path) -> tuple[int, list]:
    from .continuum import g_residual, solve_continuum

    w = solve_continuum(args.mesh, tol=args.tol)
    res = float(np.max(np.abs(g_residual(w))))
    spline = out / "continuum.csv"
    w.to_csv(spline)
    summary = {"M": w.M, "residual": res, "min": float(np.min(w.values)), "max": float(np.max(w.values))}
    _write_json(out / "continuum.json", summary)
    print(json.dumps(summary))
    return EXIT_OK, [spline, out / "continuum.json"]


def cmd_verify(args, out: Path) -> tuple[int, list]:
    from .verify import certify_continuum

    _, cert = certify_continuum(args.mesh, args.omega, args.r, args.bounds)
    path = out / "certificate.json"
    cert.to_json(path)
    print(json.dumps({"verified": cert.verified, "r": cert.r, "bracket": [cert.to_dict()["r_lo"], cert.to_dict()["r_hi"]],
                      "bounds": cert.bounds, **cert.diagnostics}))
    return (EXIT_OK if cert.verified else EXIT_VERIFY), [path]


def cmd_profile_synth(args, out: Path) -> tuple[int, list]:
    from .profile import ModelParams, synthesize

    a = np.array(args.a, dtype=float) if args.a else resolve_solution(args.m, args.N, args.solution, args.rotate)
    if a.size != args.N + 1:
        raise ValueError(f"need N+1 = {args.N + 1} coefficients, got {a.size}")
    params = ModelParams(k_c=args.k_c, c0=args.c0, gamma=args.gamma, mu=args.mu)
    r = np.linspace(0.0, args.extent * math.sqrt(2.0), args.nr)
    theta = np.linspace(0.0, 2 * math.pi, args.ntheta, endpoint=False)
    grid = synthesize(params, _lattice(args.m, args.N), a, r, theta, core_only=not args.full)
    csv, png = out / "pattern.csv", out / "pattern.png"
    grid.to_csv(csv)
    grid.to_png(png, extent=args.extent, pixels=args.pixels)
    print(json.dumps({"a": a.tolist(), "max": float(np.max(grid.u)), "min": float(np.min(grid.u))}))
    return EXIT_OK, [csv, png]


def cmd_profile_triple(args, out: Path) -> tuple[int, list]:
    from .profile import triple_product_check, truncation_envelope

    numeric, exact = triple_product_check(args.m, args.a, args.b, args.r_max)
    rec = {"m": args.m, "a": args.a, "b": args.b, "r_max": args.r_max, "numeric": numeric,
           "exact": exact, "error": abs(numeric - exact),
           "envelope": truncation_envelope(args.m, args.a, args.b, args.r_max)}
    path = out / "triple.json"
    _write_json(path, rec)
    print(json.dumps(rec))
    return EXIT_OK, [path]


def _write_field(path: Path, mesh, V) -> None:
    data = np.column_stack([mesh.r, np.asarray(V).T])
    header = "r," + ",".join(f"v_{n}" for n in range(V.shape[0]))
    np.savetxt(path, data, delimiter=",", header=header, comments="")


def _galerkin_start(cfg: dict):
    from .galerkin import GalerkinProblem, RadialMesh, SheParams, newton_solve
    from .profile import ModelParams, initial_guess

    lat = _lattice(cfg["m"], cfg["N"])
    mesh = RadialMesh(float(cfg["r_star"]), int(cfg["T"]))
    if cfg["a"] is not None:
        a = np.array(cfg["a"], dtype=float)
        if cfg["rotate"]:
            a = a * np.where(np.arange(a.size) % 2, -1.0, 1.0)
    else:
        a = resolve_solution(cfg["m"], cfg["N"], cfg["solution_id"], cfg["rotate"])
    if a.size != cfg["N"] + 1:
        raise ValueError(f"need N+1 = {cfg['N'] + 1} coefficients, got {a.size}")
    mu0, gamma = float(cfg["mu0"]), float(cfg["gamma"])
    mp = ModelParams(gamma=gamma, mu=mu0)
    beta = cfg["beta"] if cfg["beta"] is not None else cfg["beta_scale"] * mp.core_scale
    V0 = initial_guess(mp, lat, a, mesh, beta)
    P = GalerkinProblem(mesh, lat)
    V = newton_solve(mesh, lat, SheParams(mu0, gamma), V0, cfg["tol"], problem=P)
    return lat, mesh, P, V, a, beta


def cmd_galerkin_solve(args, out: Path) -> tuple[int, list]:
    from .galerkin import SheParams, amplitude_diagnostic, field_norm, natural_descent

    cfg = galerkin_config(load_config(args.config))
    lat, mesh, P, V, a, beta = _galerkin_start(cfg)
    path = natural_descent(mesh, lat, SheParams(cfg["mu0"], cfg["gamma"]), V, cfg["mu_path"],
                           tol=cfg["tol"], problem=P)
    outputs, summary = [], []
    for i, (mu, Vi) in enumerate(path):
        f = out / f"field_{i:03d}.csv"
        _write_field(f, mesh, Vi)
        outputs.append(f)
        rec = {"mu": mu, "norm": field_norm(Vi, mesh),
               "residual": float(np.max(np.abs(P.residual(Vi, SheParams(mu, cfg["gamma"])))))}
        if mu > 0:
            rec["amplitudes"] = amplitude_diagnostic(mesh, lat, SheParams(mu, cfg["gamma"]), Vi).tolist()
        summary.append(rec)
    _write_json(out / "solve.json", {"a": a.tolist(), "beta": beta, "points": summary})
    outputs.append(out / "solve.json")
    print(json.dumps(summary[-1]))
    return EXIT_OK, outputs


def cmd_galerkin_continue(args, out: Path) -> tuple[int, list]:
    from .galerkin import SheParams, secant_continue

    cfg = galerkin_config(load_config(args.config))
    lat, mesh, P, V, a, beta = _galerkin_start(cfg)
    snaps = [float(s) for s in cfg["snapshots"]]
    branch = secant_continue(mesh, lat, SheParams(cfg["mu0"], cfg["gamma"]), V,
                             n_steps=int(cfg["steps"]), step=float(cfg["step_size"]),
                             direction=float(cfg["direction"]), tol=cfg["tol"],
                             max_corrector=int(cfg["max_corrector"]), keep_fields=bool(snaps))
    path = out / "branch.csv"
    branch.to_csv(path)
    outputs = [path]
    for s in snaps:
        i = int(np.argmin(np.abs(branch.mu - s)))
        f = out / f"snapshot_mu_{s:g}.csv"
        _write_field(f, mesh, branch.points[i].V)
        outputs.append(f)
    summary = {"points": len(branch.points), "folds": branch.folds(), "failures": branch.failures,
               "mu_range": [float(branch.mu.min()), float(branch.mu.max())], "beta": beta}
    _write_json(out / "continue.json", summary)
    outputs.append(out / "continue.json")
    print(json.dumps(summary))
    return EXIT_OK, outputs


# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dihedral", description="Localised dihedral patterns toolkit.")
    p.add_argument("--out-dir", default=".", help="directory for outputs and manifest.json")
    p.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP threads")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("match", help="fixed points of the matching map")
    m.add_argument("mode", nargs="?", choices=("solve", "enumerate"), default="solve")
    m.add_argument("--m", type=int, required=True)
    m.add_argument("--N", type=int, required=True)
    g = m.add_mutually_exclusive_group()
    g.add_argument("--closed-form", action="store_true", help="closed-form solutions (N <= 4)")
    g.add_argument("--enumerate", action="store_true", help="multi-start Newton search")
    m.add_argument("--starts", type=int, default=200)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--tol", type=float, default=1e-12)
    m.set_defaults(func=cmd_match)

    c = sub.add_parser("continuum", help="continuum matching equation")
    csub = c.add_subparsers(dest="action", required=True)
    cs = csub.add_parser("solve")
    cs.add_argument("--mesh", type=int, default=1000, help="number of mesh segments M")
    cs.add_argument("--tol", type=float, default=1e-12)
    cs.set_defaults(func=cmd_continuum)

    v = sub.add_parser("verify", help="computer-assisted verification")
    vsub = v.add_subparsers(dest="action", required=True)
    vr = vsub.add_parser("radii")
    vr.add_argument("--omega", type=float, default=0.02)
    vr.add_argument("--mesh", type=int, default=1000)
    vr.add_argument("--r", type=float, default=1e-3)
    vr.add_argument("--bounds", choices=("standard", "corrected"), default="standard")
    vr.set_defaults(func=cmd_verify)

    pr = sub.add_parser("profile", help="leading-order profiles")
    psub = pr.add_subparsers(dest="action", required=True)
    ps = psub.add_parser("synth")
    ps.add_argument("--m", type=int, required=True)
    ps.add_argument("--N", type=int, required=True)
    ps.add_argument("--solution", default="N1", help="closed-form label or 'positive'")
    ps.add_argument("--a", type=float, nargs="+", help="explicit coefficients a_0..a_N")
    ps.add_argument("--rotate", action="store_true")
    ps.add_argument("--mu", type=float, default=0.01)
    ps.add_argument("--gamma", type=float, default=1.6)
    ps.add_argument("--k-c", type=float, default=1.0)
    ps.add_argument("--c0", type=float, default=0.25)
    ps.add_argument("--extent", type=float, default=30.0)
    ps.add_argument("--nr", type=int, default=300)
    ps.add_argument("--ntheta", type=int, default=360)
    ps.add_argument("--pixels", type=int, default=400)
    ps.add_argument("--full", action="store_true", help="three-region profile instead of the core formula")
    ps.set_defaults(func=cmd_profile_synth)
    pt = psub.add_parser("triple")
    pt.add_argument("--m", type=int, required=True)
    pt.add_argument("--a", type=int, required=True)
    pt.add_argument("--b", type=int, required=True)
    pt.add_argument("--r-max", type=float, default=5000.0)
    pt.set_defaults(func=cmd_profile_triple)

    ga = sub.add_parser("galerkin", help="radial Galerkin solver")
    gsub = ga.add_subparsers(dest="action", required=True)
    for name, func in (("solve", cmd_galerkin_solve), ("continue", cmd_galerkin_continue)):
        q = gsub.add_parser(name)
        q.add_argument("--config", required=True, help="TOML or JSON run configuration")
        q.set_defaults(func=func)
    return p


def _manifest(args, argv, outputs, code, error=None) -> dict:
    params = {k: v for k, v in vars(args).items() if k != "func"}
    if getattr(args, "config", None):
        try:
            params["config_resolved"] = galerkin_config(load_config(args.config))
        except (ValueError, OSError):
            pass
    return {
        "command": " ".join(str(x) for x in [args.command, getattr(args, "action", None)] if x),
        "argv": list(argv),
        "args": params,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "exit_code": code,
        "error": error,
        "outputs": [str(p) for p in outputs],
    }


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.threads is not None:
        from threadpoolctl import threadpool_limits

        limits = threadpool_limits(limits=args.threads)
    else:
        limits = nullcontext()
    outputs, error = [], None
    with limits:
        try:
            code, outputs = args.func(args, out)
        except SolverError as exc:
            code, error = EXIT_SOLVER, f"{type(exc).__name__}: {exc}"
        except (ValueError, OSError) as exc:
            code, error = EXIT_USAGE, f"{type(exc).__name__}: {exc}"
    if error:
        print(f"dihedral: {error}", file=sys.stderr)
    _write_json(out / "manifest.json", _manifest(args, argv, outputs, code, error))
    return code


if __name__ == "__main__":
    sys.exit(main())
