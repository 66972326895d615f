"""Command-line front end.

Subcommands:

    solve       read a config file, run the solver, dump artifacts
    baseline    sanity-check the zero-differential metric on a patch
    identities  run the exact identity suite and the AM-GM sampler
    verify      re-run the post-solve battery on a dumped run directory

Exit codes: 0 all checks pass, 1 a check failed, 2 bad usage or config,
3 solver did not converge.

Config files are flat key=value text.  Recognized keys: n, R, grid, mode,
tol, max_iter, and q2 ... qn; differential values are semicolon-separated
"re,im" coefficient pairs, constant term first.  Blank lines and #-comments
are ignored.  All floats are written back with 17 significant digits so a
dump->parse->dump cycle is byte-identical.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .complex_field import (
    ConfigurationError,
    liouville_residual,
    make_patch,
    read_field_csv,
    write_field_csv,
)
from .harmonic_geometry import energy_density, pullback_and_hopf, splitting_metrics
from .hitchin_solver import (
    MetricState,
    SolveConfig,
    assemble_phi,
    fuchsian_baseline,
    residual,
    solve,
)
from .lie_algebra import DifferentialTuple
from .verification import check_amgm_chain, check_identities, check_solution

__all__ = ["run", "main", "parse_config", "build_solve_config", "serialize_config"]

_SCALAR_KEYS = ("n", "R", "grid", "mode", "tol", "max_iter")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse_config(text: str) -> dict[str, str]:
    """Flat key=value lines -> dict of raw strings."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"config line {lineno}: expected key=value, got {stripped!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in raw:
            raise ConfigurationError(f"config line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def _parse_poly(value: str, key: str) -> tuple[complex, ...]:
    if not value:
        return ()
    coeffs = []
    for chunk in value.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigurationError(f"{key}: expected re,im pairs, got {chunk!r}")
        try:
            coeffs.append(complex(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigurationError(f"{key}: {exc}") from exc
    return tuple(coeffs)


def build_solve_config(raw: dict[str, str], **overrides) -> SolveConfig:
    if "n" not in raw:
        raise ConfigurationError("config is missing required key 'n'")
    try:
        n = int(raw["n"])
    except ValueError as exc:
        raise ConfigurationError(f"n: {exc}") from exc

    known = set(_SCALAR_KEYS) | {f"q{j}" for j in range(2, max(n, 2) + 1)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unrecognized config keys: {sorted(unknown)}")

    polys = [_parse_poly(raw.get(f"q{j}", ""), f"q{j}") for j in range(2, n + 1)]
    kwargs = dict(
        n=n,
        differentials=DifferentialTuple(n, polys),
        R=float(raw.get("R", 0.5)),
        N=int(raw.get("grid", 64)),
        mode=raw.get("mode", "full"),
        tol=float(raw.get("tol", 1e-8)),
        max_iter=int(raw.get("max_iter", 50)),
    )
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    try:
        return SolveConfig(**kwargs)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def serialize_config(config: SolveConfig) -> str:
    lines = [
        f"n = {config.n}",
        f"R = {_fmt(config.R)}",
        f"grid = {config.N}",
        f"mode = {config.mode}",
        f"tol = {_fmt(config.tol)}",
        f"max_iter = {config.max_iter}",
    ]
    for j, poly in zip(range(2, config.n + 1), config.differentials.polys):
        if poly:
            value = ";".join(f"{_fmt(c.real)},{_fmt(c.imag)}" for c in poly)
            lines.append(f"q{j} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------

def _report_text(report, geo, checks) -> str:
    lines = ["[solver]"]
    lines.append(f"mode = {report.mode}")
    lines.append(f"n = {report.n}")
    lines.append(f"grid = {report.N}")
    lines.append(f"R = {_fmt(report.R)}")
    lines.append(f"tol = {_fmt(report.tol)}")
    lines.append(f"termination = {report.termination}")
    lines.append(f"newton_iterations = {report.newton_iterations}")
    lines.append(f"fallback_sweeps = {report.fallback_sweeps}")
    if report.residual_history:
        lines.append(f"residual_initial = {_fmt(report.residual_history[0])}")
        lines.append(f"residual_final = {_fmt(report.residual_history[-1])}")
    lines.append(f"trace_rel_max = {_fmt(report.trace_rel_max)}")
    lines.append(f"herm_rel_max = {_fmt(report.herm_rel_max)}")
    lines.append(f"wall_time_s = {report.wall_time:.3f}")
    if geo is not None:
        lines.append("")
        lines.append("[geometry]")
        lines.append(f"e_min = {_fmt(geo.e_min)}")
        lines.append(f"e_max = {_fmt(geo.e_max)}")
        lines.append(f"hopf_sup = {_fmt(geo.hopf_sup)}")
        lines.append(f"energy_integral = {_fmt(geo.energy_integral)}")
    if checks:
        lines.append("")
        lines.append("[checks]")
        lines.extend(str(c) for c in checks)
    return "\n".join(lines) + "\n"


def _dump_run(outdir: Path, config: SolveConfig, state: MetricState, report, patch, baseline, phi) -> list:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.txt").write_text(serialize_config(config))

    checks = []
    geo = None
    if state.converged:
        split = splitting_metrics(state.H, patch, baseline)
        geo = pullback_and_hopf(phi, state.H, patch)
        checks = check_solution(state, phi, patch, baseline=baseline)
        write_field_csv(outdir / "energy.csv", "energy", geo.e.astype(complex), patch, config.n)
        write_field_csv(outdir / "hopf.csv", "hopf", geo.hopf, patch, config.n)
        for k in range(1, config.n):
            write_field_csv(
                outdir / f"v{k}.csv", f"v{k}", split.v[..., k - 1].astype(complex),
                patch, config.n,
            )
    for a in range(state.S.shape[-2]):
        for b in range(state.S.shape[-1]):
            if b < a:
                continue
            write_field_csv(
                outdir / f"S_{a}{b}.csv", f"S_{a}{b}", state.S[..., a, b], patch, config.n
            )
    (outdir / "report.txt").write_text(_report_text(report, geo, checks))
    return checks


def _cmd_solve(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 2
    config = build_solve_config(
        parse_config(path.read_text()), tol=args.tol, max_iter=args.max_iter
    )
    state, report = solve(config)
    patch = make_patch(config.R, config.N)
    baseline = fuchsian_baseline(config.n, patch)
    phi = assemble_phi(config.differentials, patch)
    checks = _dump_run(Path(args.output), config, state, report, patch, baseline, phi)
    print(f"termination: {report.termination} after {report.iterations} iterations "
          f"({report.wall_time:.2f}s), final residual {report.residual_history[-1]:.3e}")
    for c in checks:
        print(f"  {c}")
    if not state.converged:
        return 3
    return 0 if all(c.passed for c in checks) else 1


def _cmd_baseline(args) -> int:
    patch = make_patch(args.R, args.grid)
    baseline = fuchsian_baseline(args.n, patch)
    phi = assemble_phi(DifferentialTuple.zero(args.n), patch)

    sup_res = float(np.abs(residual(baseline.H, phi, patch, baseline)).max())
    e = energy_density(phi, baseline.H, patch)
    e_err = float(np.abs(e - 1.0).max())
    liouville = liouville_residual(patch)
    det_err = float(np.abs(np.linalg.det(baseline.H) - 1.0).max())

    from .verification import CheckResult

    checks = [
        CheckResult.from_measurement("baseline-residual", sup_res, 1e-8),
        CheckResult.from_measurement("baseline-energy", e_err, 1e-8),
        CheckResult.from_measurement("baseline-unimodular", det_err, 1e-12),
        CheckResult.from_measurement("liouville-interior", liouville, 25.0 * patch.spacing),
    ]
    print(f"baseline n={args.n} grid={args.grid} R={_fmt(args.R)}")
    for c in checks:
        print(f"  {c}")
    return 0 if all(c.passed for c in checks) else 1


def _cmd_identities(args) -> int:
    checks = check_identities(args.n_max, samples=args.samples)
    checks += [check_amgm_chain(n, args.samples) for n in range(2, args.n_max + 1)]
    for c in checks:
        print(f"  {c}")
    return 0 if all(c.passed for c in checks) else 1


def _cmd_verify(args) -> int:
    indir = Path(args.input)
    report_path = indir / "report.txt"
    config_path = indir / "config.txt"
    if not report_path.is_file() or not config_path.is_file():
        print(f"error: {indir} does not look like a run directory", file=sys.stderr)
        return 2
    config = build_solve_config(parse_config(config_path.read_text()))
    termination = None
    for line in report_path.read_text().splitlines():
        if line.startswith("termination"):
            termination = line.split("=", 1)[1].strip()
    if termination != "converged":
        print(f"run did not converge (termination: {termination})", file=sys.stderr)
        return 3

    patch = make_patch(config.R, config.N)
    baseline = fuchsian_baseline(config.n, patch)
    phi = assemble_phi(config.differentials, patch)
    S = np.zeros(patch.g0.shape + (config.n, config.n), dtype=complex)
    for a in range(config.n):
        for b in range(a, config.n):
            _, field, meta = read_field_csv(indir / f"S_{a}{b}.csv")
            if (meta["n"], meta["N"]) != (config.n, config.N):
                raise ConfigurationError(f"S_{a}{b}.csv does not match config.txt")
            S[..., a, b] = field
            if b > a:
                S[..., b, a] = np.conj(field)
    H = baseline.sqrt_h[..., None] * _expm(S) * baseline.sqrt_h[..., None, :]
    state = MetricState(S=S, H=H, mode=config.mode, converged=True)
    checks = check_solution(state, phi, patch, baseline=baseline)
    for c in checks:
        print(f"  {c}")
    return 0 if all(c.passed for c in checks) else 1


def _expm(S):
    from .hitchin_solver import _expm_hermitian

    return _expm_hermitian(S)


def run(argv) -> int:
    parser = argparse.ArgumentParser(
        prog="hitchinlab",
        description="harmonic metrics for Higgs bundles in the Hitchin section, "
        "on a hyperbolic coordinate patch",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve for the harmonic metric of a config")
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--tol", type=float, default=None, help="override config tolerance")
    p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p.add_argument("--output", default="run", help="directory for dumps (default: run)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("baseline", help="check the zero-differential metric")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("identities", help="exact identity suite + AM-GM sampler")
    p.add_argument("--n-max", type=int, default=8, dest="n_max")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=_cmd_identities)

    p = sub.add_parser("verify", help="re-run the battery on a dumped run directory")
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_verify)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
