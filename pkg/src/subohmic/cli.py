r"""Command-line front end: solve, sweep, locate and characterize the transition.

Commands map one-to-one onto library operations and emit plot-ready CSV for
tables or JSON for scalar records.  Output is deterministic: no timestamps,
fixed column order, repeatable float formatting; files are written
atomically (temp file + rename).  Energies are reported in units of
``delta`` and frequencies in units of ``omega_c`` unless ``--raw-units`` is
given.

Exit codes: 0 success, 2 domain error, 3 numerical non-convergence,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import BracketError, ConvergenceError, DomainError
from .model import ModelParams
from .variational import minimize_energy

_SCHEMA_VERSION = "1"

_COMMANDS = ("solve", "sweep", "critical", "phase-diagram", "chain", "oracle", "exponents")

_CONFIG_KEYS = {
    "s": float,
    "alpha": float,
    "delta": float,
    "omega_c": float,
    "alpha_grid": str,
    "s_grid": str,
    "omega_c_list": str,
    "n_sites": int,
    "n_modes": int,
    "n_boson": int,
    "basis": str,
    "functional": str,
    "frame": str,
    "occupations": bool,
    "window": str,
    "points_per_side": int,
    "output": str,
    "format": str,
    "threads": int,
    "raw_units": bool,
}


@dataclass
class RunConfig:
    """One fully resolved invocation: a command plus its parameters."""

    command: str
    options: dict = field(default_factory=dict)

    def params(self) -> ModelParams:
        missing = [k for k in ("s", "delta", "omega_c") if self.options.get(k) is None]
        if missing:
            raise DomainError(f"missing required parameter(s): {', '.join(missing)}")
        return ModelParams(
            s=self.options["s"],
            alpha=self.options.get("alpha") or 0.0,
            delta=self.options["delta"],
            omega_c=self.options["omega_c"],
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(64)


def load_config(path: str | Path) -> dict:
    """Parse the line-oriented ``key = value`` config format.

    Blank lines and ``#`` comments are ignored; unknown keys and malformed
    lines are errors that name the offending line number.
    """
    out: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
        caster = _CONFIG_KEYS[key]
        try:
            if caster is bool:
                if value.lower() in ("true", "1", "yes"):
                    out[key] = True
                elif value.lower() in ("false", "0", "no"):
                    out[key] = False
                else:
                    raise ValueError(value)
            else:
                out[key] = caster(value)
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from exc
    return out


def _parse_grid(spec: str) -> np.ndarray:
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as exc:
        raise DomainError(f"bad grid spec {spec!r}, expected lo:hi:n") from exc
    if n < 1 or hi < lo:
        raise DomainError(f"bad grid spec {spec!r}")
    return np.linspace(lo, hi, n)


def _parse_list(spec: str) -> list[float]:
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise DomainError(f"bad list spec {spec!r}, expected comma-separated numbers") from exc


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".12g")


def _json_value(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _sanitize_record(record: dict) -> dict:
    out = {}
    nonfinite = False
    for key, value in record.items():
        if isinstance(value, float) and not math.isfinite(value):
            nonfinite = True
        out[key] = _json_value(value)
    out["schema_version"] = _SCHEMA_VERSION
    out["has_nonfinite"] = nonfinite
    return out


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, output: str | None) -> None:
    if output:
        _write_atomic(Path(output), text)
    else:
        sys.stdout.write(text)


def _csv_text(table_name: str, header: Sequence[str], rows) -> str:
    lines = [f"# subohmic {__version__} {table_name} schema_version={_SCHEMA_VERSION}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_float(x) if isinstance(x, float) else str(x)
                              for x in row))
    return "\n".join(lines) + "\n"


def _json_text(record: dict) -> str:
    return json.dumps(_sanitize_record(record), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _cmd_solve(cfg: RunConfig) -> str:
    p = cfg.params()
    raw = cfg.options.get("raw_units", False)
    functional = cfg.options.get("functional") or "exact"
    sol = minimize_energy(p, functional=functional)
    e_unit = 1.0 if raw else p.delta
    w_unit = 1.0 if raw else p.omega_c
    record = {
        "command": "solve",
        "s": p.s, "alpha": p.alpha, "delta": p.delta, "omega_c": p.omega_c,
        "functional": functional,
        "raw_units": bool(raw),
        "M": sol.sz,
        "energy": sol.energy / e_unit,
        "sx": sol.sx,
        "entanglement": sol.entanglement,
        "delta_tilde": sol.state.delta_tilde / e_unit,
        "crossover_scale": sol.crossover_scale / w_unit,
        "occupation_finite": sol.occupation_finite,
        "theory_valid": p.theory_valid,
    }
    _emit(_json_text(record), cfg.options.get("output"))
    print(f"solve: M={_format_float(sol.sz)} energy/delta={_format_float(sol.energy / p.delta)} "
          f"sx={_format_float(sol.sx)}")
    return "ok"


def _cmd_sweep(cfg: RunConfig) -> str:
    from .critical import sweep_alpha

    p = cfg.params()
    grid_spec = cfg.options.get("alpha_grid")
    if not grid_spec:
        raise DomainError("sweep: --alpha-grid lo:hi:n is required")
    alphas = _parse_grid(grid_spec)
    threads = cfg.options.get("threads") or 1
    functional = cfg.options.get("functional") or "exact"
    raw = cfg.options.get("raw_units", False)
    e_unit = 1.0 if raw else p.delta
    table = sweep_alpha(p.s, p.delta, p.omega_c, alphas,
                        functional=functional, threads=threads)
    rows = [
        (float(a), float(m), float(sx), float(ent), float(e / e_unit), float(c1 / e_unit))
        for a, m, sx, ent, e, c1 in table.rows()
    ]
    _emit(_csv_text("sweep", ["alpha", "M", "sx", "entanglement", "energy", "c1"], rows),
          cfg.options.get("output"))
    n_loc = int(np.sum(table.m > 1e-6))
    print(f"sweep: {len(rows)} rows, {n_loc} localized, {len(table.failures)} failures")
    return "ok"


def _cmd_critical(cfg: RunConfig) -> str:
    from .critical import critical_point

    p = cfg.params()
    functional = cfg.options.get("functional") or "exact"
    cp = critical_point(p.s, p.delta, p.omega_c, functional=functional)
    record = {
        "command": "critical",
        "s": cp.s, "delta": cp.delta, "omega_c": cp.omega_c,
        "functional": functional,
        "alpha_c_numeric": cp.alpha_c_numeric,
        "alpha_c_closed": cp.alpha_c_closed,
        "ratio_numeric_to_closed": cp.ratio,
        "delta_tilde_c": cp.delta_tilde_c / (1.0 if cfg.options.get("raw_units") else cp.delta),
        "sx_c": cp.sx_c,
    }
    _emit(_json_text(record), cfg.options.get("output"))
    print(f"critical: alpha_c_numeric={_format_float(cp.alpha_c_numeric)} "
          f"alpha_c_closed={_format_float(cp.alpha_c_closed)} "
          f"ratio={_format_float(cp.ratio)}")
    return "ok"


def _cmd_phase_diagram(cfg: RunConfig) -> str:
    from .critical import phase_diagram

    s_spec = cfg.options.get("s_grid")
    wc_spec = cfg.options.get("omega_c_list")
    delta = cfg.options.get("delta")
    if not s_spec or not wc_spec or delta is None:
        raise DomainError("phase-diagram: --s-grid, --omega-c-list and --delta are required")
    functional = cfg.options.get("functional") or "exact"
    rows = phase_diagram(_parse_grid(s_spec), delta, _parse_list(wc_spec),
                         functional=functional)
    csv_rows = [
        (r["s"], r["omega_c"], r["alpha_c_numeric"], r["alpha_c_closed"])
        for r in rows
    ]
    _emit(_csv_text("phase-diagram",
                    ["s", "omega_c", "alpha_c_numeric", "alpha_c_closed"], csv_rows),
          cfg.options.get("output"))
    n_bad = sum(1 for r in rows if r["error"])
    print(f"phase-diagram: {len(rows)} points, {n_bad} failures")
    return "ok"


def _cmd_chain(cfg: RunConfig) -> str:
    from .chain import chain_map, chain_occupations, displaced_frame

    p = cfg.params()
    n_sites = cfg.options.get("n_sites") or 50
    raw = cfg.options.get("raw_units", False)
    w_unit = 1.0 if raw else p.omega_c
    rep = chain_map(p, int(n_sites))
    if cfg.options.get("occupations"):
        sol = minimize_energy(p)
        frame_kind = cfg.options.get("frame") or "bare"
        if frame_kind == "bare":
            frame = None
        elif frame_kind == "displaced":
            frame = displaced_frame(sol.state, p)
        else:
            raise DomainError(f"chain: unknown frame {frame_kind!r}")
        profile = chain_occupations(sol.state, p, rep, frame=frame)
        rows = [(n, float(x)) for n, x in enumerate(profile.n_av)]
        _emit(_csv_text(f"chain-occupations frame={profile.frame}",
                        ["n", "n_av"], rows), cfg.options.get("output"))
        print(f"chain: M={_format_float(sol.sz)} frame={profile.frame} "
              f"total={_format_float(float(np.sum(profile.n_av)))}")
    else:
        rows = []
        for n in range(rep.n_sites):
            hop = rep.hoppings[n] / w_unit if n < rep.n_sites - 1 else math.nan
            rows.append((n, float(rep.site_energies[n] / w_unit), float(hop)))
        _emit(_csv_text("chain-coefficients", ["n", "eps_n", "t_n"], rows),
              cfg.options.get("output"))
        print(f"chain: {rep.n_sites} sites, t_minus1={_format_float(rep.system_coupling / w_unit)}")
    return "ok"


def _cmd_oracle(cfg: RunConfig) -> str:
    from .oracle import OracleConfig, run_oracle

    p = cfg.params()
    n_modes = cfg.options.get("n_modes") or 4
    n_boson = cfg.options.get("n_boson") or 8
    basis = cfg.options.get("basis") or "star"
    ocfg = OracleConfig(n_modes=int(n_modes), n_boson=int(n_boson), which_basis=basis)
    result = run_oracle(p, ocfg)
    record = {
        "command": "oracle",
        "s": p.s, "alpha": p.alpha, "delta": p.delta, "omega_c": p.omega_c,
        "n_modes": ocfg.n_modes, "n_boson": ocfg.n_boson, "basis": ocfg.which_basis,
        "raw_units": bool(cfg.options.get("raw_units", False)),
        "energy_exact": result.energy_exact / (1.0 if cfg.options.get("raw_units") else p.delta),
        "energy_ado_discrete": result.energy_ado_discrete
        / (1.0 if cfg.options.get("raw_units") else p.delta),
        "fidelity": result.fidelity,
        "truncation_loss": result.truncation_loss,
        "converged_nb": result.converged_nb,
    }
    _emit(_json_text(record), cfg.options.get("output"))
    print(f"oracle: F={_format_float(result.fidelity)} "
          f"E_exact/delta={_format_float(result.energy_exact / p.delta)}")
    return "ok"


def _cmd_exponents(cfg: RunConfig) -> str:
    from .critical import critical_coupling_numeric, extract_exponents, sweep_alpha

    p = cfg.params()
    if not p.theory_valid:
        raise DomainError("exponents: mean-field exponents require s < 0.5")
    window_spec = cfg.options.get("window") or "1e-4:1e-2"
    try:
        lo_s, hi_s = window_spec.split(":")
        window = (float(lo_s), float(hi_s))
    except ValueError as exc:
        raise DomainError(f"bad window spec {window_spec!r}, expected lo:hi") from exc
    n_side = cfg.options.get("points_per_side") or 12
    functional = cfg.options.get("functional") or "exact"
    alpha_c = critical_coupling_numeric(p.s, p.delta, p.omega_c, functional)
    red = np.geomspace(window[0], window[1], int(n_side))
    alphas = np.sort(np.concatenate([alpha_c * (1 - red), alpha_c * (1 + red)]))
    table = sweep_alpha(p.s, p.delta, p.omega_c, alphas, functional=functional,
                        threads=cfg.options.get("threads") or 1)
    beta, gamma = extract_exponents(table, alpha_c, window=window)
    record = {
        "command": "exponents",
        "s": p.s, "delta": p.delta, "omega_c": p.omega_c,
        "functional": functional,
        "alpha_c_numeric": alpha_c,
        "window_lo": window[0], "window_hi": window[1],
        "beta": beta.exponent, "beta_prefactor": beta.prefactor,
        "beta_residual": beta.residual,
        "gamma": gamma.exponent, "gamma_prefactor": gamma.prefactor,
        "gamma_residual": gamma.residual,
    }
    _emit(_json_text(record), cfg.options.get("output"))
    print(f"exponents: beta={_format_float(beta.exponent)} gamma={_format_float(gamma.exponent)}")
    return "ok"


_HANDLERS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "critical": _cmd_critical,
    "phase-diagram": _cmd_phase_diagram,
    "chain": _cmd_chain,
    "oracle": _cmd_oracle,
    "exponents": _cmd_exponents,
}


_CANONICAL_FORMAT = {
    "solve": "json",
    "sweep": "csv",
    "critical": "json",
    "phase-diagram": "csv",
    "chain": "csv",
    "oracle": "json",
    "exponents": "json",
}


def run(cfg: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    try:
        wanted = cfg.options.get("format")
        if wanted and wanted != _CANONICAL_FORMAT[cfg.command]:
            raise DomainError(
                f"{cfg.command} emits {_CANONICAL_FORMAT[cfg.command]}, not {wanted}")
        _HANDLERS[cfg.command](cfg)
        return 0
    except DomainError as exc:
        print(f"subohmic {cfg.command}: domain error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, BracketError) as exc:
        print(f"subohmic {cfg.command}: did not converge: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> _Parser:
    parser = _Parser(prog="subohmic",
                     description="Variational ground state of the sub-ohmic spin-boson model")
    parser.add_argument("--version", action="version", version=f"subohmic {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, with_alpha=True):
        sp.add_argument("--config", type=str, default=None,
                        help="key = value file; flags override file values")
        sp.add_argument("--s", type=float, default=None)
        if with_alpha:
            sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--delta", type=float, default=None)
        sp.add_argument("--omega-c", dest="omega_c", type=float, default=None)
        sp.add_argument("--output", type=str, default=None)
        sp.add_argument("--format", type=str, choices=("csv", "json"), default=None)
        sp.add_argument("--raw-units", dest="raw_units", action="store_true", default=None)
        sp.add_argument("--threads", type=int, default=None,
                        help="row parallelism cap (default SUBOHMIC_THREADS or 1)")

    sp = sub.add_parser("solve", help="ground state at one coupling")
    add_common(sp)
    sp.add_argument("--functional", choices=("exact", "scaling"), default=None)

    sp = sub.add_parser("sweep", help="ground state along a coupling grid")
    add_common(sp, with_alpha=False)
    sp.add_argument("--alpha-grid", dest="alpha_grid", type=str, default=None,
                    help="lo:hi:n linear grid")
    sp.add_argument("--functional", choices=("exact", "scaling"), default=None)

    sp = sub.add_parser("critical", help="critical coupling, numeric and closed form")
    add_common(sp, with_alpha=False)
    sp.add_argument("--functional", choices=("exact", "scaling"), default=None)

    sp = sub.add_parser("phase-diagram", help="critical couplings over (s, omega_c)")
    add_common(sp, with_alpha=False)
    sp.add_argument("--s-grid", dest="s_grid", type=str, default=None, help="lo:hi:n")
    sp.add_argument("--omega-c-list", dest="omega_c_list", type=str, default=None,
                    help="comma-separated cutoffs")
    sp.add_argument("--functional", choices=("exact", "scaling"), default=None)

    sp = sub.add_parser("chain", help="chain coefficients or site occupations")
    add_common(sp)
    sp.add_argument("--n-sites", dest="n_sites", type=int, default=None)
    sp.add_argument("--occupations", action="store_true", default=None)
    sp.add_argument("--frame", choices=("bare", "displaced"), default=None)

    sp = sub.add_parser("oracle", help="exact diagonalization cross-check")
    add_common(sp)
    sp.add_argument("--n-modes", dest="n_modes", type=int, default=None)
    sp.add_argument("--n-boson", dest="n_boson", type=int, default=None)
    sp.add_argument("--basis", choices=("star", "chain"), default=None)

    sp = sub.add_parser("exponents", help="critical exponent fits")
    add_common(sp, with_alpha=False)
    sp.add_argument("--window", type=str, default=None, help="reduced-coupling lo:hi")
    sp.add_argument("--points-per-side", dest="points_per_side", type=int, default=None)
    sp.add_argument("--functional", choices=("exact", "scaling"), default=None)

    return parser


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    """Resolve argv and optional config file into a :class:`RunConfig`.

    Precedence: built-in defaults < config file < explicit flags.
    """
    parser = _build_parser()
    ns = parser.parse_args(argv)
    options: dict = {}
    config_path = getattr(ns, "config", None)
    if config_path:
        options.update(load_config(config_path))
    for key, value in vars(ns).items():
        if key in ("command", "config"):
            continue
        if value is not None:
            options[key] = value
    if options.get("threads") is None:
        env = os.environ.get("SUBOHMIC_THREADS")
        if env:
            try:
                options["threads"] = int(env)
            except ValueError as exc:
                raise DomainError(f"bad SUBOHMIC_THREADS value {env!r}") from exc
    return RunConfig(command=ns.command, options=options)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_args(argv)
    except DomainError as exc:
        print(f"subohmic: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
