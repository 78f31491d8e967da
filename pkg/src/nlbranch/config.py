"""Run configuration: INI-style files with nested sections.

A run file holds the model ([model], [model.a0] .. [model.a3], [model.nu]),
discretization ([sim]), Monte Carlo ([mc]), classifier grids ([criteria])
and output ([output]) settings.  Rate coefficients may be given as
literals or as one of the two expressions "gamma(alpha)" and
"b0/gamma(alpha)", which make the critical coefficient relation exactly
representable without decimal truncation.  No other expressions are
accepted.
"""

import configparser
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .criteria import CriteriaConfig
from .model import (
    FiniteMeasure,
    ModelSpec,
    PowerLaw,
    StableMeasure,
    Tabulated,
    ValidatedModel,
    validate,
)
from .numerics import gamma
from .simulator import SimConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_text",
           "config_echo", "echo_to_ini"]


class ConfigError(ValueError):
    """Configuration failure carrying the section/key it came from."""

    def __init__(self, section: str, key: str, message: str):
        super().__init__(f"[{section}] {key}: {message}")
        self.section = section
        self.key = key


@dataclass
class RunConfig:
    model: ValidatedModel
    sim: SimConfig
    criteria: CriteriaConfig
    n_paths: int
    seed: int
    threads: int
    output_path: Optional[str]
    output_format: str
    model_params: Dict = field(default_factory=dict)


def _get(cp, section, key, default=None, required=False):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    if required:
        raise ConfigError(section, key, "missing required value")
    return default


def _as_float(section, key, raw):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(section, key, f"not a number: {raw!r}")


def _as_int(section, key, raw):
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ConfigError(section, key, f"not an integer: {raw!r}")


def _as_bool(section, key, raw):
    lowered = str(raw).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(section, key, f"not a boolean: {raw!r}")


def _resolve_coefficient(section, raw, alpha, b0):
    """Literal float, 'gamma(alpha)', or 'b0/gamma(alpha)'."""
    text = str(raw).strip().lower().replace(" ", "")
    if text == "gamma(alpha)":
        return gamma(alpha)
    if text == "b0/gamma(alpha)":
        if b0 is None:
            raise ConfigError(section, "b",
                              "b0/gamma(alpha) is only valid outside [model.a0]")
        return b0 / gamma(alpha)
    return _as_float(section, "b", raw)


def _parse_rate(cp, section, alpha, b0=None, required=False):
    if not cp.has_section(section):
        if required:
            raise ConfigError(section, "", "missing required section")
        return PowerLaw(0.0, 0.0)
    kind = _get(cp, section, "type", default="powerlaw").lower()
    if kind == "powerlaw":
        b = _resolve_coefficient(section, _get(cp, section, "b", required=True),
                                 alpha, b0)
        r = _as_float(section, "r", _get(cp, section, "r", required=True))
        return PowerLaw(b, r)
    if kind == "tabulated":
        raw = _get(cp, section, "knots", required=True)
        knots = []
        for item in raw.replace(",", " ").split():
            if ":" not in item:
                raise ConfigError(section, "knots",
                                  f"expected u:value pairs, got {item!r}")
            u_s, v_s = item.split(":", 1)
            knots.append((_as_float(section, "knots", u_s),
                          _as_float(section, "knots", v_s)))
        return Tabulated(tuple(knots))
    raise ConfigError(section, "type", f"unknown rate type {kind!r}")


def _parse_atoms(cp):
    if not cp.has_section("model.nu"):
        return FiniteMeasure(())
    raw = _get(cp, "model.nu", "atoms", default="")
    atoms: List[Tuple[float, float]] = []
    for item in raw.replace(",", " ").split():
        if ":" not in item:
            raise ConfigError("model.nu", "atoms",
                              f"expected z:weight pairs, got {item!r}")
        z_s, w_s = item.split(":", 1)
        atoms.append((_as_float("model.nu", "atoms", z_s),
                      _as_float("model.nu", "atoms", w_s)))
    return FiniteMeasure(tuple(atoms))


def _parse_grid_list(section, key, raw):
    try:
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(section, key, f"not a list of numbers: {raw!r}")


def parse_config_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("", "", f"parse failure: {exc}") from exc

    if not cp.has_section("model"):
        raise ConfigError("model", "", "missing required section")
    alpha = _as_float("model", "alpha", _get(cp, "model", "alpha", required=True))
    u_max_raw = _get(cp, "model", "u_max", default="inf")
    u_max = None
    if u_max_raw not in ("inf", "none", ""):
        u_max = _as_float("model", "u_max", u_max_raw)
        if not math.isfinite(u_max):
            u_max = None

    a0 = _parse_rate(cp, "model.a0", alpha, required=True)
    b0_val = a0.b if isinstance(a0, PowerLaw) else None
    a1 = _parse_rate(cp, "model.a1", alpha, b0_val)
    a2 = _parse_rate(cp, "model.a2", alpha, b0_val)
    a3 = _parse_rate(cp, "model.a3", alpha, b0_val)
    nu = _parse_atoms(cp)

    try:
        model = validate(ModelSpec(a0=a0, a1=a1, a2=a2, a3=a3,
                                   mu=StableMeasure(alpha=alpha, u_max=u_max),
                                   nu=nu))
    except Exception as exc:
        code = getattr(exc, "code", "")
        key = {"alpha_out_of_range": "alpha", "bad_support_cut": "u_max",
               "atom_inside_support": "atoms", "bad_atom": "atoms"}.get(code, "")
        section = "model.nu" if key == "atoms" else "model"
        raise ConfigError(section, key, str(exc)) from exc

    sim_kwargs = dict(
        dt=_as_float("sim", "dt", _get(cp, "sim", "dt", default="1e-3")),
        eps_cut=_as_float("sim", "eps_cut",
                          _get(cp, "sim", "eps_cut", default="1e-4")),
        horizon_t=_as_float("sim", "horizon_t",
                            _get(cp, "sim", "horizon_t", default="1.0")),
        cap_b=_as_float("sim", "cap_b",
                        _get(cp, "sim", "cap_b", default="1e12")),
        floor_zero=_as_float("sim", "floor_zero",
                             _get(cp, "sim", "floor_zero", default="0.0")),
        adaptive=_as_bool("sim", "adaptive",
                          _get(cp, "sim", "adaptive", default="false")),
        eps_rule=_get(cp, "sim", "eps_rule", default="absolute"),
    )
    budget_raw = _get(cp, "sim", "step_budget", default=None)
    if budget_raw is not None:
        sim_kwargs["step_budget"] = _as_int("sim", "step_budget", budget_raw)
    try:
        sim = SimConfig(**sim_kwargs)
    except ValueError as exc:
        raise ConfigError("sim", "", str(exc)) from exc

    crit_kwargs = {}
    if cp.has_section("criteria"):
        if cp.has_option("criteria", "rho"):
            crit_kwargs["rho"] = _as_float("criteria", "rho",
                                           _get(cp, "criteria", "rho"))
        if cp.has_option("criteria", "quad_tol"):
            crit_kwargs["quad_tol"] = _as_float(
                "criteria", "quad_tol", _get(cp, "criteria", "quad_tol"))
        if cp.has_option("criteria", "small_u_grid"):
            crit_kwargs["small_u_grid"] = _parse_grid_list(
                "criteria", "small_u_grid", _get(cp, "criteria", "small_u_grid"))
        if cp.has_option("criteria", "large_u_grid"):
            crit_kwargs["large_u_grid"] = _parse_grid_list(
                "criteria", "large_u_grid", _get(cp, "criteria", "large_u_grid"))
    try:
        criteria = CriteriaConfig(**crit_kwargs)
    except ValueError as exc:
        raise ConfigError("criteria", "", str(exc)) from exc

    n_paths = _as_int("mc", "n_paths", _get(cp, "mc", "n_paths", default="10000"))
    seed = _as_int("mc", "seed", _get(cp, "mc", "seed", default="1"))
    threads = _as_int("mc", "threads", _get(cp, "mc", "threads", default="1"))

    output_path = _get(cp, "output", "path", default=None) or None
    output_format = (_get(cp, "output", "format", default="json") or "json").lower()
    if output_format not in ("json", "csv"):
        raise ConfigError("output", "format", f"must be json or csv")

    rc = RunConfig(model=model, sim=sim, criteria=criteria, n_paths=n_paths,
                   seed=seed, threads=threads, output_path=output_path,
                   output_format=output_format)
    rc.model_params = _describe_model(model)
    return rc


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("", "", f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def _describe_rate(rate) -> Dict:
    if isinstance(rate, PowerLaw):
        return {"type": "powerlaw", "b": rate.b, "r": rate.r}
    return {"type": "tabulated",
            "knots": [[u, v] for u, v in rate.knots]}


def _describe_model(model: ValidatedModel) -> Dict:
    spec = model.spec
    return {
        "alpha": model.alpha,
        "u_max": model.u_max,
        "a0": _describe_rate(spec.a0),
        "a1": _describe_rate(spec.a1),
        "a2": _describe_rate(spec.a2),
        "a3": _describe_rate(spec.a3),
        "nu": {"atoms": [[z, w] for z, w in spec.nu.atoms]},
    }


def config_echo(rc: RunConfig) -> Dict:
    """JSON-ready echo with every coefficient resolved to a number.

    Re-parsing the echo (see ``echo_to_ini``) reproduces the validated
    model exactly.
    """
    return {
        "model": rc.model_params,
        "sim": {
            "dt": rc.sim.dt,
            "eps_cut": rc.sim.eps_cut,
            "eps_rule": rc.sim.eps_rule,
            "horizon_t": rc.sim.horizon_t,
            "cap_b": rc.sim.cap_b,
            "floor_zero": rc.sim.floor_zero,
            "adaptive": rc.sim.adaptive,
            "step_budget": rc.sim.step_budget,
        },
        "mc": {"n_paths": rc.n_paths, "seed": rc.seed, "threads": rc.threads},
        "criteria": {
            "rho": rc.criteria.rho,
            "quad_tol": rc.criteria.quad_tol,
            "small_u_grid": list(rc.criteria.small_u_grid),
            "large_u_grid": list(rc.criteria.large_u_grid),
        },
        "output": {"path": rc.output_path, "format": rc.output_format},
    }


def _rate_to_ini(name: str, desc: Dict, out: io.StringIO) -> None:
    out.write(f"[{name}]\n")
    if desc["type"] == "powerlaw":
        out.write("type = powerlaw\n")
        out.write(f"b = {desc['b']!r}\n")
        out.write(f"r = {desc['r']!r}\n\n")
    else:
        out.write("type = tabulated\n")
        pairs = " ".join(f"{u!r}:{v!r}" for u, v in desc["knots"])
        out.write(f"knots = {pairs}\n\n")


def echo_to_ini(echo: Dict) -> str:
    """Serialize a config echo back to INI text that re-parses identically."""
    out = io.StringIO()
    m = echo["model"]
    out.write("[model]\n")
    out.write(f"alpha = {m['alpha']!r}\n")
    out.write(f"u_max = {'inf' if m['u_max'] is None else repr(m['u_max'])}\n\n")
    for name in ("a0", "a1", "a2", "a3"):
        _rate_to_ini(f"model.{name}", m[name], out)
    atoms = m["nu"]["atoms"]
    out.write("[model.nu]\n")
    out.write("atoms = " + " ".join(f"{z!r}:{w!r}" for z, w in atoms) + "\n\n")
    s = echo["sim"]
    out.write("[sim]\n")
    for key in ("dt", "eps_cut", "horizon_t", "cap_b",
                "floor_zero", "adaptive", "step_budget"):
        out.write(f"{key} = {s[key]!r}\n")
    out.write(f"eps_rule = {s['eps_rule']}\n")
    out.write("\n[mc]\n")
    for key, val in echo["mc"].items():
        out.write(f"{key} = {val!r}\n")
    c = echo["criteria"]
    out.write("\n[criteria]\n")
    out.write(f"rho = {c['rho']!r}\n")
    out.write(f"quad_tol = {c['quad_tol']!r}\n")
    out.write("small_u_grid = " + " ".join(repr(v) for v in c["small_u_grid"]) + "\n")
    out.write("large_u_grid = " + " ".join(repr(v) for v in c["large_u_grid"]) + "\n")
    o = echo["output"]
    out.write("\n[output]\n")
    out.write(f"path = {o['path'] or ''}\n")
    out.write(f"format = {o['format']}\n")
    return out.getvalue()
