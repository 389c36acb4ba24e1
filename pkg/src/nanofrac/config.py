"""Run configuration: a declarative INI-style file drives every mode.

One file fully determines a run.  Keys mirror the reference parameter-set
symbols (E_m, nu_m, E_cnt, L_cnt, D_cnt, t, chi, zeta, sigma_ult, tau_int,
G_0, N_mu, ...).  Any omitted key falls back to the reference MWCNT/epoxy
values; unknown keys are rejected with a nearest-key suggestion.  The
resolved configuration has a canonical SHA-256 hash that is stamped into
every output file for reproducibility.
"""

from __future__ import annotations

import configparser
import difflib
import hashlib
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .fracture import BundleStatistics, FractureParams, PlanarODF, fit_pq
from .homogenize import AgglomerationParams, FillerGeometry, Phase, PhaseSet

_PI_2 = math.pi / 2.0

# schema: section -> key -> (type tag, default); "auto" entries are derived
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "material": {
        "E_m": ("float", 2.5e9),
        "nu_m": ("float", 0.28),
        "E_cnt": ("float", 700e9),
        "nu_cnt": ("float", 0.3),
        "E_i": ("float", 2.17e9),
        "nu_i": ("float_or_auto", "auto"),      # defaults to nu_m
        "f_p": ("float", 0.01),
        "L_cnt": ("float", 3.21e-6),
        "D_cnt": ("float", 10.35e-9),
        "t": ("float", 31.0e-9),
    },
    "agglomeration": {
        "chi": ("float", 0.2),
        "zeta": ("float", 0.4),
        "N_mu": ("float", 10.0),
        "N_sigma": ("float_or_auto", "auto"),   # defaults to 0.1 N_mu
        "N_min": ("int", 1),
        "N_max": ("int", 50),
    },
    "fracture": {
        "G_0": ("float", 133.0),
        "sigma_ult": ("float", 35e9),
        "tau_int": ("float", 47e6),
        "A": ("float", 0.083),
        "mu": ("float", 0.0),
    },
    "orientation": {
        "p": ("float_or_auto", 0.5),
        "q": ("float_or_auto", 0.5),
        "theta_min": ("float", 0.0),
        "theta_max": ("float", _PI_2),
        "theta_mu": ("float_or_auto", "auto"),   # if set, (p, q) are fitted
        "theta_sigma": ("float_or_auto", "auto"),
    },
    "homogenize": {
        "dispersion": ("choice:uniform,agglomerated", "uniform"),
    },
    "sweep": {
        "parameter": ("str", "kappa"),
        "start": ("float", 10.0),
        "stop": ("float", 1000.0),
        "count": ("int", 50),
        "scale": ("choice:linear,log", "linear"),
    },
    "simulate": {
        "case": ("choice:sen_tension,sen_shear,holed_plate", "sen_tension"),
        "dispersion": ("choice:uniform,agglomerated", "uniform"),
        "ell": ("float_or_auto", "auto"),        # case default when auto
        "thickness": ("float_or_auto", "auto"),  # mm; case default when auto
        "refinement": ("choice:standard,paper,fine", "standard"),
        "snapshot_every": ("int", 0),
        "schedule": ("str_or_auto", "auto"),     # "target:steps,target:steps"
    },
    "solver": {
        "rtol": ("float", 1e-8),
        "max_iterations": ("int", 1500),
    },
}

SWEEPABLE = (
    "f_p", "kappa", "zeta", "chi", "N_mu", "t", "E_i", "tau_int",
    "sigma_ult", "A", "mu", "theta_mu",
)


def _convert(section: str, key: str, raw: str, tag: str):
    path = f"{section}.{key}"
    try:
        if tag == "float":
            return float(raw)
        if tag == "int":
            return int(raw)
        if tag in ("float_or_auto", "str_or_auto"):
            if raw.strip().lower() == "auto" or raw.strip() == "":
                return "auto"
            return float(raw) if tag == "float_or_auto" else raw.strip()
        if tag == "str":
            return raw.strip()
        if tag.startswith("choice:"):
            options = tag.split(":", 1)[1].split(",")
            value = raw.strip()
            if value not in options:
                raise ConfigError(
                    f"{path}: {value!r} is not one of {options}"
                )
            return value
    except ValueError as exc:
        raise ConfigError(f"{path}: cannot parse {raw!r} ({exc})") from exc
    raise ConfigError(f"{path}: unknown schema tag {tag}")


@dataclass
class RunConfig:
    """Fully resolved configuration with derived model objects."""

    values: dict[str, dict[str, object]]
    explicit: set[str] = field(default_factory=set)

    # -- raw access ---------------------------------------------------------

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value) -> None:
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown configuration key {section}.{key}")
        tag = _SCHEMA[section][key][0]
        self.values[section][key] = (
            _convert(section, key, str(value), tag) if isinstance(value, str) else value
        )
        self.explicit.add(f"{section}.{key}")
        self.validate()

    # -- resolution and validation ------------------------------------------

    def resolved(self, section: str, key: str):
        value = self.values[section][key]
        if value != "auto":
            return value
        if (section, key) == ("material", "nu_i"):
            return self.values["material"]["nu_m"]
        if (section, key) == ("agglomeration", "N_sigma"):
            return 0.1 * float(self.values["agglomeration"]["N_mu"])
        return value  # orientation/simulate autos handled by consumers

    def validate(self) -> None:
        m = self.values["material"]
        for key in ("E_m", "E_cnt", "E_i", "L_cnt", "D_cnt"):
            if not m[key] > 0.0:
                raise ConfigError(f"material.{key} must be positive, got {m[key]}")
        for key in ("nu_m", "nu_cnt"):
            if not -1.0 < m[key] < 0.5:
                raise ConfigError(f"material.{key} must lie in (-1, 0.5)")
        if not 0.0 <= m["f_p"] < 1.0:
            raise ConfigError(f"material.f_p must lie in [0, 1), got {m['f_p']}")
        if m["t"] < 0.0:
            raise ConfigError("material.t cannot be negative")
        if m["L_cnt"] < m["D_cnt"]:
            raise ConfigError("material.L_cnt must be at least D_cnt (prolate filler)")

        a = self.values["agglomeration"]
        if not 0.0 < a["chi"] <= 1.0:
            raise ConfigError(f"agglomeration.chi must lie in (0, 1], got {a['chi']}")
        if not 0.0 <= a["zeta"] <= 1.0:
            raise ConfigError(f"agglomeration.zeta must lie in [0, 1], got {a['zeta']}")
        if a["N_min"] < 1 or a["N_max"] < a["N_min"]:
            raise ConfigError("agglomeration.N_min/N_max must satisfy 1 <= N_min <= N_max")
        if a["N_mu"] <= 0.0:
            raise ConfigError("agglomeration.N_mu must be positive")

        f = self.values["fracture"]
        for key in ("G_0", "sigma_ult", "tau_int"):
            if not f[key] > 0.0:
                raise ConfigError(f"fracture.{key} must be positive")
        if f["A"] < 0.0 or f["mu"] < 0.0:
            raise ConfigError("fracture.A and fracture.mu must be >= 0")

        o = self.values["orientation"]
        if not 0.0 <= o["theta_min"] < o["theta_max"] <= _PI_2 + 1e-12:
            raise ConfigError("orientation support must satisfy 0 <= theta_min < theta_max <= pi/2")
        for key in ("p", "q"):
            if o[key] != "auto" and o[key] < 0.5:
                raise ConfigError(f"orientation.{key} must be >= 1/2")

        sw = self.values["sweep"]
        if sw["parameter"] not in SWEEPABLE:
            raise ConfigError(
                f"sweep.parameter {sw['parameter']!r} not sweepable; "
                f"choose from {SWEEPABLE}"
            )
        if sw["count"] < 1:
            raise ConfigError("sweep.count must be at least 1")
        if sw["scale"] == "log" and sw["start"] <= 0.0:
            raise ConfigError("log-scaled sweeps need a positive start")

        sv = self.values["solver"]
        if not sv["rtol"] > 0.0:
            raise ConfigError("solver.rtol must be positive")
        if sv["max_iterations"] < 1:
            raise ConfigError("solver.max_iterations must be at least 1")

    # -- derived model objects ----------------------------------------------

    def filler_geometry(self) -> FillerGeometry:
        m = self.values["material"]
        return FillerGeometry(m["L_cnt"], m["D_cnt"], m["t"])

    def phase_set(self) -> PhaseSet:
        m = self.values["material"]
        return PhaseSet(
            matrix=Phase(m["E_m"], m["nu_m"]),
            filler=Phase(m["E_cnt"], m["nu_cnt"]),
            interphase=Phase(m["E_i"], self.resolved("material", "nu_i")),
            filler_fraction=m["f_p"],
        )

    def agglomeration(self) -> AgglomerationParams:
        a = self.values["agglomeration"]
        return AgglomerationParams(a["chi"], a["zeta"])

    def bundle_statistics(self) -> BundleStatistics:
        a = self.values["agglomeration"]
        return BundleStatistics.fit(
            float(a["N_mu"]), float(self.resolved("agglomeration", "N_sigma")),
            int(a["N_min"]), int(a["N_max"]),
        )

    def fracture_params(self) -> FractureParams:
        f = self.values["fracture"]
        m = self.values["material"]
        return FractureParams(
            matrix_toughness=f["G_0"],
            filler_strength=f["sigma_ult"],
            interfacial_shear_strength=f["tau_int"],
            inclined_strength_constant=f["A"],
            snubbing_coefficient=f["mu"],
            filler_modulus=m["E_cnt"],
            geometry=self.filler_geometry(),
            filler_fraction=m["f_p"],
        )

    def planar_odf(self) -> PlanarODF:
        o = self.values["orientation"]
        if o["theta_mu"] != "auto" or o["theta_sigma"] != "auto":
            if o["theta_mu"] == "auto" or o["theta_sigma"] == "auto":
                raise ConfigError(
                    "orientation.theta_mu and theta_sigma must be set together"
                )
            p, q = fit_pq(o["theta_mu"], o["theta_sigma"],
                          o["theta_min"], o["theta_max"])
            return PlanarODF(p, q, o["theta_min"], o["theta_max"])
        p = 0.5 if o["p"] == "auto" else o["p"]
        q = 0.5 if o["q"] == "auto" else o["q"]
        return PlanarODF(p, q, o["theta_min"], o["theta_max"])

    # -- provenance -----------------------------------------------------------

    def canonical_text(self) -> str:
        lines = []
        for section in sorted(self.values):
            for key in sorted(self.values[section]):
                lines.append(f"{section}.{key}={self.values[section][key]!r}")
        return "\n".join(lines)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def default_config() -> RunConfig:
    values = {
        section: {key: default for key, (_, default) in keys.items()}
        for section, keys in _SCHEMA.items()
    }
    cfg = RunConfig(values)
    cfg.validate()
    return cfg


def _suggest(name: str, candidates) -> str:
    close = difflib.get_close_matches(name, list(candidates), n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def parse_config(path: str | None) -> RunConfig:
    """Parse and validate a configuration file; ``None`` gives all defaults."""
    cfg = default_config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str          # keys are case-sensitive (E_m, N_mu, ...)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration file {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]{_suggest(section, _SCHEMA)}"
            )
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {section}.{key}"
                    f"{_suggest(key, _SCHEMA[section])}"
                )
            tag = _SCHEMA[section][key][0]
            cfg.values[section][key] = _convert(section, key, raw, tag)
            cfg.explicit.add(f"{section}.{key}")
    cfg.validate()
    return cfg


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> None:
    """Apply ``section.key=value`` strings on top of a parsed configuration."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(
                f"override {item!r} must look like section.key=value"
            )
        target, raw = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section {section!r} in override{_suggest(section, _SCHEMA)}"
            )
        if key not in _SCHEMA[section]:
            raise ConfigError(
                f"unknown key {section}.{key} in override"
                f"{_suggest(key, _SCHEMA[section])}"
            )
        tag = _SCHEMA[section][key][0]
        cfg.values[section][key] = _convert(section, key, raw, tag)
        cfg.explicit.add(f"{section}.{key}")
    cfg.validate()
