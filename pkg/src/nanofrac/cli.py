"""Command-line drivers: homogenize, fracture-energy, sweep and simulate.

Every mode takes ``--config <file>`` (optional; defaults reproduce the
reference MWCNT/epoxy parameter set), ``--out <dir>`` and repeatable
``--override section.key=value`` flags.  Outputs are CSV (17 significant
digits, LF line endings) and legacy ASCII VTK snapshots; each file carries
the canonical configuration hash so re-runs are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, apply_overrides, parse_config
from .errors import ConfigError, NanofracError, SolverNonConvergence
from .fracture import (
    PackingTable,
    fracture_energy_agglomerated,
    fracture_energy_uniform,
    total_fracture_energy,
)
from .homogenize import (
    double_inclusion_effective,
    interphase_volume_fraction,
    isotropic_projection,
    two_step_effective,
)
from .tensors import ODF3D, isotropic_stiffness
from .pf_fem import (
    PFMaterial,
    SimulationProblem,
    SolverConfig,
    LoadSchedule,
    run_simulation,
)
from .pf_fem.benchmarks import (
    DEFAULT_SCHEDULES,
    DEFAULT_THICKNESS_MM,
    ELL,
    benchmark_bcs,
    generate_benchmark_mesh,
)
from .pf_fem.vtk_io import write_vtk

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, cfg: RunConfig, header: list[str],
               rows: list[list]) -> None:
    lines = [
        f"# nanofrac {__version__}",
        f"# config_sha256 {cfg.hash()}",
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# Point evaluations shared by the modes
# ---------------------------------------------------------------------------

def effective_stiffness(cfg: RunConfig, dispersion: str):
    phases = cfg.phase_set()
    geom = cfg.filler_geometry()
    odf = ODF3D.uniform()
    if dispersion == "uniform":
        C = double_inclusion_effective(phases, geom, odf)
    else:
        C = two_step_effective(phases, geom, cfg.agglomeration(), odf)
    return isotropic_projection(C)


def fracture_energies(cfg: RunConfig) -> dict[str, float]:
    params = cfg.fracture_params()
    odf = cfg.planar_odf()
    table = PackingTable.default()
    stats = cfg.bundle_statistics()
    g_pf = fracture_energy_uniform(params, odf)
    g_agg = fracture_energy_agglomerated(params, odf, stats, table)
    g_total = total_fracture_energy(params, odf, cfg.agglomeration(), stats, table)
    g0 = cfg.get("fracture", "G_0")
    return {
        "G_PF": g_pf,
        "G_PF_agg": g_agg,
        "G_c_uniform": g0 + g_pf,
        "G_c_agglomerated": g0 + g_agg,
        "G_c_combined": g_total,
    }


def benchmark_material(cfg: RunConfig, dispersion: str) -> PFMaterial:
    """Homogenised input of a benchmark run for the configured dispersion.

    Uniform: double-inclusion stiffness and G_0 + G_PF.  Agglomerated:
    two-step stiffness and G_0 + G_PF_agg (all bridging fillers bundled).
    """
    fit = effective_stiffness(cfg, dispersion)
    energies = fracture_energies(cfg)
    g_c = (energies["G_c_uniform"] if dispersion == "uniform"
           else energies["G_c_agglomerated"])
    case = cfg.get("simulate", "case")
    ell = cfg.get("simulate", "ell")
    ell = ELL[case] if ell == "auto" else float(ell)
    return PFMaterial(isotropic_stiffness(fit.youngs, fit.poisson), g_c, ell)


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------

def run_homogenize(cfg: RunConfig, out: Path) -> None:
    dispersion = cfg.get("homogenize", "dispersion")
    fit = effective_stiffness(cfg, dispersion)
    f_i = interphase_volume_fraction(
        cfg.get("material", "f_p"), cfg.filler_geometry())
    _write_csv(out / "homogenize.csv", cfg,
               ["dispersion", "E_eff_Pa", "nu_eff", "anisotropy_residual",
                "E_over_Em", "f_i"],
               [[dispersion, fit.youngs, fit.poisson, fit.residual,
                 fit.youngs / cfg.get("material", "E_m"), f_i]])


def run_fracture_energy(cfg: RunConfig, out: Path) -> None:
    e = fracture_energies(cfg)
    _write_csv(out / "fracture_energy.csv", cfg,
               ["G_0"] + list(e.keys()),
               [[cfg.get("fracture", "G_0")] + list(e.values())])


def _sweep_point(cfg: RunConfig, parameter: str, value: float) -> RunConfig:
    import copy

    point = RunConfig(copy.deepcopy(cfg.values), set(cfg.explicit))
    if parameter == "kappa":
        point.values["material"]["L_cnt"] = value * point.values["material"]["D_cnt"]
    elif parameter == "f_p":
        point.values["material"]["f_p"] = value
    elif parameter == "t":
        point.values["material"]["t"] = value
    elif parameter == "E_i":
        point.values["material"]["E_i"] = value
    elif parameter in ("zeta", "chi", "N_mu"):
        point.values["agglomeration"][parameter] = value
    elif parameter in ("tau_int", "sigma_ult", "A", "mu"):
        point.values["fracture"][parameter] = value
    elif parameter == "theta_mu":
        point.values["orientation"]["theta_mu"] = value
        if point.values["orientation"]["theta_sigma"] == "auto":
            point.values["orientation"]["theta_sigma"] = 0.05 * np.pi / 2.0
    point.validate()
    return point


def run_sweep(cfg: RunConfig, out: Path) -> None:
    parameter = cfg.get("sweep", "parameter")
    start, stop = cfg.get("sweep", "start"), cfg.get("sweep", "stop")
    count = cfg.get("sweep", "count")
    if cfg.get("sweep", "scale") == "log":
        axis = np.geomspace(start, stop, count)
    else:
        axis = np.linspace(start, stop, count)
    dispersion = cfg.get("homogenize", "dispersion")

    rows = []
    for value in axis:
        row = [parameter, float(value)]
        try:
            point = _sweep_point(cfg, parameter, float(value))
            fit = effective_stiffness(point, dispersion)
            e = fracture_energies(point)
            rows.append(row + [fit.youngs, fit.poisson, e["G_c_combined"],
                               e["G_PF"], e["G_PF_agg"], "ok"])
        except (NanofracError, ValueError) as exc:
            # failed points become explicit error rows; the sweep continues
            reason = str(exc).replace(",", ";").replace("\n", " ")
            rows.append(row + ["", "", "", "", "", f"error: {reason}"])
    _write_csv(out / "sweep.csv", cfg,
               ["parameter", "value", "E_eff_Pa", "nu_eff", "G_c",
                "G_PF", "G_PF_agg", "status"],
               rows)


def _schedule_from_config(cfg: RunConfig) -> LoadSchedule:
    raw = cfg.get("simulate", "schedule")
    case = cfg.get("simulate", "case")
    if raw == "auto":
        return DEFAULT_SCHEDULES[case]
    segments = []
    for chunk in str(raw).split(","):
        target, _, steps = chunk.partition(":")
        segments.append((float(target), int(steps)))
    return LoadSchedule(tuple(segments))


def run_benchmark(cfg: RunConfig, out: Path) -> None:
    case = cfg.get("simulate", "case")
    dispersion = cfg.get("simulate", "dispersion")
    mat = benchmark_material(cfg, dispersion)
    mesh = generate_benchmark_mesh(case, cfg.get("simulate", "refinement"),
                                   ell=mat.ell)
    bcs, rset, rdof = benchmark_bcs(case)
    solver = SolverConfig(rtol=cfg.get("solver", "rtol"),
                          max_iterations=cfg.get("solver", "max_iterations"))
    snapshot_every = cfg.get("simulate", "snapshot_every") or None
    problem = SimulationProblem(mesh, mat, bcs, _schedule_from_config(cfg),
                                rset, rdof, solver=solver,
                                snapshot_every=snapshot_every)
    result = run_simulation(problem)

    thickness = cfg.get("simulate", "thickness")
    thickness = DEFAULT_THICKNESS_MM[case] if thickness == "auto" else float(thickness)
    rows = [
        [s.step, s.applied, s.reaction * thickness / 1e3]
        for s in result.curve.samples
    ]
    _write_csv(out / "load_curve.csv", cfg,
               ["step", "applied_displacement_mm", "reaction_kN"], rows)
    for snap in result.snapshots:
        write_vtk(out / f"snapshot_{snap.step:05d}.vtk", mesh, snap.phi, snap.u,
                  title=f"{case} step {snap.step} u={snap.applied:.6g} mm")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nanofrac",
        description="Effective properties and phase-field fracture of "
                    "nanotube-reinforced composites",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for name, help_text in [
        ("homogenize", "effective stiffness of the composite"),
        ("fracture-energy", "bridging fracture energies"),
        ("sweep", "parameter sweep of effective properties"),
        ("simulate", "phase-field benchmark simulation"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="configuration file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--override", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a configuration value (repeatable)")
    return parser


_MODES = {
    "homogenize": run_homogenize,
    "fracture-energy": run_fracture_energy,
    "sweep": run_sweep,
    "simulate": run_benchmark,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        apply_overrides(cfg, args.override)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _MODES[args.mode](cfg, out)
    except SolverNonConvergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
