"""Composite fracture energy from filler pull-out and rupture bridging.

A filler crossing the crack plane either pulls out of the matrix or breaks,
depending on its embedment length against the critical length set by the
force balance between rupture and interfacial friction.  Integrating the
work of both mechanisms over embedment length and a planar orientation
density gives the bridging contribution to the fracture energy; bundled
fillers are handled as equivalent fibres whose cross-section comes from the
equal-circles-in-circle packing problem, with the bundle size distributed as
a truncated Weibull variable.

Units: lengths in metres, stresses in Pa, energies in J/m^2.

Branch convention.  The force balance defines the critical length as

    L_c(theta) = A_eff sigma_ult(theta) / (P_eff tau e^(mu theta))

and an embedment ``l`` pulls out when ``l < L_c(theta)`` evaluated for a
*single* filler, rupturing otherwise.  With this pairing the longest
embedment L/2 first reaches the rupture regime at aspect ratio
sigma_ult / (2 tau), which is where the fracture energy peaks in
aspect-ratio sweeps.  Bundles keep the single-filler switch point and only
change the section properties, so bundling reduces the pull-out work by
exactly P_eff / A_eff and never raises the bridging energy above the
dispersed value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, least_squares
from scipy.special import gamma as gamma_fn

from .errors import InfeasibleTarget, QuadratureNonConvergence
from .homogenize import FillerGeometry

_HALF_PI = 0.5 * math.pi


# ---------------------------------------------------------------------------
# Parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FractureParams:
    """Inputs of the bridging-energy model."""

    matrix_toughness: float          # G_0, J/m^2
    filler_strength: float           # sigma_ult, Pa
    interfacial_shear_strength: float  # tau_int, Pa
    inclined_strength_constant: float  # A
    snubbing_coefficient: float      # mu, defaults to 0 (no reference value)
    filler_modulus: float            # E of the filler, Pa
    geometry: FillerGeometry
    filler_fraction: float

    def __post_init__(self):
        if min(self.matrix_toughness, self.filler_strength,
               self.interfacial_shear_strength, self.filler_modulus) <= 0.0:
            raise ValueError("strengths, moduli and toughness must be positive")
        if self.inclined_strength_constant < 0.0 or self.snubbing_coefficient < 0.0:
            raise ValueError("inclined-strength constant and snubbing coefficient must be >= 0")
        if not 0.0 <= self.filler_fraction < 1.0:
            raise ValueError(f"filler fraction must lie in [0, 1), got {self.filler_fraction}")

    @property
    def cross_section(self) -> float:
        return 0.25 * math.pi * self.geometry.diameter**2

    @property
    def perimeter(self) -> float:
        return math.pi * self.geometry.diameter


class PlanarODF:
    """Planar orientation density sin^(2p-1) cos^(2q-1) on [theta_min, theta_max].

    Shape parameters must satisfy p, q >= 1/2; the random-orientation case is
    p = q = 1/2 (constant density).  The normaliser and the first two moments
    are evaluated by adaptive quadrature at construction.
    """

    def __init__(self, p: float, q: float,
                 theta_min: float = 0.0, theta_max: float = _HALF_PI):
        if p < 0.5 or q < 0.5:
            raise ValueError(f"shape parameters must be >= 1/2, got p={p}, q={q}")
        if not 0.0 <= theta_min < theta_max <= _HALF_PI + 1e-12:
            raise ValueError(f"invalid support [{theta_min}, {theta_max}]")
        self.p = float(p)
        self.q = float(q)
        self.theta_min = float(theta_min)
        self.theta_max = float(theta_max)
        z, err = quad(self._kernel, self.theta_min, self.theta_max,
                      points=self._mode_points(), limit=300,
                      epsabs=0.0, epsrel=1e-12)
        if not np.isfinite(z) or z <= 0.0 or err > 1e-8 * z:
            raise QuadratureNonConvergence(
                f"orientation density normaliser did not converge (p={p}, q={q})"
            )
        self._norm = z

    def _mode_points(self) -> list[float]:
        """Interior mode of the kernel, used to split adaptive quadrature."""
        if self.p > 0.5 and self.q > 0.5:
            mode = math.atan(math.sqrt((2 * self.p - 1) / (2 * self.q - 1)))
            if self.theta_min < mode < self.theta_max:
                return [mode]
        return []

    def _kernel(self, theta: float) -> float:
        return math.sin(theta) ** (2.0 * self.p - 1.0) * math.cos(theta) ** (2.0 * self.q - 1.0)

    def density(self, theta: float) -> float:
        """Normalised density; raises outside the support."""
        if theta < self.theta_min - 1e-12 or theta > self.theta_max + 1e-12:
            raise ValueError(
                f"theta={theta} outside the support [{self.theta_min}, {self.theta_max}]"
            )
        return self._kernel(theta) / self._norm

    def _density_unchecked(self, theta: float) -> float:
        return self._kernel(theta) / self._norm

    def moments(self) -> tuple[float, float]:
        """Mean and standard deviation of the orientation angle."""
        pts = self._mode_points()
        m1, _ = quad(lambda t: t * self._density_unchecked(t),
                     self.theta_min, self.theta_max, points=pts, limit=300,
                     epsabs=0.0, epsrel=1e-12)
        m2, _ = quad(lambda t: t * t * self._density_unchecked(t),
                     self.theta_min, self.theta_max, points=pts, limit=300,
                     epsabs=0.0, epsrel=1e-12)
        return m1, math.sqrt(max(m2 - m1 * m1, 0.0))

    @staticmethod
    def random() -> "PlanarODF":
        return PlanarODF(0.5, 0.5)


def fit_pq(theta_mu: float, theta_sigma: float,
           theta_min: float = 0.0, theta_max: float = _HALF_PI) -> tuple[float, float]:
    """Shape parameters (p, q) whose density matches the target mean and std.

    Solves the two-moment problem by bounded least squares on quadrature
    moments, from several starting points.  Raises
    :class:`InfeasibleTarget` when no (p, q) >= 1/2 reproduces the moments to
    1e-6 (for instance a standard deviation above the uniform-density value).
    """
    if not theta_min <= theta_mu <= theta_max:
        raise ValueError("target mean must lie inside the support")
    if theta_sigma <= 0.0:
        raise ValueError("target standard deviation must be positive")

    def residual(x):
        mu, sigma = PlanarODF(x[0], x[1], theta_min, theta_max).moments()
        return [mu - theta_mu, sigma - theta_sigma]

    starts = [(0.5, 0.5), (2.0, 2.0), (8.0, 1.0), (1.0, 8.0), (25.0, 0.6), (0.6, 25.0)]
    best = None
    for start in starts:
        sol = least_squares(
            residual, start, bounds=([0.5, 0.5], [2e3, 2e3]),
            xtol=1e-14, ftol=1e-14, gtol=1e-14,
        )
        if best is None or sol.cost < best.cost:
            best = sol
        if np.max(np.abs(sol.fun)) < 1e-8:
            best = sol
            break
    if best is None or np.max(np.abs(best.fun)) > 1e-6:
        raise InfeasibleTarget(
            f"no (p, q) >= 1/2 reproduces mean={theta_mu:.6f}, sigma={theta_sigma:.6f} "
            f"on [{theta_min}, {theta_max}]; best moment error {np.max(np.abs(best.fun)):.3e}"
        )
    return float(best.x[0]), float(best.x[1])


# ---------------------------------------------------------------------------
# Bundle statistics and circle packing
# ---------------------------------------------------------------------------

def weibull_fit(n_mu: float, n_sigma: float) -> tuple[float, float]:
    """Weibull (scale, shape) matching a given mean and standard deviation.

    The coefficient of variation of a Weibull variable decreases
    monotonically with the shape parameter, so the shape is bracketed and
    solved by 1D root finding; the scale follows from the mean.
    """
    if n_mu <= 0.0 or n_sigma <= 0.0:
        raise ValueError("mean and standard deviation must be positive")
    target_cv = n_sigma / n_mu

    def cv(k: float) -> float:
        g1 = gamma_fn(1.0 + 1.0 / k)
        g2 = gamma_fn(1.0 + 2.0 / k)
        return math.sqrt(max(g2 - g1 * g1, 0.0)) / g1

    lo, hi = 0.05, 1e4
    if not cv(lo) > target_cv > cv(hi):
        raise InfeasibleTarget(
            f"coefficient of variation {target_cv:.4f} outside the bracketed "
            f"range ({cv(hi):.2e}, {cv(lo):.2e})"
        )
    shape = brentq(lambda k: cv(k) - target_cv, lo, hi, xtol=1e-13, rtol=1e-14)
    scale = n_mu / gamma_fn(1.0 + 1.0 / shape)
    return float(scale), float(shape)


def _weibull_pdf(n: np.ndarray | float, scale: float, shape: float):
    n = np.asarray(n, dtype=float)
    out = np.zeros_like(n)
    pos = n > 0.0
    x = n[pos] / scale
    out[pos] = (shape / scale) * x ** (shape - 1.0) * np.exp(-(x**shape))
    return out if out.ndim else float(out)


def _weibull_cdf(n: float, scale: float, shape: float) -> float:
    return 1.0 - math.exp(-((n / scale) ** shape)) if n > 0.0 else 0.0


@dataclass(frozen=True)
class BundleStatistics:
    """Truncated-Weibull description of the number of fillers per bundle."""

    mean: float
    std: float
    n_min: int
    n_max: int
    scale: float
    shape: float

    @staticmethod
    def fit(mean: float, std: float, n_min: int = 1, n_max: int = 50) -> "BundleStatistics":
        if n_min < 1:
            raise ValueError("minimum bundle size must be at least 1")
        if n_max < n_min:
            raise ValueError("maximum bundle size must be >= minimum")
        scale, shape = weibull_fit(mean, std)
        # moments must round-trip to 1e-8 relative
        g1 = gamma_fn(1.0 + 1.0 / shape)
        g2 = gamma_fn(1.0 + 2.0 / shape)
        mu_back = scale * g1
        sd_back = scale * math.sqrt(g2 - g1 * g1)
        if abs(mu_back - mean) > 1e-8 * mean or abs(sd_back - std) > 1e-8 * std:
            raise InfeasibleTarget("fitted Weibull moments failed to round-trip")
        return BundleStatistics(mean, std, n_min, n_max, scale, shape)


class PackingTable:
    """Equal-circles-in-circle packing data: N -> (R = D_ed/D_cnt, rho_A).

    Tabulated sizes return the stored pair exactly; intermediate sizes use a
    monotone (PCHIP) interpolation of the density with R = sqrt(N / rho_A).
    """

    _REFERENCE_ROWS = {
        1: (1.0, 1.0),
        2: (2.0, 0.5),
        5: (2.701, 0.685),
        10: (3.813, 0.687),
        20: (5.122, 0.762),
        50: (7.947, 0.791),
        100: (11.082, 0.814),
    }

    def __init__(self, rows: dict[int, tuple[float, float]]):
        for n in self._REFERENCE_ROWS:
            if n not in rows:
                raise ValueError(f"packing table is missing the mandatory row N={n}")
        ns = sorted(rows)
        if ns[0] != 1:
            raise ValueError("packing table must start at N=1")
        r_vals = [rows[n][0] for n in ns]
        rho_vals = [rows[n][1] for n in ns]
        if abs(r_vals[0] - 1.0) > 1e-12 or abs(rho_vals[0] - 1.0) > 1e-12:
            raise ValueError("packing table must have R(1) = rho_A(1) = 1")
        if np.any(np.diff(r_vals) <= 0.0):
            raise ValueError("enclosing-diameter ratio must increase with N")
        for n, r, rho in zip(ns, r_vals, rho_vals):
            if abs(r - math.sqrt(n / rho)) > 2e-3 * r:
                raise ValueError(
                    f"inconsistent packing row N={n}: R={r} vs sqrt(N/rho)={math.sqrt(n/rho):.4f}"
                )
        self._rows = {n: rows[n] for n in ns}
        self._ns = np.array(ns, dtype=float)
        self._rho = PchipInterpolator(self._ns, np.array(rho_vals))
        self.n_max = ns[-1]

    @classmethod
    def default(cls) -> "PackingTable":
        return cls(dict(cls._REFERENCE_ROWS))

    @classmethod
    def from_file(cls, path) -> "PackingTable":
        """Load from a two-column text file (N, rho_A); R is derived."""
        rows: dict[int, tuple[float, float]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                n_str, rho_str = line.split()
                n = int(n_str)
                rho = float(rho_str)
                rows[n] = (math.sqrt(n / rho), rho)
        return cls(rows)

    @classmethod
    def bundled_resource(cls) -> "PackingTable":
        """The packing table shipped with the package (two-column file)."""
        ref = resources.files("nanofrac.data") / "circle_packing.txt"
        with resources.as_file(ref) as path:
            return cls.from_file(path)

    def ratio(self, n: float) -> tuple[float, float]:
        """(R, rho_A) for a possibly non-integer bundle size."""
        if n < 1.0 or n > self.n_max:
            raise ValueError(f"bundle size {n} outside the tabulated range [1, {self.n_max}]")
        if float(n).is_integer() and int(n) in self._rows:
            return self._rows[int(n)]
        rho = float(self._rho(n))
        return math.sqrt(n / rho), rho


# ---------------------------------------------------------------------------
# Single-filler / bundle mechanics
# ---------------------------------------------------------------------------

def oblique_strength(theta: float, params: FractureParams) -> float:
    """Rupture stress of an inclined filler, sigma_ult (1 - A tan(theta)).

    Clamped at zero: beyond tan(theta) = 1/A the linear law would turn
    negative, which is unphysical.
    """
    if theta >= _HALF_PI:
        return 0.0
    value = params.filler_strength * (1.0 - params.inclined_strength_constant * math.tan(theta))
    return max(value, 0.0)


def _effective_section(params: FractureParams, bundle_n: float,
                       table: PackingTable | None) -> tuple[float, float]:
    """(area, perimeter) of a single filler or an equivalent bundle fibre."""
    if bundle_n == 1:
        return params.cross_section, params.perimeter
    if table is None:
        table = PackingTable.default()
    r, _ = table.ratio(bundle_n)
    return bundle_n * params.cross_section, math.pi * r * params.geometry.diameter


def critical_length(theta: float, params: FractureParams, bundle_n: float = 1,
                    table: PackingTable | None = None) -> float:
    """Critical embedment length of the pull-out / rupture force balance.

    L_c(theta) = A_eff sigma_ult(theta) / (P_eff tau e^(mu theta)); zero when
    the inclined strength clamps to zero.
    """
    if bundle_n < 1:
        raise ValueError("bundle size must be at least 1")
    area, perimeter = _effective_section(params, bundle_n, table)
    s = oblique_strength(theta, params)
    if s == 0.0:
        return 0.0
    return area * s / (
        perimeter * params.interfacial_shear_strength * math.exp(params.snubbing_coefficient * theta)
    )


def work_of_fracture(l: float, theta: float, bundle_n: float, params: FractureParams,
                     table: PackingTable | None = None,
                     oblique_rupture: bool = False) -> float:
    """Work released by one filler (or bundle fibre) at embedment ``l``.

    Pull-out branch l^2 tau P_eff e^(mu theta) / 2 for l below the critical
    length of a single filler, rupture branch A_eff sigma_ult^2 L / (2 E)
    otherwise.  Bundling enters through the section properties only: the
    pull-out/rupture switch stays at the single-filler critical length, so
    the rupture contribution is size-invariant per unit filler area and the
    pull-out contribution scales exactly with P_eff / A_eff.  The rupture
    branch uses the axial strength regardless of inclination; pass
    ``oblique_rupture=True`` to use the inclined strength instead.
    """
    if l < 0.0 or l > 0.5 * params.geometry.length + 1e-30:
        raise ValueError(f"embedment length {l} outside [0, L/2]")
    area, perimeter = _effective_section(params, bundle_n, table)
    if l < critical_length(theta, params):
        return 0.5 * l * l * params.interfacial_shear_strength * perimeter * math.exp(
            params.snubbing_coefficient * theta
        )
    strength = oblique_strength(theta, params) if oblique_rupture else params.filler_strength
    return area * strength**2 * params.geometry.length / (2.0 * params.filler_modulus)


# ---------------------------------------------------------------------------
# Bridging-energy integrals
# ---------------------------------------------------------------------------

def _gauss_panel(f, a: float, b: float, nodes: int = 64) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.sum(w * f(mid + half * x)))


def _bundle_energy(bundle_n: float, params: FractureParams, odf: PlanarODF,
                   table: PackingTable | None, oblique_rupture: bool = False) -> float:
    """Bridging energy for a fixed bundle size (N=1 is a single filler).

    The embedment integral is done in closed form per angle (cubic pull-out
    branch, constant rupture branch); the angle integral uses panel Gauss
    quadrature with panels split where the clamp activates and where the
    critical length crosses the half-length.
    """
    if bundle_n < 1:
        raise ValueError("bundle size must be at least 1")
    f_p = params.filler_fraction
    if f_p == 0.0:
        return 0.0
    area, perimeter = _effective_section(params, bundle_n, table)
    L = params.geometry.length
    half_l = 0.5 * L
    tau = params.interfacial_shear_strength
    mu = params.snubbing_coefficient
    e_f = params.filler_modulus
    sig = params.filler_strength

    def inner(theta: float) -> float:
        # branch switch at the single-filler critical length for every N
        lc = critical_length(theta, params)
        l_star = min(lc, half_l)
        snub = math.exp(mu * theta)
        pull = tau * perimeter * snub * l_star**3 / 6.0
        work = pull
        if half_l > l_star:
            strength = oblique_strength(theta, params) if oblique_rupture else sig
            work += (half_l - l_star) * area * strength**2 * L / (2.0 * e_f)
        return work

    def integrand(thetas: np.ndarray) -> np.ndarray:
        return np.array([
            math.cos(t) * odf._density_unchecked(t) * inner(t) for t in thetas
        ])

    # panel breakpoints: strength clamp and pull-out/rupture crossover
    breaks = {odf.theta_min, odf.theta_max}
    a_const = params.inclined_strength_constant
    if a_const > 0.0:
        clamp = math.atan(1.0 / a_const)
        if odf.theta_min < clamp < odf.theta_max:
            breaks.add(clamp)
    upper = min(odf.theta_max, math.atan(1.0 / a_const) if a_const > 0 else odf.theta_max)

    def crossing(theta):
        return critical_length(theta, params) - half_l

    lo, hi = odf.theta_min, min(upper, odf.theta_max) - 1e-12
    if hi > lo and crossing(lo) * crossing(hi) < 0.0:
        breaks.add(brentq(crossing, lo, hi, xtol=1e-14))

    pts = sorted(breaks)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a > 1e-14:
            total += _gauss_panel(integrand, a, b)
    return 2.0 * f_p / (area * L) * total


def fracture_energy_uniform(params: FractureParams, odf: PlanarODF,
                            oblique_rupture: bool = False) -> float:
    """Bridging fracture energy of well-dispersed (non-bundled) fillers."""
    return _bundle_energy(1, params, odf, None, oblique_rupture)


def fracture_energy_bundle(bundle_n: float, params: FractureParams, odf: PlanarODF,
                           table: PackingTable | None = None,
                           oblique_rupture: bool = False) -> float:
    """Bridging fracture energy with all fillers in bundles of size ``bundle_n``."""
    if table is None:
        table = PackingTable.default()
    return _bundle_energy(bundle_n, params, odf, table, oblique_rupture)


def fracture_energy_agglomerated(params: FractureParams, odf: PlanarODF,
                                 stats: BundleStatistics,
                                 table: PackingTable | None = None) -> float:
    """Bridging energy averaged over the truncated bundle-size distribution.

    The Weibull density is renormalised over [n_min, n_max] so the weights
    integrate to one; the bundle energy is interpolated over a size grid and
    the weighted integral is evaluated adaptively.
    """
    if table is None:
        table = PackingTable.default()
    if stats.n_max > table.n_max:
        raise ValueError(
            f"bundle sizes up to {stats.n_max} requested but the packing table "
            f"stops at {table.n_max}"
        )
    if stats.n_min == stats.n_max:
        return fracture_energy_bundle(stats.n_min, params, odf, table)

    grid = np.linspace(stats.n_min, stats.n_max, 33)
    g_vals = np.array([_bundle_energy(n, params, odf, table) for n in grid])
    g_interp = PchipInterpolator(grid, g_vals)

    z = _weibull_cdf(stats.n_max, stats.scale, stats.shape) - _weibull_cdf(
        stats.n_min, stats.scale, stats.shape
    )
    if z <= 0.0:
        raise InfeasibleTarget(
            "bundle-size distribution has no mass inside [n_min, n_max]"
        )

    hot = [stats.mean - 4.0 * stats.std, stats.mean, stats.mean + 4.0 * stats.std]
    pts = sorted({min(max(p, stats.n_min), stats.n_max) for p in hot})
    value, err = quad(
        lambda n: g_interp(n) * _weibull_pdf(n, stats.scale, stats.shape) / z,
        stats.n_min, stats.n_max, points=pts, limit=200,
    )
    if err > 1e-6 * max(abs(value), 1e-300):
        raise QuadratureNonConvergence(
            f"bundle-size integral error estimate {err:.3e} too large"
        )
    return float(value)


def total_fracture_energy(params: FractureParams, odf: PlanarODF,
                          agg, stats: BundleStatistics,
                          table: PackingTable | None = None) -> float:
    """Composite fracture energy combining bundled and dispersed fillers.

    G_c = G_0 + (1 - zeta) G_uniform + zeta G_agglomerated, with zeta the
    bundled filler ratio.  Both bridging terms are evaluated at the full
    filler fraction; they are linear in it, so the split is exact.
    """
    zeta = agg.bundled_filler_ratio
    g_uniform = fracture_energy_uniform(params, odf) if zeta < 1.0 else 0.0
    g_agg = fracture_energy_agglomerated(params, odf, stats, table) if zeta > 0.0 else 0.0
    return params.matrix_toughness + (1.0 - zeta) * g_uniform + zeta * g_agg
