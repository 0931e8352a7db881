"""Thomas-Fermi atom (neutral, radial): density, energy, mean-field
potential, exchange-hole quantities and Hellmann channel densities.

Units are Hartree atomic units; the functional is

    E(rho) = int [3/5 gamma rho^{5/3} - Z rho / r] + D(rho, rho),
    gamma = (3 pi^2)^{2/3} / 2,  D(rho, rho) = 1/2 int int rho rho / |x - y|.

Two independent routes are provided: direct projected-gradient
minimization of the discretized functional (``tf_minimize``) and shooting
for the universal profile chi'' = chi^{3/2} / sqrt(x), chi(0) = 1,
chi(inf) = 0 (``tf_ode_solve``), which follows from the Euler-Lagrange
equation gamma rho^{2/3} = phi_TF together with Poisson's equation.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, optimize

from .errors import ConvergenceError, DomainError, GridResolutionError

GAMMA_TF = (3.0 * math.pi ** 2) ** (2.0 / 3.0) / 2.0
# length unit of the universal profile for Z = 1: r = TF_LENGTH * x
TF_LENGTH = (3.0 * math.pi) ** (2.0 / 3.0) / 2.0 ** (7.0 / 3.0)
# the bracketing shots enclose the true profile; their midpoint is used
# while the relative half-gap stays below this
_SHOT_AGREEMENT = 1e-7
# outer end of the tail boundary-value problem, where chi = 144/x^3
_TAIL_X = 1e4


@dataclass(frozen=True)
class RadialDensity:
    """Spherically symmetric density on increasing radial nodes.

    ``total_charge`` is 4 pi int rho r^2 dr by the trapezoid rule in ln r.
    """

    r_nodes: np.ndarray
    values: np.ndarray
    total_charge: float

    @classmethod
    def from_values(cls, r, values):
        r = np.asarray(r, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise DomainError("r_nodes and values must be 1-d arrays of equal length >= 2")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise DomainError("r_nodes must be positive and increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("density values must be finite and nonnegative")
        r.setflags(write=False)
        v.setflags(write=False)
        return cls(r, v, radial_charge(r, v))


@dataclass(frozen=True)
class TFSolution:
    """Solved Thomas-Fermi atom of nuclear charge ``Z``.

    ``potential`` holds phi_TF on ``density.r_nodes``; ``energy`` is E_TF(Z).
    """

    density: RadialDensity
    potential: np.ndarray
    energy: float
    solver_tag: str
    Z: float = 1.0
    slope: float = float("nan")
    details: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def r_nodes(self):
        return self.density.r_nodes

    @property
    def energy_per_z73(self):
        """E_TF(Z) / Z^{7/3}, i.e. E_TF(1)."""
        return self.energy / self.Z ** (7.0 / 3.0)

    def summary(self):
        r = self.r_nodes
        return {"E_TF_1": self.energy_per_z73, "energy": self.energy, "Z": self.Z,
                "slope": self.slope, "route": self.solver_tag,
                "total_charge": self.density.total_charge,
                "grid": {"r_min": float(r[0]), "r_max": float(r[-1]), "N": int(r.size)}}


def radial_charge(r, values):
    """4 pi int rho r^2 dr, trapezoid rule in u = ln r."""
    r = np.asarray(r, dtype=float)
    return float(np.trapezoid(4.0 * math.pi * r ** 3 * np.asarray(values), np.log(r)))


def radial_grid(r_min=1e-5, r_max=50.0, n=1600):
    """Log-spaced radial nodes."""
    if not (0 < r_min < r_max) or n < 2:
        raise DomainError("need 0 < r_min < r_max and n >= 2")
    return np.exp(np.linspace(math.log(r_min), math.log(r_max), int(n)))


# ------------------------------------------------------------ minimization

class _Functional:
    """Discretized TF functional on a log grid.

    Trapezoid weights in ln r; the cell [0, r_0] is added analytically with
    the small-r law rho = rho_0 (r_0/r)^{3/2}.  The Hartree potential uses
    Newton's theorem (enclosed charge / r + outer integral of rho / r') with
    prefix sums, so D = 1/2 q^T U is an exact symmetric quadratic form.
    """

    def __init__(self, r, Z):
        self.r = r
        self.Z = float(Z)
        u = np.log(r)
        h = np.diff(u)
        cell = np.zeros_like(r)
        cell[:-1] += 0.5 * h
        cell[1:] += 0.5 * h
        self.w = 4.0 * math.pi * r ** 3 * cell
        r0 = r[0]
        self.c_kin = 8.0 * math.pi * r0 ** 3
        self.c_ne = 8.0 * math.pi * r0 ** 2
        self.c_q = 8.0 * math.pi * r0 ** 3 / 3.0

    def charges(self, rho):
        q = self.w * rho
        q[0] += self.c_q * rho[0]
        return q

    def hartree(self, q):
        inner = np.cumsum(q)
        qr = q / self.r
        outer = np.cumsum(qr[::-1])[::-1] - qr
        return inner / self.r + outer

    def terms(self, rho):
        q = self.charges(rho)
        u = self.hartree(q)
        kin = 0.6 * GAMMA_TF * (np.sum(self.w * rho ** (5.0 / 3.0))
                                + self.c_kin * rho[0] ** (5.0 / 3.0))
        ne = -self.Z * (np.sum(self.w * rho / self.r) + self.c_ne * rho[0])
        ee = 0.5 * float(np.sum(q * u))
        return float(kin), float(ne), ee, u

    def value_and_gradient(self, rho):
        kin, ne, ee, u = self.terms(rho)
        g = self.w * (GAMMA_TF * rho ** (2.0 / 3.0) - self.Z / self.r + u)
        g[0] += (GAMMA_TF * self.c_kin * rho[0] ** (2.0 / 3.0) - self.Z * self.c_ne
                 + self.c_q * u[0])
        return kin + ne + ee, g


def tf_minimize(radial_grid=None, iterations=20000, step_policy="armijo", Z=1.0, tol=1e-9):
    """Minimize the TF functional by projected gradient descent.

    Parameters
    ----------
    radial_grid : ndarray, optional
        Log-spaced nodes spanning at least [1e-5, 50] with >= 400 nodes;
        default 1600 nodes on [1e-5, 50].
    iterations : int
        Iteration cap.
    step_policy : {"armijo", "fixed"}
        "armijo": backtracking from a step that doubles after each
        accepted iteration; "fixed": backtracking from unit step.
    Z : float
        Nuclear charge (the grid is used as given, in physical units).
    tol : float
        Converged when the relative energy change drops below ``tol``.

    The descent direction is the functional derivative scaled pointwise by
    the inverse curvature of the rho^{5/3} term, (3/(2 gamma)) rho^{1/3},
    and projected onto rho >= 0.
    """
    r = _default_nodes() if radial_grid is None else np.asarray(radial_grid, dtype=float)
    if r.size < 400:
        raise DomainError("tf_minimize needs at least 400 radial nodes")
    if r[0] > 1e-5 * (1 + 1e-9) or r[-1] < 50.0 * (1 - 1e-9):
        raise DomainError("radial grid must span [1e-5, 50]")
    if step_policy not in ("armijo", "fixed"):
        raise DomainError(f"unknown step policy {step_policy!r}")
    if not Z > 0:
        raise DomainError("Z must be positive")
    f = _Functional(r, Z)
    # hydrogen-like start with the TF small-r behaviour
    scale = Z ** (1.0 / 3.0)
    rho = 0.1 * Z ** 2 * np.exp(-r * scale) / (r * scale) ** 1.5
    e, g = f.value_and_gradient(rho)
    t = 1.0
    projected = 0
    converged = False
    it = 0
    for it in range(1, int(iterations) + 1):
        precond = np.maximum(rho, 1e-12 * Z * Z) ** (1.0 / 3.0) / (2.0 / 3.0 * GAMMA_TF)
        direction = precond * g / f.w
        if step_policy == "fixed":
            t = 1.0
        while True:
            trial = rho - t * direction
            clipped = trial < 0
            new = np.where(clipped, 0.0, trial)
            e_new, g_new = f.value_and_gradient(new)
            if e_new <= e - 1e-4 * float(np.dot(g, rho - new)) or t < 1e-14:
                break
            t *= 0.5
        projected = int(np.count_nonzero(clipped))
        change = abs(e - e_new) / abs(e_new)
        rho, e, g = new, e_new, g_new
        if step_policy == "armijo":
            t = min(1.0, 2.0 * t)
        if change < tol and it > 5:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"TF minimization not converged after {iterations} iterations "
            f"(last relative change {change:.3e})")
    kin, ne, ee, u = f.terms(rho)
    phi = Z / r - u
    dens = RadialDensity.from_values(r, rho)
    details = {"iterations": it, "projected_nodes": projected, "kinetic": kin,
               "nuclear": ne, "repulsion": ee, "virial_ratio": kin / -e,
               "repulsion_ratio": ee / -ne, "step_policy": step_policy}
    pot = np.asarray(phi, dtype=float)
    pot.setflags(write=False)
    return TFSolution(dens, pot, float(e), "minimize", float(Z), float("nan"), details)


# -------------------------------------------------------------- shooting

def _profile_rhs(x, y):
    c = y[0] if y[0] > 0 else 0.0
    return [y[1], c * math.sqrt(c) / math.sqrt(x)]


def _shoot(slope, x_max):
    """Integrate the profile; returns (sign, solution).

    sign -1: chi reached zero (slope too steep); +1: chi' turned positive
    (slope too shallow); 0: reached x_max.
    """
    x0 = 1e-8
    y0 = [1.0 + slope * x0 + 4.0 / 3.0 * x0 ** 1.5, slope + 2.0 * math.sqrt(x0)]

    def hit_zero(x, y):
        return y[0]

    def turn_up(x, y):
        return y[1]

    hit_zero.terminal = turn_up.terminal = True
    sol = integrate.solve_ivp(_profile_rhs, (x0, x_max), y0, method="DOP853", rtol=1e-12,
                              atol=1e-14, events=[hit_zero, turn_up], dense_output=True)
    if sol.t_events[0].size:
        return -1, sol
    if sol.t_events[1].size:
        return 1, sol
    return 0, sol


def _tail_profile(x_m, c_m, x):
    """Profile on x >= x_m through chi(x_m) = c_m, decaying like 144/x^3.

    Solved in t = ln x: chi_tt = chi_t + e^{3t/2} chi^{3/2}.
    """
    t0, t1 = math.log(x_m), math.log(_TAIL_X)
    t = np.linspace(t0, t1, 400)
    # Sommerfeld-shaped initial guess
    a, lam = 12.0 ** (2.0 / 3.0), 0.772
    g = (1.0 + (np.exp(t) / a) ** lam) ** (-3.0 / lam)
    g *= c_m / g[0]
    guess = np.vstack([g, np.gradient(g, t)])

    def rhs(tt, y):
        c = np.maximum(y[0], 0.0)
        return np.vstack([y[1], y[1] + np.exp(1.5 * tt) * c * np.sqrt(c)])

    def bc(ya, yb):
        return np.array([ya[0] - c_m, yb[0] - 144.0 / _TAIL_X ** 3])

    sol = integrate.solve_bvp(rhs, bc, t, guess, tol=1e-9, max_nodes=200000)
    if not sol.success:
        raise ConvergenceError(f"TF tail continuation failed: {sol.message}")
    tx = np.log(np.asarray(x, dtype=float))
    out = sol.sol(np.minimum(tx, t1))[0]
    far = tx > t1
    out[far] = 144.0 / np.exp(3.0 * tx[far])
    return out


def tf_ode_solve(shoot_tolerance=1e-10, radial_grid=None, Z=1.0):
    """Universal TF profile by bisection shooting on chi'(0).

    Parameters
    ----------
    shoot_tolerance : float in (1e-12, 1e-4)
        Final width of the slope bracket.
    radial_grid : ndarray, optional
        Nodes (physical units) on which rho and phi_TF are tabulated;
        default 1600 log-spaced nodes on [1e-5, 50] Z^{-1/3}.
    Z : float

    The bracketing shots enclose the profile and agree up to some x_sep
    (round-off limits this to x ~ 10); beyond it the profile is continued
    by a boundary-value solve on [x_sep, 1e4] with chi(1e4) = 144/x^3.
    E_TF(Z) = (3/7) Z^{7/3} chi'(0) / TF_LENGTH (virial theorem with
    int rho/r = -Z chi'(0)/b_Z, b_Z = TF_LENGTH Z^{-1/3}).
    """
    if not (1e-12 < shoot_tolerance < 1e-4):
        raise DomainError("shoot_tolerance must lie in (1e-12, 1e-4)")
    if not Z > 0:
        raise DomainError("Z must be positive")
    b = TF_LENGTH * Z ** (-1.0 / 3.0)
    r = radial_grid_default(Z) if radial_grid is None else np.asarray(radial_grid, float)
    x_max = max(200.0, 2.0 * r[-1] / b)
    lo, hi = -2.0, -1.0
    s_lo, sol_lo = _shoot(lo, x_max)
    s_hi, sol_hi = _shoot(hi, x_max)
    if not (s_lo == -1 and s_hi == 1):
        raise ConvergenceError("bracketing failure: initial slopes do not straddle the profile")
    while hi - lo > shoot_tolerance:
        mid = 0.5 * (lo + hi)
        s, sol = _shoot(mid, x_max)
        if s <= 0:
            lo, sol_lo = mid, sol
        else:
            hi, sol_hi = mid, sol
    slope = 0.5 * (lo + hi)

    x = r / b
    x_end = min(sol_lo.t[-1], sol_hi.t[-1])
    xs = np.clip(x, sol_lo.t[0], x_end)
    c_lo = sol_lo.sol(xs)[0]
    c_hi = sol_hi.sol(xs)[0]
    chi = 0.5 * (c_lo + c_hi)
    bad = (0.5 * np.abs(c_hi - c_lo) > _SHOT_AGREEMENT * np.abs(chi)) | (x > x_end) | (chi <= 0)
    x_sep = float(x[np.argmax(bad)]) if np.any(bad) else float("inf")
    if np.any(bad):
        k = int(np.argmax(bad))
        if k == 0:
            raise ConvergenceError("shooting profile unusable on the requested grid")
        x_m, c_m = x[k - 1], chi[k - 1]
        chi = np.where(np.arange(x.size) >= k, _tail_profile(x_m, c_m, x), chi)
    small = x < sol_lo.t[0]
    chi = np.where(small, 1.0 + slope * x, chi)

    phi = Z * chi / r
    rho = (phi / GAMMA_TF) ** 1.5
    energy = 3.0 / 7.0 * Z ** (7.0 / 3.0) * slope / TF_LENGTH
    dens = RadialDensity.from_values(r, rho)
    f = _Functional(r, Z)
    kin, ne, ee, _ = f.terms(np.asarray(rho, float))
    details = {"bracket": [lo, hi], "x_separation": x_sep,
               "functional_energy": kin + ne + ee, "kinetic": kin, "nuclear": ne,
               "repulsion": ee, "virial_ratio": kin / -energy}
    pot = np.asarray(phi, dtype=float)
    pot.setflags(write=False)
    return TFSolution(dens, pot, float(energy), "ode", float(Z), float(slope), details)


def _default_nodes():
    return radial_grid(1e-5, 50.0, 1600)


def radial_grid_default(Z=1.0, n=1600):
    """[1e-5, 50] in Z = 1 units, scaled by Z^{-1/3}."""
    s = Z ** (-1.0 / 3.0)
    return radial_grid(1e-5 * s, 50.0 * s, n)


# ------------------------------------------------------------- evaluation

def _scaled(sol, Z):
    """(factor, length) with phi_Z(r) = factor * phi_sol(length * r)."""
    if Z is None:
        return 1.0, 1.0, sol.Z
    if not Z > 0:
        raise DomainError("Z must be positive")
    t = Z / sol.Z
    return t ** (4.0 / 3.0), t ** (1.0 / 3.0), float(Z)


def _phi_r_spline(sol):
    cache = sol._cache
    if "phi_r" not in cache:
        r = sol.r_nodes
        cache["phi_r"] = interpolate.CubicSpline(np.log(r), sol.potential * r)
    return cache["phi_r"]


def tf_potential(sol, r, Z=None):
    """phi_TF at radius r (scalar or array), optionally rescaled to charge Z.

    Cubic interpolation of phi r in ln r inside the grid; below the grid
    phi r = Z + phi'(0)-type linear continuation, above it a power law
    through the last two nodes (with a warning).  Clipped to [0, Z/r].
    """
    fac, length, zz = _scaled(sol, Z)
    r_in = np.asarray(r, dtype=float)
    if np.any(~(r_in > 0)):
        raise DomainError("r must be positive")
    rs = np.atleast_1d(r_in * length)
    nodes = sol.r_nodes
    pr = sol.potential * nodes
    out = np.empty_like(rs)
    inside = (rs >= nodes[0]) & (rs <= nodes[-1])
    out[inside] = _phi_r_spline(sol)(np.log(rs[inside]))
    below = rs < nodes[0]
    if np.any(below):
        # phi r is linear in r near the nucleus
        out[below] = sol.Z + (pr[0] - sol.Z) / nodes[0] * rs[below]
    above = rs > nodes[-1]
    if np.any(above):
        warnings.warn("tf_potential: radius beyond the grid, power-law extrapolation")
        if pr[-1] > 0 and pr[-2] > 0:
            k = math.log(pr[-1] / pr[-2]) / math.log(nodes[-1] / nodes[-2])
            out[above] = pr[-1] * (rs[above] / nodes[-1]) ** k
        else:
            out[above] = 0.0
    out = np.clip(out, 0.0, sol.Z) / rs * fac
    out = np.minimum(out, zz / (rs / length))
    return float(out[0]) if r_in.ndim == 0 else out


def _density_fn(sol):
    cache = sol._cache
    if "rho" not in cache:
        r = sol.r_nodes
        # rho r^{3/2} is bounded at small r; pchip keeps it nonnegative
        cache["rho"] = interpolate.PchipInterpolator(np.log(r), sol.density.values * r ** 1.5,
                                                     extrapolate=False)
    spline = cache["rho"]
    r0, r1 = sol.r_nodes[0], sol.r_nodes[-1]
    v0 = sol.density.values[0] * r0 ** 1.5

    def rho(s):
        if s <= 0:
            return 0.0
        if s < r0:
            return v0 / s ** 1.5
        if s > r1:
            return 0.0
        return float(spline(math.log(s))) / s ** 1.5
    return rho


def _shell_integral(rho, r, R, integrand):
    """int_0^inf rho(s) integrand(s) ds over the shells touching the ball
    of radius R about a point at distance r from the nucleus."""
    top = r + R
    pts = sorted({p for p in (abs(r - R), top) if p > 0})
    total = 0.0
    edges = [0.0] + pts
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        # graded split at small radii where rho ~ s^{-3/2}
        sub = [a] + [c for c in (1e-6, 1e-4, 1e-2, 1.0) if a < c < b] + [b]
        for c0, c1 in zip(sub[:-1], sub[1:]):
            with warnings.catch_warnings():
                # roundoff notices near the tiny outer density are harmless
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                v, _ = integrate.quad(lambda s: rho(s) * integrand(s), c0, c1, limit=200,
                                      epsabs=1e-13, epsrel=1e-10)
            total += v
    return total


def _enclosed(rho, r, R):
    if r == 0:
        return _shell_integral(rho, 0.0, R, lambda s: 4.0 * math.pi * s * s if s < R else 0.0)

    def f(s):
        hi = min(R, r + s)
        lo = abs(r - s)
        if hi <= lo:
            return 0.0
        return math.pi * s / r * (hi * hi - lo * lo)
    return _shell_integral(rho, r, R, f)


def _hole_potential(rho, r, R):
    if r == 0:
        return _shell_integral(rho, 0.0, R, lambda s: 4.0 * math.pi * s if s < R else 0.0)

    def f(s):
        hi = min(R, r + s)
        lo = abs(r - s)
        if hi <= lo:
            return 0.0
        return 2.0 * math.pi * s / r * (hi - lo)
    return _shell_integral(rho, r, R, f)


def enclosed_charge(sol, r, R):
    """Charge of the solution inside the ball of radius R about a point at
    distance r from the nucleus."""
    if r < 0 or R < 0:
        raise DomainError("r and R must be nonnegative")
    return _enclosed(_density_fn(sol), float(r), float(R))


def exchange_hole(sol, r, charge=0.5, rtol=1e-10):
    """(R, L): radius of the smallest ball about the point at distance r
    holding ``charge`` electrons, and the potential of that charge at the
    point, L = int_{|x-y|<R} rho(y) / |x-y| dy."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    if sol.density.total_charge < charge:
        raise DomainError(f"total charge {sol.density.total_charge:.6g} below {charge}")
    rho = _density_fn(sol)
    r = float(r)
    r_far = r + sol.r_nodes[-1]
    if _enclosed(rho, r, r_far) < charge:
        raise GridResolutionError("half-charge radius not reachable on the grid")
    R = optimize.brentq(lambda x: _enclosed(rho, r, x) - charge, 0.0, r_far, rtol=rtol,
                        xtol=1e-14)
    return float(R), float(_hole_potential(rho, r, R))


def electron_potential(sol, r):
    """Full electronic potential int rho(y)/|x-y| dy at radius r."""
    return float(sol.Z / r - tf_potential(sol, r))


# --------------------------------------------------------------- Hellmann

def _occupation_factor(a, Z):
    base = 1.0 - a * Z ** -0.5
    if a < 0 or base < 0:
        raise DomainError("need a >= 0 and a <= sqrt(Z)")
    return base ** (2.0 / 3.0)


def hellmann_density(sol, l, r, a=0.0, Z=None):
    """Semiclassical radial density of angular momentum l,

        sigma_l(r) = (2(2l+1)/pi) sqrt(2 [n_Z phi_TF(r) - (l+1/2)^2/(2 r^2)]_+),

    n_Z = (1 - a Z^{-1/2})^{2/3}; phi_TF is rescaled from ``sol`` to charge Z.
    """
    if int(l) != l or l < 0:
        raise DomainError("l must be a nonnegative integer")
    zz = sol.Z if Z is None else Z
    n = _occupation_factor(a, zz)
    r_in = np.asarray(r, dtype=float)
    phi = tf_potential(sol, r_in, Z)
    arg = np.maximum(n * phi - (l + 0.5) ** 2 / (2.0 * r_in ** 2), 0.0)
    return 2.0 * (2 * l + 1) / math.pi * np.sqrt(2.0 * arg)


def _effective_max(sol, n, Z):
    """(r*, max_r 2 r^2 n phi(r)) for the rescaled potential."""
    fac, length, _ = _scaled(sol, Z)
    r = sol.r_nodes
    g = 2.0 * n * sol.potential * r * r
    k = int(np.argmax(g))
    lo, hi = r[max(k - 1, 0)], r[min(k + 1, r.size - 1)]
    res = optimize.minimize_scalar(lambda u: -2.0 * n * tf_potential(sol, math.exp(u)) *
                                   math.exp(2 * u), bounds=(math.log(lo), math.log(hi)),
                                   method="bounded", options={"xatol": 1e-12})
    r_star = math.exp(res.x)
    # phi_Z(r) r^2 = fac / length^2 * phi(length r) (length r)^2
    return r_star / length, float(-res.fun) * fac / length ** 2


def hellmann_support(sol, l, a=0.0, Z=None):
    """Support interval [r_1, r_2] of sigma_l, or None if sigma_l = 0."""
    zz = sol.Z if Z is None else Z
    n = _occupation_factor(a, zz)
    r_star, gmax = _effective_max(sol, n, Z)
    c = (l + 0.5) ** 2
    if gmax <= c:
        return None

    def f(x):
        return 2.0 * n * tf_potential(sol, x, Z) * x * x - c
    lo = sol.r_nodes[0] / _scaled(sol, Z)[1]
    hi = sol.r_nodes[-1] / _scaled(sol, Z)[1]
    r1 = optimize.brentq(f, lo, r_star, xtol=1e-14, rtol=1e-12) if f(lo) < 0 else lo
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r2 = optimize.brentq(f, r_star, hi, xtol=1e-14, rtol=1e-12) if f(hi) < 0 else hi
    return float(r1), float(r2)


def hellmann_occupation(sol, l, a=0.0, Z=None):
    """int sigma_l dr / (2(2l+1)): number of occupied radial levels."""
    sup = hellmann_support(sol, l, a, Z)
    if sup is None:
        return 0.0
    r1, r2 = sup
    v, _ = integrate.quad(lambda x: float(hellmann_density(sol, l, x, a, Z)), r1, r2,
                          limit=400, epsrel=1e-10)
    return v / (2.0 * (2 * l + 1))


def max_angular_momentum(sol, a=0.0, Z=None):
    """Smallest l >= 0 with sigma_l identically zero."""
    zz = sol.Z if Z is None else Z
    n = _occupation_factor(a, zz)
    _, gmax = _effective_max(sol, n, Z)
    # sigma_l = 0 iff (l + 1/2)^2 >= max 2 r^2 n phi
    l = max(0, int(math.ceil(math.sqrt(gmax) - 0.5)))
    while (l + 0.5) ** 2 < gmax:
        l += 1
    while l > 0 and (l - 0.5) ** 2 >= gmax:
        l -= 1
    return l


def profile_csv(sol, digits=12):
    """CSV text with columns r, rho, phi_TF."""
    lines = ["r,rho,phi_TF"]
    for r, d, p in zip(sol.r_nodes, sol.density.values, sol.potential):
        lines.append(f"{r:.{digits}g},{d:.{digits}g},{p:.{digits}g}")
    return "\n".join(lines) + "\n"


__all__ = ["GAMMA_TF", "TF_LENGTH", "RadialDensity", "TFSolution", "radial_grid",
           "radial_grid_default", "radial_charge", "tf_minimize", "tf_ode_solve",
           "tf_potential", "exchange_hole", "enclosed_charge", "electron_potential",
           "hellmann_density", "hellmann_support", "hellmann_occupation",
           "max_angular_momentum", "profile_csv"]
