"""Verification harness for exactly checkable identities and inequalities
of the reduced hydrogenic operators.

Every check returns a CheckReport with passed <=> max_residual <= threshold.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import (KAPPA_B, AngularChannel, OperatorKind, critical_coupling_b,
                       critical_coupling_c)
from .discretize import assemble, build_grid, decomposition_residual
from .errors import DomainError
from .spectra import eigenvalues
from .special import energy_dispersion, legendre_q_cosh

DEFAULT_SEED = 20240601
POSITIVITY_EPS = 1e-8
GSR_THRESHOLD = 1e-6


@dataclass
class CheckReport:
    name: str
    samples: int
    max_residual: float
    threshold: float
    passed: bool = field(init=False)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.max_residual <= self.threshold)

    def to_dict(self):
        return asdict(self)


def default_verify_grid(n=2400):
    """Log-uniform grid on [1e-4, 1e4] used when no grid is given."""
    return build_grid(1e-4, 1e4, n, "log-uniform")


def default_test_functions():
    """Smooth test functions f(p), decaying at both ends of the grid."""
    return [
        ("p exp(-p)", lambda p: p * np.exp(-p)),
        ("p^2 exp(-p)", lambda p: p ** 2 * np.exp(-p)),
        ("p exp(-p^2)", lambda p: p * np.exp(-p * p)),
        ("p / (1 + p^2)^2", lambda p: p / (1.0 + p * p) ** 2),
        ("p^3 exp(-2p)", lambda p: p ** 3 * np.exp(-2.0 * p)),
        ("exp(-ln(p)^2) / p", lambda p: np.exp(-np.log(p) ** 2) / p),
    ]


def _massless_setup(kind, index):
    kind = OperatorKind.parse(kind)
    if kind == OperatorKind.BROWN_RAVENHALL_MASSLESS:
        two_j = int(index)
        return kind, AngularChannel(two_j, two_j // 2), critical_coupling_b(two_j)
    if kind == OperatorKind.CHANDRASEKHAR_MASSLESS:
        l = int(index)
        ch = AngularChannel(2 * l + 1, l)
        return kind, ch, critical_coupling_c(l)
    raise DomainError("ground-state representation is checked for massless kinds only")


def kernel_tail_integral(l, d, upper=80.0):
    """int_d^inf Q_l(cosh s) ds for d > 0 (vectorized).

    Geometrically graded panels [d 2^k, d 2^{k+1}] with 20-point
    Gauss-Legendre each keep the log-like growth near s = 0 resolved;
    the integrand is below 1e-34 beyond ``upper``.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d <= 0):
        raise DomainError("tail integral needs d > 0")
    x, wx = np.polynomial.legendre.leggauss(20)
    out = np.zeros_like(d)
    lo = d.copy()
    while True:
        active = lo < upper
        if not np.any(active):
            break
        a = lo[active]
        b = np.minimum(2.0 * a, upper)
        b = np.maximum(b, a + 1e-3)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        s = mid[:, None] + half[:, None] * x[None, :]
        out[active] += half * (legendre_q_cosh(l, s.ravel()).reshape(s.shape) @ wx)
        lo[active] = b
    return out


def _outside_fraction(kind, ch, kc, grid):
    """kappa_c int_{outside} k(p, q) dq / q for each node: the share of the
    kernel row integral lying beyond the discretized u-interval."""
    u = grid.log_nodes
    if grid.scheme == "log-uniform":
        # the lattice rule covers [u_1 - h/2, u_N + h/2]
        h = grid.log_weights[0]
        a, b = u[0] - 0.5 * h, u[-1] + 0.5 * h
    else:
        a, b = np.log(grid.p_min), np.log(grid.p_max)
    if kind == OperatorKind.BROWN_RAVENHALL_MASSLESS:
        degrees = (ch.two_j // 2, ch.two_j // 2 + 1)
    else:
        degrees = (ch.l,)
    tot = np.zeros(grid.n)
    for l in degrees:
        tot += kernel_tail_integral(l, u - a) + kernel_tail_integral(l, b - u)
    return kc * tot / (np.pi * len(degrees))


def gsr_residual(kind, index, test_functions=None, grid=None, threshold=GSR_THRESHOLD):
    """Ground-state representation at the channel-critical coupling.

    For g(p) = p f(p) and a momentum interval [a, b] the critical massless
    quadratic form equals

        (kappa_c / 2) int int_{[a,b]^2} |g(p) - g(q)|^2 k(p, q) dp dq / (p q)
        + int_a^b g(p)^2 / p * kappa_c int_{q not in [a,b]} k(p, q) dq / q dp,

    the second term being the boundary truncation (it vanishes on the
    half-line).  The double integral uses the same quadrature as the
    assembled matrix; the truncation integral is computed separately to
    near machine precision.  The report holds the largest relative
    difference over the test functions.

    ``index`` is two_j for BrownRavenhallMassless and l for
    ChandrasekharMassless.
    """
    kind, ch, kc = _massless_setup(kind, index)
    grid = grid or default_verify_grid()
    tests = default_test_functions() if test_functions is None else test_functions
    m = assemble(kind, ch, kc, grid)
    p, w = grid.nodes, grid.weights
    om = grid.log_weights
    # off-diagonal kernel from the matrix itself: -M_ij / (kappa sqrt(w_i w_j))
    sq = np.sqrt(w)
    k = -m.entries / (kc * np.outer(sq, sq))
    np.fill_diagonal(k, 0.0)
    outside = _outside_fraction(kind, ch, kc, grid)
    worst = 0.0
    rows = {}
    for name, fn in tests:
        f = fn(p)
        x = sq * f
        if float(x @ x) < 1e-30:
            raise DomainError(f"test function {name!r} has negligible norm on the grid")
        form = float(x @ (m.entries @ x))
        g = p * f
        diff2 = (g[:, None] - g[None, :]) ** 2
        dirichlet = 0.5 * kc * float(np.sum(diff2 * k * np.outer(om, om)))
        boundary = float(np.sum(om * g * g * outside))
        rhs = dirichlet + boundary
        rel = abs(form - rhs) / abs(rhs)
        rows[name] = {"form": form, "dirichlet": dirichlet, "boundary": boundary,
                      "relative": rel}
        worst = max(worst, rel)
    return CheckReport(f"gsr[{kind.value},{index}]", len(tests), worst, threshold,
                       {"kappa": kc, "grid": grid.descriptor, "functions": rows})


def comparison_margin(grid=None, c=None, eps=POSITIVITY_EPS):
    """Lower bound of b^0_{1/2,0}(kappa^B) - c * c^0_0(kappa^C), c = 1/(1 + (2/pi)^2).

    Reports max(0, -lambda_min) / ||M_B|| against ``eps``.
    """
    grid = grid or default_verify_grid()
    c = 1.0 / (1.0 + (2.0 / np.pi) ** 2) if c is None else c
    ch = AngularChannel(1, 0)
    mb = assemble(OperatorKind.BROWN_RAVENHALL_MASSLESS, ch, KAPPA_B, grid)
    mc = assemble(OperatorKind.CHANDRASEKHAR_MASSLESS, ch, 2.0 / np.pi, grid)
    lam = float(eigenvalues(mb.entries - c * mc.entries, 1)[0])
    nb = mb.norm()
    return CheckReport("comparison", grid.n, max(0.0, -lam) / nb, eps,
                       {"c": c, "min_eigenvalue": lam, "norm": nb, "grid": grid.descriptor})


def twisting_inequalities(samples=10 ** 6, log_range=(-4.0, 4.0), seed=DEFAULT_SEED,
                          tol=1e-14):
    """Pointwise twisting bounds on random momentum pairs:

        (phi_0(p) - phi_0(q))^2 <= (p - q)^2 / (8 E(p)^2 E(q)^2)
        (phi_1(p) - phi_1(q))^2 <= (p - q)^2 / (E(p) E(q))

    Momenta are log-uniform in 10^log_range plus the exact point p = 0.
    Differences are formed without cancellation; the residual is the
    largest relative excess LHS/RHS - 1.
    """
    if samples < 1:
        raise DomainError("need at least one sample")
    rng = np.random.default_rng(seed)
    p = 10.0 ** rng.uniform(*log_range, samples)
    q = 10.0 ** rng.uniform(*log_range, samples)
    p[0] = 0.0
    ep, eq = energy_dispersion(p), energy_dispersion(q)
    # E(q) - E(p) and phi_nu(p)^2 - phi_nu(q)^2 = +-(E(q) - E(p)) / (2 E(p) E(q))
    de = (q - p) * (q + p) / (ep + eq)
    sq_diff = de / (2.0 * ep * eq)
    f0p, f0q = np.sqrt(0.5 + 0.5 / ep), np.sqrt(0.5 + 0.5 / eq)
    f1p = np.sqrt(p * p / (2.0 * ep * (ep + 1.0)))
    f1q = np.sqrt(q * q / (2.0 * eq * (eq + 1.0)))
    d0 = sq_diff / (f0p + f0q)
    s1 = f1p + f1q
    d1 = np.where(s1 > 0, sq_diff / np.where(s1 > 0, s1, 1.0), 0.0)
    lhs0, rhs0 = d0 * d0, (p - q) ** 2 / (8.0 * ep ** 2 * eq ** 2)
    lhs1, rhs1 = d1 * d1, (p - q) ** 2 / (ep * eq)
    ok = rhs0 > 0
    ex0 = np.max(lhs0[ok] / rhs0[ok] - 1.0)
    ex1 = np.max(lhs1[ok] / rhs1[ok] - 1.0)
    worst = float(max(ex0, ex1, -1.0))
    viol = int(np.sum(lhs0[ok] > rhs0[ok] * (1 + tol)) + np.sum(lhs1[ok] > rhs1[ok] * (1 + tol)))
    return CheckReport("twisting", samples, max(worst, 0.0), tol,
                       {"violations": viol, "max_ratio_phi0": float(ex0 + 1.0),
                        "max_ratio_phi1": float(ex1 + 1.0), "seed": seed})


def _min_eigs(kind, ch, kappa, grid):
    """(lambda_min(M), ||M||, mu_min) with mu_min the lowest eigenvalue of
    T^{-1/2} M T^{-1/2}, T = diag(p): the form relative to its kinetic part."""
    m = assemble(kind, ch, kappa, grid, allow_supercritical=True)
    lam = float(eigenvalues(m, 1)[0])
    d = 1.0 / np.sqrt(grid.nodes)
    mu = float(eigenvalues(m.entries * np.outer(d, d), 1)[0])
    return lam, m.norm(), mu


def critical_positivity(grid=None, eps=POSITIVITY_EPS, overshoot=1.01, max_widen=3):
    """Massless critical operators are nonnegative; slightly supercritical
    ones are not.

    Checks b^0_j(kappa^B_j) for j in {1/2, 3/2} and c^0_l(kappa^C_l) for
    l in {0, 1}: lambda_min(M) >= -eps ||M||.

    Sharpness uses the scale-free ratio mu = min <f, A f> / <f, |p| f>,
    which is >= 0 at criticality and tends to 1 - overshoot for a wide
    enough log-range.  At overshoot * kappa_c the grid is widened
    downwards (p_min / 10^4, N grown with the log-range so the step stays
    fixed) until mu < -eps; a case that never turns negative within
    ``max_widen`` widenings fails the check.
    """
    grid = grid or build_grid(1e-4, 1e4, 800, "log-uniform")
    cases = [
        (OperatorKind.BROWN_RAVENHALL_MASSLESS, AngularChannel(1, 0), critical_coupling_b(1)),
        (OperatorKind.BROWN_RAVENHALL_MASSLESS, AngularChannel(3, 1), critical_coupling_b(3)),
        (OperatorKind.CHANDRASEKHAR_MASSLESS, AngularChannel(1, 0), critical_coupling_c(0)),
        (OperatorKind.CHANDRASEKHAR_MASSLESS, AngularChannel(1, 1), critical_coupling_c(1)),
    ]
    worst = 0.0
    rows = []
    sharp_ok = True
    for kind, ch, kc in cases:
        lam, nrm, mu = _min_eigs(kind, ch, kc, grid)
        rel = max(0.0, -lam / nrm)
        worst = max(worst, rel)
        g = grid
        sharp = False
        mu_s = None
        for _ in range(max_widen + 1):
            _, _, mu_s = _min_eigs(kind, ch, overshoot * kc, g)
            if mu_s < -eps:
                sharp = True
                break
            span = np.log(g.p_max / g.p_min)
            n_new = int(round(g.n * (span + np.log(1e4)) / span))
            g = build_grid(g.p_min / 1e4, g.p_max, n_new, g.scheme)
        sharp_ok &= sharp
        rows.append({"kind": kind.value, "channel": ch.label(), "kappa": kc,
                     "min_eigenvalue": lam, "relative": rel, "kinetic_ratio": mu,
                     "supercritical_ratio": mu_s, "supercritical_negative": sharp,
                     "supercritical_grid": g.descriptor})
    residual = worst if sharp_ok else float("inf")
    return CheckReport("critical_positivity", len(cases), residual, eps, {"cases": rows})


def decomposition_check(samples=10 ** 4, seed=DEFAULT_SEED, threshold=1e-12,
                        log_range=(-3.0, 3.0)):
    """Kernel split of the j = 1/2 Brown-Ravenhall channels on random pairs."""
    rng = np.random.default_rng(seed)
    pairs = 10.0 ** rng.uniform(*log_range, (samples, 2))
    res = decomposition_residual(sample_pairs=pairs)
    return CheckReport("decomposition", samples, res, threshold, {"seed": seed})


SUITES = ("comparison", "critical", "decomposition", "gsr", "twisting")


def run_suite(name="all", seed=DEFAULT_SEED, grid=None, samples=10 ** 6):
    """Run one suite or all of them; reports in fixed name order."""
    names = SUITES if name == "all" else (name,)
    for n in names:
        if n not in SUITES:
            raise DomainError(f"unknown suite {n!r}; choose from {SUITES + ('all',)}")
    reports = []
    for n in names:
        if n == "comparison":
            reports.append(comparison_margin(grid))
        elif n == "critical":
            reports.append(critical_positivity(grid))
        elif n == "decomposition":
            reports.append(decomposition_check(seed=seed))
        elif n == "gsr":
            reports.append(gsr_residual(OperatorKind.BROWN_RAVENHALL_MASSLESS, 1, grid=grid))
            reports.append(gsr_residual(OperatorKind.BROWN_RAVENHALL_MASSLESS, 3, grid=grid))
            reports.append(gsr_residual(OperatorKind.CHANDRASEKHAR_MASSLESS, 0, grid=grid))
            reports.append(gsr_residual(OperatorKind.CHANDRASEKHAR_MASSLESS, 1, grid=grid))
        elif n == "twisting":
            reports.append(twisting_inequalities(samples, seed=seed))
    return reports
