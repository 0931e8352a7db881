"""Dense symmetric eigensolving, negative spectra and closed-form
hydrogenic reference levels (Dirac, Schroedinger)."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from .channels import AngularChannel, OperatorKind, critical_coupling
from .discretize import OperatorMatrix, assemble
from .errors import ConvergenceError, DomainError, GridResolutionError

FLOOR_FACTOR = 1e-9


@dataclass(frozen=True)
class NegativeSpectrum:
    """Ascending eigenvalues strictly below -floor."""

    eigenvalues: np.ndarray
    floor: float
    source: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)


def _describe(m):
    if isinstance(m, OperatorMatrix):
        return {"kind": m.kind.value, "two_j": m.channel.two_j, "l": m.channel.l,
                "kappa": m.kappa, "grid": m.grid.descriptor}
    return {"kind": "matrix", "N": int(np.shape(m)[0])}


def eigenvalues(matrix, count=None):
    """Ascending eigenvalues of a real symmetric matrix (all, or the lowest
    ``count``), single-threaded so results do not depend on BLAS threads."""
    a = matrix.entries if isinstance(matrix, OperatorMatrix) else np.asarray(matrix, float)
    n = a.shape[0]
    kw = {}
    if count is not None and count < n:
        kw = {"subset_by_index": [0, max(int(count), 1) - 1], "driver": "evr"}
    try:
        with threadpool_limits(limits=1):
            return scipy.linalg.eigh(a, eigvals_only=True, check_finite=True, **kw)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc


def negative_spectrum(matrix, floor=None, count=None):
    """Negative eigenvalues below -floor, ascending.

    Parameters
    ----------
    matrix : OperatorMatrix or ndarray
    floor : float, optional
        Noise threshold; default 1e-9 times the max-row-sum norm.
    count : int, optional
        Only the lowest ``count`` eigenvalues are computed (a subset
        decomposition); None computes the full spectrum.
    """
    a = matrix.entries if isinstance(matrix, OperatorMatrix) else np.asarray(matrix, float)
    if floor is None:
        floor = FLOOR_FACTOR * float(np.max(np.sum(np.abs(a), axis=1)))
    if floor < 0:
        raise DomainError("floor must be nonnegative")
    ev = eigenvalues(a, count)
    return NegativeSpectrum(ev[ev < -floor], float(floor), _describe(matrix))


def dirac_level(n, two_j, kappa, l=None):
    """n-th eigenvalue in (-1, 1) of the radial hydrogenic Dirac operator.

    (1 - kappa^2 / ((n - 1 + sqrt((j+1/2)^2 - kappa^2))^2 + kappa^2))^{1/2}

    The sector with l = j + 1/2 (kappa_D > 0) has no nodeless state, so its
    n-th level is the formula at n + 1; pass ``l`` to get that indexing.
    Without ``l`` the l = j - 1/2 sequence is returned.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    if two_j < 1 or two_j % 2 != 1:
        raise DomainError("two_j must be odd and positive")
    k = 0.5 * (two_j + 1)
    if not (0 < kappa < 1) or kappa >= k:
        raise DomainError(f"Dirac levels need 0 < kappa < 1, got {kappa}")
    if l is not None:
        AngularChannel(two_j, l)
        if 2 * l == two_j + 1:
            n = n + 1
    d = n - 1 + np.sqrt(k * k - kappa * kappa)
    return float(np.sqrt(1.0 - kappa * kappa / (d * d + kappa * kappa)))


def schroedinger_level(n, l, kappa):
    """Bohr level -kappa^2 / (2 (n + l)^2)."""
    if n < 1 or l < 0:
        raise DomainError("need n >= 1 and l >= 0")
    return -kappa * kappa / (2.0 * (n + l) ** 2)


@dataclass
class SandwichRow:
    n: int
    value: float
    dirac_bound: float
    schroedinger_bound: float
    upper_ok: bool
    dirac_ok: bool


@dataclass
class SandwichReport:
    kind: str
    channel: AngularChannel
    kappa: float
    tol: float
    rows: list
    c_hat: float

    @property
    def passed(self):
        return all(r.upper_ok and r.dirac_ok for r in self.rows)


def schroedinger_grid_error(channel, kappa, grid, n_max):
    """Max relative error of the discretized Schroedinger levels n <= n_max."""
    s = assemble(OperatorKind.SCHROEDINGER, channel, kappa, grid)
    ev = eigenvalues(s, n_max)
    exact = np.array([schroedinger_level(n, channel.l, kappa) for n in range(1, n_max + 1)])
    return float(np.max(np.abs(ev / exact - 1.0)))


def sandwich_report(channel, kappa, grid, n_max, kind=OperatorKind.BROWN_RAVENHALL, tol=None):
    """Check lambda_n <= dirac - 1 + tol <= Bohr level for n <= n_max.

    Brown-Ravenhall: lambda_n(b) <= lambda_n(d) - 1 (relative tol) and
    lambda_n(d) - 1 <= -kappa^2/(2(n+l)^2) + 1e-12.
    Chandrasekhar: lambda_n(c) <= -kappa^2/(2(n+l)^2) (relative tol).

    The default tol is 10x the relative error of the Schroedinger levels on
    the same grid. ``c_hat`` = max_n |lambda_n| (n+l)^2 / kappa^2.
    """
    kind = OperatorKind.parse(kind)
    if kind not in (OperatorKind.BROWN_RAVENHALL, OperatorKind.CHANDRASEKHAR):
        raise DomainError("sandwich applies to massive Brown-Ravenhall or Chandrasekhar")
    if kappa > critical_coupling(kind, channel) * (1 + 1e-12):
        raise DomainError("coupling above the channel critical value")
    if tol is None:
        tol = 10.0 * schroedinger_grid_error(channel, kappa, grid, n_max)
    m = assemble(kind, channel, kappa, grid)
    spec = negative_spectrum(m, floor=0.0, count=n_max)
    if len(spec) < n_max:
        raise GridResolutionError(
            f"only {len(spec)} of {n_max} bound states resolved in {channel.label()}")
    rows = []
    c_hat = 0.0
    for n in range(1, n_max + 1):
        lam = float(spec.eigenvalues[n - 1])
        bohr = schroedinger_level(n, channel.l, kappa)
        if kind == OperatorKind.BROWN_RAVENHALL:
            d = dirac_level(n, channel.two_j, kappa, l=channel.l) - 1.0
            upper = lam <= d + tol * abs(d)
            dok = d <= bohr + 1e-12
        else:
            d = float("nan")
            upper = lam <= bohr + tol * abs(bohr)
            dok = True
        rows.append(SandwichRow(n, lam, d, bohr, bool(upper), bool(dok)))
        c_hat = max(c_hat, abs(lam) * (n + channel.l) ** 2 / kappa ** 2)
    return SandwichReport(kind.value, channel, float(kappa), float(tol), rows, float(c_hat))
