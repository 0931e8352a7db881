"""Momentum grids and Nystrom assembly of the reduced channel operators.

Every radial operator is discretized in the log variable u = ln p.  With
p = e^u, q = e^v the Coulomb channel kernel depends on p, q only through
z = cosh(u - v), and the quadratic form reads

    sum_i T(p_i) |g_i|^2 - kappa sum_ij sqrt(w_i w_j) k(p_i, p_j) g_i g_j,

w_i = p_i * omega_i, omega the quadrature weights in u.  Q_l(cosh s) has a
logarithmic singularity at s = 0, handled on the diagonal:

* log-uniform grids use the lattice (Euler-Maclaurin / zeta) value
  Q_diag = -ln(h / (2 pi)) + ln 2 - H_l, exact for the -ln|s| part on an
  infinite uniform lattice;
* log-gauss grids use singularity subtraction: the exact integral of
  ln|u_i - v| over the u-interval minus its quadrature on the other nodes.

Both give O(h^3) convergence of the eigenvalues.
"""

import functools
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import roots_legendre

from .channels import AngularChannel, OperatorKind, critical_coupling
from .errors import DomainError, SupercriticalError
from .special import kinetic_excess, legendre_q_cosh, phi, q_log_constant

SCHEMES = ("log-uniform", "log-gauss")
DUMP_MAGIC = b"SCSH"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIIBHHd")
HEADER_SIZE = 32

# relative slack in the supercritical gate (covers quadrature rounding of
# the critical constants, never a physical margin)
_GATE_SLACK = 1e-12


@dataclass(frozen=True)
class MomentumGrid:
    """Radial momentum nodes and quadrature weights (dp measure).

    ``log_nodes`` and ``log_weights`` carry the underlying rule in u = ln p;
    ``weights = nodes * log_weights``.
    """

    p_min: float
    p_max: float
    n: int
    scheme: str
    nodes: np.ndarray = field(repr=False, compare=False)
    weights: np.ndarray = field(repr=False, compare=False)
    log_nodes: np.ndarray = field(repr=False, compare=False)
    log_weights: np.ndarray = field(repr=False, compare=False)

    @property
    def descriptor(self):
        return {"p_min": self.p_min, "p_max": self.p_max, "N": self.n, "scheme": self.scheme}

    @property
    def key(self):
        return (self.p_min, self.p_max, self.n, self.scheme)

    @property
    def step(self):
        """Log spacing h of a log-uniform grid (nan for log-gauss)."""
        if self.scheme != "log-uniform":
            return float("nan")
        return float(self.log_weights[0])


def build_grid(p_min, p_max, n, scheme="log-gauss"):
    """Build a momentum grid on [p_min, p_max].

    Parameters
    ----------
    p_min, p_max : float
        Range, 0 < p_min < p_max.
    n : int
        Number of nodes, at least 16 (3 is accepted for inspection only).
    scheme : {"log-uniform", "log-gauss"}
        log-uniform: geometric nodes, weight p_i * h with h the log step
        (uniform lattice weights, also at the ends).
        log-gauss: Gauss-Legendre nodes in u mapped back to p.
    """
    if not (np.isfinite(p_min) and np.isfinite(p_max) and 0 < p_min < p_max):
        raise DomainError(f"invalid momentum range ({p_min}, {p_max})")
    if scheme not in SCHEMES:
        raise DomainError(f"unknown grid scheme {scheme!r}; expected one of {SCHEMES}")
    n = int(n)
    if n < 16 and not (scheme == "log-uniform" and n >= 2):
        raise DomainError(f"grid needs at least 16 nodes, got {n}")
    a, b = np.log(p_min), np.log(p_max)
    if scheme == "log-uniform":
        u = np.linspace(a, b, n)
        om = np.full(n, (b - a) / (n - 1))
    else:
        x, wx = roots_legendre(n)
        u = 0.5 * (b - a) * x + 0.5 * (a + b)
        om = 0.5 * (b - a) * wx
    p = np.exp(u)
    for arr in (p, u, om):
        arr.setflags(write=False)
    w = p * om
    w.setflags(write=False)
    return MomentumGrid(float(p_min), float(p_max), n, scheme, p, w, u, om)


def default_grid(kappa, channel, n_levels=12, n=1200, scheme="log-gauss"):
    """Channel grid resolving ``n_levels`` bound states.

    p_min = kappa / (20 (n_levels + l)^2), below the momentum scale
    kappa/(n+l)^2 where the highest requested Rydberg states still carry
    weight in the log variable; p_max = 50 max(1, kappa) (l + 1).
    """
    lvl = n_levels + channel.l
    p_min = kappa / (20.0 * lvl * lvl)
    p_max = 50.0 * max(1.0, kappa) * (channel.l + 1)
    return build_grid(p_min, p_max, n, scheme)


def _kinetic(kind, p):
    if kind == OperatorKind.SCHROEDINGER:
        return 0.5 * p * p
    if kind.massless:
        return np.array(p, dtype=float)
    return kinetic_excess(p)


def channel_kernel(kind, channel, p, q):
    """Reduced Coulomb kernel k(p, q) of ``kind`` in ``channel`` (p != q).

    Chandrasekhar / Schroedinger (massive or massless): Q_l(z)/pi.
    Massless Brown-Ravenhall: (Q_{j-1/2}(z) + Q_{j+1/2}(z)) / (2 pi).
    Brown-Ravenhall: (phi_0(p) Q_l phi_0(q) + phi_1(p) Q_{2j-l} phi_1(q)) / pi.
    Here z = (p/q + q/p)/2.
    """
    kind = OperatorKind.parse(kind)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(~(p > 0)) or np.any(~(q > 0)):
        raise DomainError("kernel momenta must be positive")
    if np.any(p == q):
        raise DomainError("diagonal p = q is handled by the assembly rule")
    # |ln(p/q)| with full relative accuracy when p is close to q
    s = np.log1p(np.abs(p - q) / np.minimum(p, q))
    return _kernel_from_s(kind, channel, p, q, s)


def _kernel_from_s(kind, channel, p, q, s):
    l = channel.l
    if kind == OperatorKind.BROWN_RAVENHALL:
        a = phi(0, p) * phi(0, q) * legendre_q_cosh(l, s)
        b = phi(1, p) * phi(1, q) * legendre_q_cosh(channel.partner_l, s)
        return (a + b) / np.pi
    if kind == OperatorKind.BROWN_RAVENHALL_MASSLESS:
        lo = channel.two_j // 2
        return (legendre_q_cosh(lo, s) + legendre_q_cosh(lo + 1, s)) / (2.0 * np.pi)
    return legendre_q_cosh(l, s) / np.pi


# grids above this size are not cached (a 2500^2 matrix is 50 MB)
_CACHE_MAX_N = 2500


@functools.lru_cache(maxsize=6)
def _q_matrix_lru(key, l):
    # key = grid.key; rebuilt here so the cache holds no array arguments
    return q_matrix(build_grid(*key), l)


def _q_matrix_cached(key, l):
    if key[2] > _CACHE_MAX_N:
        return q_matrix(build_grid(*key), l)
    return _q_matrix_lru(key, l)


def q_matrix(grid, l):
    """Matrix of Q_l(cosh(u_i - u_j)) with the singular diagonal replaced
    by its quadrature-consistent value (see module docstring)."""
    u, om = grid.log_nodes, grid.log_weights
    n = grid.n
    c_l = q_log_constant(l)
    if grid.scheme == "log-uniform":
        h = om[0]
        col = np.empty(n)
        col[1:] = legendre_q_cosh(l, h * np.arange(1, n))
        col[0] = -np.log(h / (2.0 * np.pi)) + c_l
        return toeplitz(col)
    iu = np.triu_indices(n, 1)
    s = u[iu[1]] - u[iu[0]]
    qm = np.zeros((n, n))
    qm[iu] = legendre_q_cosh(l, s)
    qm = qm + qm.T
    # sum_{j != i} om_j ln|u_i - u_j|
    ls = np.zeros((n, n))
    ls[iu] = np.log(s)
    ls = ls + ls.T
    a, b = np.log(grid.p_min), np.log(grid.p_max)
    da, db = u - a, b - u
    exact = da * np.log(da) - da + db * np.log(db) - db
    d = exact - ls @ om
    qm[np.diag_indices(n)] = -d / om + c_l
    return qm


@dataclass(frozen=True)
class OperatorMatrix:
    """Symmetric discretization of one reduced channel operator."""

    kind: OperatorKind
    channel: AngularChannel
    kappa: float
    grid: MomentumGrid
    entries: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.grid.n

    def norm(self):
        """Max-row-sum norm, an upper bound for the spectral norm."""
        return float(np.max(np.sum(np.abs(self.entries), axis=1)))


def assemble(kind, channel, kappa, grid, allow_supercritical=False):
    """Assemble M_ij = T(p_i) delta_ij - kappa sqrt(w_i w_j) k(p_i, p_j).

    Parameters
    ----------
    kind : OperatorKind or str
    channel : AngularChannel
    kappa : float
        Coupling, 0 <= kappa <= channel critical value for relativistic kinds.
    grid : MomentumGrid
    allow_supercritical : bool
        Skip the critical-coupling gate (used by the sharpness checks).

    Raises
    ------
    SupercriticalError
        kappa above the channel's critical coupling.
    """
    kind = OperatorKind.parse(kind)
    if not (np.isfinite(kappa) and kappa >= 0):
        raise DomainError(f"coupling must be finite and nonnegative, got {kappa}")
    crit = critical_coupling(kind, channel)
    if not allow_supercritical and kappa > crit * (1.0 + _GATE_SLACK):
        raise SupercriticalError(
            f"kappa={kappa!r} exceeds the critical coupling {crit!r} of "
            f"{kind.value} in channel {channel.label()}", crit)
    p = grid.nodes
    sq = np.sqrt(grid.weights)
    if kind == OperatorKind.BROWN_RAVENHALL:
        f0, f1 = phi(0, p), phi(1, p)
        k = (np.outer(f0, f0) * _q_matrix_cached(grid.key, channel.l)
             + np.outer(f1, f1) * _q_matrix_cached(grid.key, channel.partner_l))
    elif kind == OperatorKind.BROWN_RAVENHALL_MASSLESS:
        lo = channel.two_j // 2
        k = 0.5 * (_q_matrix_cached(grid.key, lo) + _q_matrix_cached(grid.key, lo + 1))
    else:
        k = _q_matrix_cached(grid.key, channel.l)
    m = (-kappa / np.pi) * (np.outer(sq, sq) * k)
    m[np.diag_indices(grid.n)] += _kinetic(kind, p)
    m.setflags(write=False)
    return OperatorMatrix(kind, channel, float(kappa), grid, m)


def decomposition_residual(grid=None, sample_pairs=None):
    """Max deviation of the j = 1/2 Brown-Ravenhall kernel from its split
    into Chandrasekhar kernels of degrees 0 and 1.

    For l in {0, 1}:

        k^B_{1/2,l}(p,q) = phi_l(p) Q_0(z) phi_l(q) / pi
                           + phi_{1-l}(p) Q_1(z) phi_{1-l}(q) / pi.

    The left side goes through ``channel_kernel``; the right side uses the
    closed forms of Q_0, Q_1 in z. Pairs default to all off-diagonal node
    pairs of ``grid``.
    """
    if sample_pairs is None:
        if grid is None:
            raise DomainError("need a grid or explicit sample pairs")
        i, j = np.triu_indices(grid.n, 1)
        p, q = grid.nodes[i], grid.nodes[j]
    else:
        pairs = np.asarray(sample_pairs, dtype=float).reshape(-1, 2)
        p, q = pairs[:, 0], pairs[:, 1]
        keep = p != q
        p, q = p[keep], q[keep]
    z = 0.5 * (p / q + q / p)
    # z - 1 without cancellation
    zm1 = 0.5 * (p - q) ** 2 / (p * q)
    q0 = 0.5 * np.log1p(2.0 / zm1)
    q1 = z * q0 - 1.0
    worst = 0.0
    for l in (0, 1):
        lhs = channel_kernel(OperatorKind.BROWN_RAVENHALL, AngularChannel(1, l), p, q)
        rhs = (phi(l, p) * phi(l, q) * q0 + phi(1 - l, p) * phi(1 - l, q) * q1) / np.pi
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def dump_matrix(op, path):
    """Write ``op`` as a 32-byte header followed by little-endian float64
    entries in row-major order."""
    head = _HEADER.pack(DUMP_MAGIC, DUMP_VERSION, op.n, op.kind.code,
                        op.channel.two_j, op.channel.l, op.kappa)
    head = head.ljust(HEADER_SIZE, b"\0")
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(op.entries, dtype="<f8").tobytes())


def load_matrix(path):
    """Read a dump; returns (header dict, N x N array)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n, kind, two_j, l, kappa = _HEADER.unpack_from(raw, 0)
    if magic != DUMP_MAGIC:
        raise DomainError(f"{path}: not a matrix dump")
    if len(raw) != HEADER_SIZE + 8 * n * n:
        raise DomainError(f"{path}: size {len(raw)} does not match an {n} x {n} dump")
    data = np.frombuffer(raw, dtype="<f8", offset=HEADER_SIZE)
    header = {"version": version, "N": n, "kind": list(OperatorKind)[kind],
              "two_j": two_j, "l": l, "kappa": kappa}
    return header, data.reshape(n, n).copy()


__all__ = [
    "MomentumGrid", "OperatorMatrix", "build_grid", "default_grid", "channel_kernel",
    "q_matrix", "assemble", "decomposition_residual", "dump_matrix", "load_matrix",
]
