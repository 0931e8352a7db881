"""Angular-momentum channels (j, l) and per-channel critical couplings.

Half-integers are carried exactly as ``two_j = 2j``.
"""

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

from .errors import DomainError, QuadratureError
from .special import legendre_q_cosh

# global critical couplings (closed forms)
KAPPA_C = 2.0 / np.pi
KAPPA_B = 2.0 / (2.0 / np.pi + np.pi / 2.0)

# upper limit of the folded coupling integral; Q_l(cosh u) <= 2 exp(-u)
# so the neglected tail is below 1e-25
_U_MAX = 60.0


class OperatorKind(enum.Enum):
    BROWN_RAVENHALL = "BrownRavenhall"
    CHANDRASEKHAR = "Chandrasekhar"
    SCHROEDINGER = "Schroedinger"
    BROWN_RAVENHALL_MASSLESS = "BrownRavenhallMassless"
    CHANDRASEKHAR_MASSLESS = "ChandrasekharMassless"

    @property
    def code(self):
        """Small integer used in binary dumps."""
        return list(OperatorKind).index(self)

    @property
    def massless(self):
        return self in (OperatorKind.BROWN_RAVENHALL_MASSLESS,
                        OperatorKind.CHANDRASEKHAR_MASSLESS)

    @property
    def brown_ravenhall(self):
        return self in (OperatorKind.BROWN_RAVENHALL,
                        OperatorKind.BROWN_RAVENHALL_MASSLESS)

    @classmethod
    def parse(cls, text):
        """Accept enum values, names, or short aliases (br, c, s, b0, c0)."""
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "br": cls.BROWN_RAVENHALL, "b": cls.BROWN_RAVENHALL,
            "c": cls.CHANDRASEKHAR, "s": cls.SCHROEDINGER,
            "schrodinger": cls.SCHROEDINGER,
            "b0": cls.BROWN_RAVENHALL_MASSLESS, "brmassless": cls.BROWN_RAVENHALL_MASSLESS,
            "c0": cls.CHANDRASEKHAR_MASSLESS, "chandramassless": cls.CHANDRASEKHAR_MASSLESS,
        }
        for k in cls:
            aliases[k.value.lower()] = k
            aliases[k.name.lower().replace("_", "")] = k
        if key not in aliases:
            raise DomainError(f"unknown operator kind {text!r}")
        return aliases[key]


@dataclass(frozen=True, order=True)
class AngularChannel:
    """Partial-wave sector with total angular momentum j = two_j/2 and
    orbital angular momentum l = j +- 1/2."""

    two_j: int
    l: int
    degeneracy: int = field(init=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.two_j, (int, np.integer)) or self.two_j < 1 or self.two_j % 2 != 1:
            raise DomainError(f"two_j must be an odd positive integer, got {self.two_j}")
        if self.l < 0 or abs(2 * self.l - self.two_j) != 1:
            raise DomainError(f"l={self.l} incompatible with j={self.two_j}/2")
        object.__setattr__(self, "degeneracy", int(self.two_j) + 1)

    @property
    def j(self):
        return self.two_j / 2.0

    @property
    def partner_l(self):
        """The other orbital index 2j - l sharing this j."""
        return self.two_j - self.l

    def label(self):
        return f"({self.two_j}/2,{self.l})"


def enumerate_channels(two_j_max):
    """All channels with 1/2 <= j <= two_j_max/2, sorted by (j, l)."""
    if two_j_max < 1:
        raise DomainError("j_max must be at least 1/2")
    return [AngularChannel(tj, l)
            for tj in range(1, int(two_j_max) + 1, 2)
            for l in (tj // 2, tj // 2 + 1)]


def _coupling_integral(degrees):
    """(1/pi) int_R mean_l Q_l(cosh u) du, folded onto u >= 0."""
    def f(u):
        return np.mean([legendre_q_cosh(l, u) for l in degrees])

    total = 0.0
    err = 0.0
    # log singularity at u = 0 handled by QAGS extrapolation on [0, 1]
    for a, b in ((0.0, 1.0), (1.0, _U_MAX)):
        val, e = integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
        total += val
        err += e
    if err > 1e-11 * total:
        raise QuadratureError(f"coupling integral not converged (err {err:.2e})", err)
    return 2.0 * total / np.pi


@functools.lru_cache(maxsize=None)
def critical_coupling_c(l):
    """Critical coupling kappa^C_l of the Chandrasekhar channel l.

    1/kappa^C_l = int_0^inf (1/pi) Q_l((t + 1/t)/2) dt/t, evaluated with
    t = e^{-u} and the symmetry t <-> 1/t.
    """
    if l < 0:
        raise DomainError("l must be nonnegative")
    return 1.0 / _coupling_integral((int(l),))


@functools.lru_cache(maxsize=None)
def critical_coupling_b(two_j):
    """Critical coupling kappa^B_j of the Brown-Ravenhall channel j = two_j/2,
    from the averaged kernel (Q_{j-1/2} + Q_{j+1/2}) / (2 pi)."""
    if two_j < 1 or two_j % 2 != 1:
        raise DomainError("two_j must be odd and positive")
    return 1.0 / _coupling_integral((two_j // 2, two_j // 2 + 1))


def critical_coupling(kind, channel):
    """Channel-wise critical coupling of ``kind``; inf for Schroedinger."""
    kind = OperatorKind.parse(kind)
    if kind == OperatorKind.SCHROEDINGER:
        return np.inf
    if kind.brown_ravenhall:
        return critical_coupling_b(channel.two_j)
    return critical_coupling_c(channel.l)


def coulomb_mellin_symbol(l, beta):
    """M_l(beta) = (1/pi) int_R Q_l(cosh s) e^{beta s} ds for |beta| < l + 1.

    Closed form (1/2) G((l+1+b)/2) G((l+1-b)/2) / (G((l+2+b)/2) G((l+2-b)/2)).
    M_l(0) = 1/kappa^C_l.
    """
    b = np.asarray(beta, dtype=float)
    if np.any(np.abs(b) >= l + 1):
        raise DomainError("|beta| must be below l + 1")
    lg = (gammaln((l + 1 + b) / 2) + gammaln((l + 1 - b) / 2)
          - gammaln((l + 2 + b) / 2) - gammaln((l + 2 - b) / 2))
    return 0.5 * np.exp(lg)


def channel_mellin_symbol(kind, channel, beta):
    """Mellin symbol of the high-momentum (massless) channel kernel."""
    kind = OperatorKind.parse(kind)
    if kind.brown_ravenhall:
        lo = channel.two_j // 2
        return 0.5 * (coulomb_mellin_symbol(lo, beta) + coulomb_mellin_symbol(lo + 1, beta))
    return coulomb_mellin_symbol(channel.l, beta)


def critical_exponent(kind, channel, kappa):
    """Exponent beta >= 0 with kappa * M(beta) = 1.

    Eigenfunctions of the relativistic channel operators decay like
    p^{-1-beta} at large momentum; beta = 0 exactly at the channel's
    critical coupling, which is where a finite momentum cutoff converges
    only logarithmically.
    """
    kind = OperatorKind.parse(kind)
    if kind == OperatorKind.SCHROEDINGER:
        raise DomainError("no critical exponent for the Schroedinger kinetic term")
    lmin = channel.two_j // 2 if kind.brown_ravenhall else channel.l

    def g(b):
        return kappa * channel_mellin_symbol(kind, channel, b) - 1.0

    if g(0.0) >= -4.0 * np.finfo(float).eps:
        # at (or above) the critical coupling up to rounding
        return 0.0
    return optimize.brentq(g, 0.0, lmin + 1 - 1e-12, xtol=1e-14)
