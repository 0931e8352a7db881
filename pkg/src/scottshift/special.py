"""Scalar special functions: relativistic dispersion, twisting factors and
Legendre functions of the second kind.

All functions accept scalars or numpy arrays and return the same shape.
"""

import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

# smallest admissible z - 1 for legendre_q
Z_FLOOR = 1e-14


def energy_dispersion(p):
    """Relativistic kinetic symbol E(p) = sqrt(p^2 + 1).

    Parameters
    ----------
    p : float or ndarray
        Nonnegative momentum.
    """
    p = _check_momentum(p)
    return np.hypot(p, 1.0)


def kinetic_excess(p):
    """E(p) - 1 evaluated without cancellation (p^2 / (E + 1))."""
    p = _check_momentum(p)
    return p * p / (np.hypot(p, 1.0) + 1.0)


def phi(nu, p):
    """Twisting factor phi_nu(p) = sqrt((E + (-1)^nu) / (2E)).

    phi_0^2 + phi_1^2 = 1 for every p; phi_0(0) = 1, phi_1(0) = 0 and both
    tend to 1/sqrt(2) for large p.
    """
    p = _check_momentum(p)
    e = np.hypot(p, 1.0)
    if nu == 0:
        return np.sqrt((e + 1.0) / (2.0 * e))
    if nu == 1:
        # E - 1 written as p^2/(E + 1) to keep small-p accuracy
        return np.sqrt(p * p / ((e + 1.0) * 2.0 * e))
    raise DomainError(f"twisting index must be 0 or 1, got {nu}")


def harmonic(l):
    """Harmonic number H_l = sum_{k=1}^{l} 1/k (H_0 = 0)."""
    return float(np.sum(1.0 / np.arange(1, l + 1))) if l > 0 else 0.0


def q_log_constant(l):
    """Constant c_l in Q_l(cosh s) = -ln|s| + c_l + O(s^2 ln s) as s -> 0.

    c_l = ln 2 - H_l.
    """
    return np.log(2.0) - harmonic(l)


def legendre_q_cosh(l, s):
    """Q_l(cosh s) for s > 0, the natural form for kernels in log-momentum.

    With p = e^u and q = e^v the argument z = (p/q + q/p)/2 equals
    cosh(u - v), so kernel assembly passes s = |u - v| directly and never
    forms z - 1 by subtraction.

    Small s (s*l <= 1) uses forward recurrence from the closed forms
    Q_0 = -ln tanh(s/2) and Q_1 = cosh(s) Q_0 - 1; elsewhere the
    convergent hypergeometric expansion in x = exp(-2s),

        Q_l = sqrt(pi) l!/Gamma(l+3/2) e^{-(l+1)s}
              * sum_k (1/2)_k (l+1)_k / ((l+3/2)_k k!) x^k,

    whose terms are all positive, so no cancellation occurs.
    """
    l = int(l)
    if l < 0:
        raise DomainError(f"degree must be nonnegative, got {l}")
    if isinstance(s, float):
        if not s > 0:
            raise DomainError("legendre_q_cosh requires s > 0")
        return _q_cosh_scalar(l, s)
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("legendre_q_cosh requires s > 0")
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    out = np.empty_like(s)

    small = s * max(l, 1) <= 1.0
    if np.any(small):
        ss = s[small]
        q0 = -np.log(np.tanh(0.5 * ss))
        if l == 0:
            out[small] = q0
        else:
            z = np.cosh(ss)
            qm, qc = q0, z * q0 - 1.0
            for k in range(1, l):
                qm, qc = qc, ((2 * k + 1) * z * qc - k * qm) / (k + 1)
            out[small] = qc

    big = ~small
    if np.any(big):
        sb = s[big]
        x = np.exp(-2.0 * sb)
        logpref = 0.5 * np.log(np.pi) + gammaln(l + 1.0) - gammaln(l + 1.5)
        term = np.ones_like(sb)
        total = term.copy()
        k = 0
        while True:
            term = term * ((0.5 + k) * (l + 1 + k) / ((l + 1.5 + k) * (k + 1))) * x
            total += term
            k += 1
            if np.all(term <= 1e-17 * total) or k > 100000:
                break
        out[big] = np.exp(logpref - (l + 1) * sb) * total

    return out[0] if scalar else out


def _q_cosh_scalar(l, s):
    # same algorithm as the array path, without numpy overhead
    if s * max(l, 1) <= 1.0:
        q0 = -math.log(math.tanh(0.5 * s))
        if l == 0:
            return q0
        z = math.cosh(s)
        qm, qc = q0, z * q0 - 1.0
        for k in range(1, l):
            qm, qc = qc, ((2 * k + 1) * z * qc - k * qm) / (k + 1)
        return qc
    x = math.exp(-2.0 * s)
    term = total = 1.0
    k = 0
    while True:
        term *= (0.5 + k) * (l + 1 + k) / ((l + 1.5 + k) * (k + 1)) * x
        total += term
        k += 1
        if term <= 1e-17 * total or k > 100000:
            break
    logpref = 0.5 * math.log(math.pi) + math.lgamma(l + 1.0) - math.lgamma(l + 1.5)
    return math.exp(logpref - (l + 1) * s) * total


def legendre_q(l, z):
    """Legendre function of the second kind Q_l(z) for integer l >= 0, z > 1.

    Parameters
    ----------
    l : int
        Degree.
    z : float or ndarray
        Argument, strictly greater than 1; z - 1 below ``Z_FLOOR`` raises
        DomainError rather than returning a huge logarithm.

    Returns
    -------
    float or ndarray
        Positive values, decreasing in z and in l.
    """
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z <= 1.0):
        raise DomainError("legendre_q requires finite z > 1")
    d = z - 1.0
    if np.any(d < Z_FLOOR):
        raise DomainError(f"z - 1 below floor {Z_FLOOR:g}")
    # arccosh(1 + d) without cancellation
    s = np.log1p(d + np.sqrt(d * (2.0 + d)))
    return legendre_q_cosh(l, s)


def _check_momentum(p):
    p = np.asarray(p, dtype=float)
    if np.any(~(p >= 0)) or np.any(~np.isfinite(p)):
        raise DomainError("momentum must be finite and nonnegative")
    return p[()] if p.ndim == 0 else p
