"""Spectral shift s(kappa) between the relativistic and the Schroedinger
hydrogen operators.

    s(kappa) = kappa^{-2} sum_{(j,l)} (2j+1) sum_n [lambda_n(S) - lambda_n(B)]

Per channel the first ``n_levels`` eigenvalues of both operators are taken
from the same grid (their discretization errors cancel in the difference),
the remaining levels are summed from a power-law fit in the principal
quantum number n + l, and channels beyond j_max follow the j^{-2} law.

Near the critical coupling of a channel the relativistic eigenfunctions
decay only like p^{-1-beta} with beta -> 0 (see
``channels.critical_exponent``), so a momentum cutoff P converges like
P^{-2 beta}, logarithmically at beta = 0.  Such channels are recomputed at
cutoffs P, 10P, 100P, 1000P (same log step) and extrapolated to P -> inf
with the model

    lambda(L) = lambda_inf + C * 2 beta / (exp(2 beta (L + c)) - 1),  L = ln P,

which reduces to C / (L + c) at beta = 0.
"""

import concurrent.futures
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.special import zeta

from .channels import (KAPPA_B, AngularChannel, OperatorKind, critical_coupling,
                       critical_exponent, enumerate_channels)
from .discretize import assemble, build_grid
from .errors import (DomainError, GridResolutionError, ScottShiftError,
                     SupercriticalError, TailFitError)
from .spectra import eigenvalues, schroedinger_level

# cutoff truncation below this relative size is ignored
_TRUNCATION_NEGLIGIBLE = 1e-9
# decades between successive cutoffs of the extrapolation ladder
_LADDER_DECADES = 1.0
_LADDER_RUNS = 4


@dataclass(frozen=True)
class GridPolicy:
    """How channel grids are chosen.

    Defaults: log-uniform nodes; p_min = kappa / (20 (n_levels + l)^2);
    p_max = 50 max(1, kappa) for every l (a larger cutoff only inflates
    the matrix norm, hence the eigensolver noise, for high l). ``range_scale`` divides p_min and
    multiplies p_max (2 = "p-range doubling").
    """

    n_nodes: int = 1500
    scheme: str = "log-uniform"
    p_min: float = None
    p_max: float = None
    range_scale: float = 1.0
    extrapolate: bool = True

    def bounds(self, kappa, channel, n_levels):
        lvl = n_levels + channel.l
        p_min = self.p_min if self.p_min is not None else kappa / (20.0 * lvl * lvl)
        p_max = self.p_max if self.p_max is not None else 50.0 * max(1.0, kappa)
        return p_min / self.range_scale, p_max * self.range_scale

    def grid_for(self, kappa, channel, n_levels):
        p_min, p_max = self.bounds(kappa, channel, n_levels)
        return build_grid(p_min, p_max, self.n_nodes, self.scheme)

    def descriptor(self):
        return {"N": self.n_nodes, "scheme": self.scheme, "p_min": self.p_min,
                "p_max": self.p_max, "range_scale": self.range_scale,
                "extrapolate": self.extrapolate}


@dataclass
class ChannelShift:
    """Shift contribution of one (j, l) channel (degeneracy included in
    ``value``; the kappa^{-2} factor is not)."""

    channel: AngularChannel
    levels_used: int
    level_differences: list
    raw_sum: float
    level_tail: float
    value: float
    gamma: float
    error: float
    cutoff_extrapolated: bool = False

    def to_dict(self):
        return {"two_j": self.channel.two_j, "l": self.channel.l, "value": self.value,
                "n_levels": self.levels_used, "level_tail": self.level_tail,
                "raw_sum": self.raw_sum, "gamma": self.gamma, "error": self.error,
                "cutoff_extrapolated": self.cutoff_extrapolated}


@dataclass
class ShiftResult:
    kappa: float
    per_channel: list
    two_j_max: int
    channel_tail: float
    s_value: float
    error_estimate: float
    grid: dict = field(default_factory=dict)
    kind: str = OperatorKind.BROWN_RAVENHALL.value
    n_levels: int = 12
    mu: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def j_max(self):
        return self.two_j_max / 2.0

    def channel_values_by_j(self):
        """{two_j: summed value over both l} in ascending j."""
        out = {}
        for c in self.per_channel:
            out[c.channel.two_j] = out.get(c.channel.two_j, 0.0) + c.value
        return dict(sorted(out.items()))

    def to_dict(self):
        return {"kappa": self.kappa, "s": self.s_value, "error": self.error_estimate,
                "kind": self.kind, "n_levels": self.n_levels, "two_j_max": self.two_j_max,
                "mu": self.mu,
                "channels": [c.to_dict() for c in self.per_channel],
                "channel_tail": self.channel_tail, "grid": self.grid,
                "warnings": list(self.warnings)}

    @classmethod
    def from_dict(cls, d):
        chans = [ChannelShift(AngularChannel(c["two_j"], c["l"]), c["n_levels"], [],
                              c["raw_sum"], c["level_tail"], c["value"], c["gamma"],
                              c["error"], c.get("cutoff_extrapolated", False))
                 for c in d["channels"]]
        return cls(d["kappa"], chans, d["two_j_max"], d["channel_tail"], d["s"], d["error"],
                   d.get("grid", {}), d.get("kind", OperatorKind.BROWN_RAVENHALL.value),
                   d.get("n_levels", 12), d.get("mu", 0.0), d.get("warnings", []))


# ---------------------------------------------------------------- cutoff

def _shape(x, beta):
    if beta < 1e-12:
        return 1.0 / x
    return 2.0 * beta / math.expm1(2.0 * beta * x)


def _fit_three(logp, y, beta):
    """lambda_inf from three equally spaced cutoffs (see module docstring)."""
    d1, d2 = y[0] - y[1], y[1] - y[2]
    scale = max(abs(v) for v in y)
    if abs(d2) <= 1e-13 * scale:
        return y[2]
    if d1 * d2 <= 0:
        # not monotone: cutoff already converged below eigensolver noise
        return y[2]
    step = logp[1] - logp[0]
    r = d1 / d2
    rmin = math.exp(2.0 * beta * step)
    if r <= rmin * (1.0 + 1e-9):
        if beta < 1e-12:
            return y[2]
        # pure exponential regime: two-point Richardson with the known rate
        return y[2] - d2 / math.expm1(2.0 * beta * step)

    def ratio(x0):
        f = [_shape(x0 + k * step, beta) for k in range(3)]
        return (f[0] - f[1]) / (f[1] - f[2]) - r

    if beta < 1e-12:
        x0 = 2.0 * step / (r - 1.0)
    else:
        hi = 1.0
        while ratio(hi) > 0 and hi < 1e6:
            hi *= 2.0
        x0 = optimize.brentq(ratio, 1e-12, hi, xtol=1e-14)
    f1, f2 = _shape(x0 + step, beta), _shape(x0 + 2 * step, beta)
    c = d2 / (f1 - f2)
    est = y[2] - c * f2
    if abs(est - y[2]) > 50.0 * abs(d2):
        return y[2]
    return est


def extrapolate_cutoff(logp, values, beta):
    """Extrapolate eigenvalue ladders to infinite cutoff.

    Parameters
    ----------
    logp : sequence of 4 floats
        ln P of the runs, equally spaced.
    values : array (4, n)
        Eigenvalues per run.
    beta : float
        Critical exponent of the channel.

    Returns
    -------
    (limits, errors) : arrays of length n
        limits from the last three runs; errors = difference to the fit
        from the first three.
    """
    values = np.asarray(values, dtype=float)
    lims = np.empty(values.shape[1])
    errs = np.empty(values.shape[1])
    for n in range(values.shape[1]):
        a = _fit_three(logp[:3], values[:3, n], beta)
        b = _fit_three(logp[1:4], values[1:4, n], beta)
        lims[n] = b
        errs[n] = abs(b - a)
    return lims, errs


def needs_cutoff_extrapolation(kind, channel, kappa, p_max):
    """True if the relative cutoff error P^{-2 beta} is not negligible."""
    kind = OperatorKind.parse(kind)
    if kind == OperatorKind.SCHROEDINGER:
        return False
    beta = critical_exponent(kind, channel, kappa)
    return p_max ** (-2.0 * beta) > _TRUNCATION_NEGLIGIBLE


# -------------------------------------------------------------- channel

def _power_gamma(x, d):
    """Exponent of the local power law d ~ a x^{-gamma}."""
    slope, _ = np.polyfit(np.log(x), np.log(d), 1)
    return float(-slope)


def _level_tail(x, d, n_cut=None):
    """Sum of the level differences beyond x[-1] from the asymptotic form
    d ~ a x^{-3} + b x^{-4} (x = n + l) fitted on the given points.

    The x^{-4} term is the same-order correction that makes the local
    exponent drift (e.g. 2.3 instead of 3 for l ~ 12 at x ~ 24).
    Terms with x > n_cut are excluded when n_cut is given.
    """
    basis = np.vstack([x ** -3.0, x ** -4.0]).T
    (a, b), *_ = np.linalg.lstsq(basis, d, rcond=None)
    start = x[-1] + 1
    tail = a * zeta(3.0, start) + b * zeta(4.0, start)
    if n_cut is not None:
        stop = max(n_cut + 1, start)
        tail -= a * zeta(3.0, stop) + b * zeta(4.0, stop)
    return float(tail)


def channel_shift(two_j, l, kappa, grid_policy=None, n_levels=12,
                  kind=OperatorKind.BROWN_RAVENHALL, mu=0.0, exact_schroedinger=False):
    """Shift contribution of channel (j, l) = (two_j/2, l).

    Parameters
    ----------
    two_j, l : int
        Channel indices.
    kappa : float
        Coupling, 0 < kappa <= channel critical value.
    grid_policy : GridPolicy
    n_levels : int
        Levels paired explicitly (>= 4).
    kind : OperatorKind
        Relativistic operator (BROWN_RAVENHALL or CHANDRASEKHAR).
    mu : float
        Soft cutoff; differences of (-lambda - mu)_+ are summed.
    exact_schroedinger : bool
        Subtract exact Bohr levels instead of the same-grid Schroedinger
        eigenvalues (diagnostic only; discretization errors no longer cancel).
    """
    kind = OperatorKind.parse(kind)
    ch = AngularChannel(two_j, l)
    if kind not in (OperatorKind.BROWN_RAVENHALL, OperatorKind.CHANDRASEKHAR):
        raise DomainError("shift compares a massive relativistic operator with Schroedinger")
    if not kappa > 0:
        raise DomainError("kappa must be positive (the shift vanishes identically at 0)")
    if n_levels < 4:
        raise DomainError("n_levels must be at least 4")
    crit = critical_coupling(kind, ch)
    if kappa > crit * (1 + 1e-12):
        raise SupercriticalError(
            f"kappa={kappa!r} exceeds the critical coupling {crit!r} of {kind.value} "
            f"in channel {ch.label()}", crit)
    policy = grid_policy or GridPolicy()
    grid = policy.grid_for(kappa, ch, n_levels)

    bohr = np.array([schroedinger_level(n, l, kappa) for n in range(1, n_levels + 1)])
    floor = 1e-3 * abs(bohr[-1])
    if exact_schroedinger:
        lam_s = bohr.copy()
    else:
        lam_s = eigenvalues(assemble(OperatorKind.SCHROEDINGER, ch, kappa, grid), n_levels)
    lam_b = eigenvalues(assemble(kind, ch, kappa, grid), n_levels)
    for name, lam in (("Schroedinger", lam_s), (kind.value, lam_b)):
        if not np.all(lam < -floor):
            got = int(np.sum(lam < -floor))
            raise GridResolutionError(
                f"{name} operator resolves only {got} of {n_levels} bound states "
                f"in channel {ch.label()} on {grid.descriptor}")
    if np.max(np.abs(lam_s / bohr - 1.0)) > 0.05:
        raise GridResolutionError(
            f"Schroedinger levels off by more than 5% in channel {ch.label()}")

    cut_err = np.zeros(n_levels)
    extrapolated = False
    if policy.extrapolate and needs_cutoff_extrapolation(kind, ch, kappa, grid.p_max):
        beta = critical_exponent(kind, ch, kappa)
        runs = [lam_b]
        logp = [math.log(grid.p_max)]
        span0 = math.log(grid.p_max / grid.p_min)
        for k in range(1, _LADDER_RUNS):
            pk = grid.p_max * 10.0 ** (k * _LADDER_DECADES)
            nk = int(round(grid.n * math.log(pk / grid.p_min) / span0))
            gk = build_grid(grid.p_min, pk, nk, grid.scheme)
            runs.append(eigenvalues(assemble(kind, ch, kappa, gk), n_levels))
            logp.append(math.log(pk))
        lam_b, cut_err = extrapolate_cutoff(logp, np.array(runs), beta)
        extrapolated = True

    if mu > 0:
        d = np.maximum(-lam_b - mu, 0.0) - np.maximum(-lam_s - mu, 0.0)
    else:
        d = lam_s - lam_b
    x = np.arange(1, n_levels + 1) + l
    raw = float(np.sum(d))

    # level tail over the last quartile, in the principal quantum number
    q = max(3, n_levels // 4)
    n_cut = None
    if mu > 0:
        # S levels above -mu drop out; beyond that the differences vanish
        n_cut = int(math.floor(kappa / math.sqrt(2.0 * mu)))
    if n_cut is not None and n_cut <= x[-1]:
        # every remaining difference is zero: no tail to fit
        gamma, tail, tail_err = math.inf, 0.0, 0.0
    else:
        win = slice(n_levels - q, n_levels)
        if np.any(d[win] <= 0):
            raise TailFitError(
                f"nonpositive level differences in the fit window of channel {ch.label()}; "
                "refine the grid")
        gamma = _power_gamma(x[win], d[win])
        if gamma <= 1.0:
            raise TailFitError(
                f"level differences decay too slowly in channel {ch.label()} "
                f"(fitted gamma={gamma:.3f})")
        tail = _level_tail(x[win], d[win], n_cut)
        # the window one level lower also predicts the last explicit level
        win2 = slice(n_levels - q - 1, n_levels - 1)
        tail2 = _level_tail(x[win2], d[win2], n_cut) - float(d[-1])
        tail_err = abs(tail - tail2)

    deg = ch.degeneracy
    rows = [(int(n), float(a), float(b), float(dd))
            for n, a, b, dd in zip(range(1, n_levels + 1), lam_s, lam_b, d)]
    value = deg * (raw + tail)
    err = deg * (tail_err + float(np.sum(cut_err)))
    return ChannelShift(ch, n_levels, rows, raw, tail, float(value), gamma, float(err),
                        extrapolated)


def _channel_job(args):
    two_j, l, kappa, policy, n_levels, kind, mu, exact = args
    return channel_shift(two_j, l, kappa, policy, n_levels, kind, mu, exact)


def _map_channels(jobs, threads):
    if threads and threads > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_channel_job, jobs))
    return [_channel_job(j) for j in jobs]


# ---------------------------------------------------------------- total

def _channel_tail(by_j, kappa):
    """C kappa^4 sum_{j > j_max} j^{-2} with C from the last three j."""
    tj = sorted(by_j)[-3:]
    c = np.array([by_j[t] * (t / 2.0) ** 2 / kappa ** 4 for t in tj])
    c_hat = float(np.mean(c))
    j_next = tj[-1] / 2.0 + 1.0
    s2 = float(zeta(2.0, j_next))
    tail = c_hat * kappa ** 4 * s2
    spread = float(np.max(c) - np.min(c)) / 2.0
    return tail, spread * kappa ** 4 * s2, c_hat


def total_shift(kappa, two_j_max=25, grid_policy=None, n_levels=12,
                kind=OperatorKind.BROWN_RAVENHALL, mu=0.0, threads=1,
                grid_check=True, exact_schroedinger=False):
    """Spectral shift s(kappa) summed over channels j <= two_j_max/2.

    Parameters
    ----------
    kappa : float
        0 < kappa <= kappa^B (Chandrasekhar: <= 2/pi).
    two_j_max : int
        2 j_max, odd and >= 5.
    grid_policy : GridPolicy
    n_levels : int
    kind : OperatorKind
        BROWN_RAVENHALL for s(kappa); CHANDRASEKHAR for the naive model.
    mu : float
        Soft spectral cutoff (0 = plain negative parts).
    threads : int
        Worker processes for the channel loop (result independent of it).
    grid_check : bool
        Repeat all channels with half the nodes; the difference, scaled
        for the O(h^3) rule (conservatively divided by 3), enters the error.
    """
    kind = OperatorKind.parse(kind)
    if two_j_max < 5 or two_j_max % 2 != 1:
        raise DomainError("two_j_max must be odd and at least 5 (j_max >= 5/2)")
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    if kind == OperatorKind.BROWN_RAVENHALL and kappa > KAPPA_B * (1 + 1e-12):
        raise SupercriticalError(f"kappa={kappa!r} exceeds kappa^B={KAPPA_B!r}", KAPPA_B)
    policy = grid_policy or GridPolicy()
    chans = enumerate_channels(two_j_max)
    jobs = [(c.two_j, c.l, kappa, policy, n_levels, kind, mu, exact_schroedinger)
            for c in chans]
    results = _map_channels(jobs, threads)

    grid_err = 0.0
    if grid_check:
        coarse = replace(policy, n_nodes=max(16, policy.n_nodes // 2))
        cjobs = [(c.two_j, c.l, kappa, coarse, n_levels, kind, mu, exact_schroedinger)
                 for c in chans]
        coarse_res = _map_channels(cjobs, threads)
        grid_err = sum(abs(a.value - b.value) for a, b in zip(results, coarse_res)) / 3.0

    by_j = {}
    for r in results:
        by_j[r.channel.two_j] = by_j.get(r.channel.two_j, 0.0) + r.value
    ctail, ctail_err, _ = _channel_tail(by_j, kappa)
    total = 0.0
    for r in results:   # fixed (j, l) order
        total += r.value
    s = (total + ctail) / kappa ** 2
    err = (sum(r.error for r in results) + ctail_err + grid_err) / kappa ** 2
    notes = []
    if ctail > 0.1 * (total + ctail):
        msg = f"channel tail is {ctail / (total + ctail):.1%} of the total at kappa={kappa}"
        warnings.warn(msg)
        notes.append(msg)
    grid = policy.descriptor()
    grid["grid_check"] = bool(grid_check)
    return ShiftResult(float(kappa), results, int(two_j_max), float(ctail), float(s),
                       float(err), grid, kind.value, int(n_levels), float(mu), notes)


@dataclass
class CurvePoint:
    kappa: float
    s: float
    error: float
    status: str = "ok"


def shift_curve(kappas, two_j_max=25, grid_policy=None, n_levels=12,
                kind=OperatorKind.BROWN_RAVENHALL, threads=1, grid_check=True):
    """s(kappa) for each kappa; failures are recorded per point."""
    rows = []
    for k in kappas:
        try:
            r = total_shift(k, two_j_max, grid_policy, n_levels, kind, threads=threads,
                            grid_check=grid_check)
            rows.append(CurvePoint(float(k), r.s_value, r.error_estimate))
        except ScottShiftError as exc:
            rows.append(CurvePoint(float(k), float("nan"), float("nan"),
                                   f"error: {exc}".replace("\n", " ")))
    return rows


def curve_to_csv(rows, digits=12):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kappa", "s", "error", "status"])
    for r in rows:
        w.writerow([_fmt(r.kappa, digits), _fmt(r.s, digits), _fmt(r.error, digits), r.status])
    return buf.getvalue()


def _fmt(x, digits=12):
    return format(x, f".{digits}g") if isinstance(x, float) else str(x)


def result_to_json(result, extra=None):
    d = result.to_dict()
    if extra:
        d.update(extra)
    return json.dumps(d, sort_keys=True)


__all__ = ["GridPolicy", "ChannelShift", "ShiftResult", "CurvePoint", "channel_shift",
           "total_shift", "shift_curve", "extrapolate_cutoff", "curve_to_csv",
           "result_to_json"]
