"""Large-Z ground-state energy with the relativistic Scott correction,

    E(Z, c) ~ E_TF(1) Z^{7/3} + (1/2 - s(Z/c)) Z^2,

assembled from the Thomas-Fermi energy and the spectral shift.
"""

import csv
import functools
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .channels import KAPPA_B, OperatorKind
from .errors import DomainError, ScottShiftError, SupercriticalError
from .shift import ShiftResult, _fmt, total_shift
from .thomasfermi import tf_ode_solve


@dataclass(frozen=True)
class EnergyBreakdown:
    Z: float
    c: float
    kappa: float
    e_tf: float
    scott_term: float
    total: float
    s_used: float
    s_error: float

    def to_dict(self):
        return asdict(self)


@functools.lru_cache(maxsize=1)
def tf_energy_unit():
    """E_TF(1) from the shooting solution (cached)."""
    return tf_ode_solve(1e-10).energy


def coupling(Z, c):
    """kappa = Z/c with the exact admissibility gate kappa <= kappa^B."""
    if not Z > 0:
        raise DomainError("Z must be positive")
    if not c > 0:
        raise DomainError("c must be positive (math.inf for the nonrelativistic limit)")
    if math.isinf(c):
        return 0.0
    kappa = Z / c
    if kappa > KAPPA_B:
        raise SupercriticalError(
            f"Z/c = {kappa!r} exceeds kappa^B = {KAPPA_B!r}; for Z = {Z!r} the "
            f"smallest admissible c is {Z / KAPPA_B!r}", KAPPA_B)
    return kappa


@dataclass(frozen=True)
class ShiftCurve:
    """Cached s(kappa) on increasing nodes, interpolated by monotone cubics.

    The interpolated error is the larger of the neighbouring node errors
    plus the gap between the cubic and the linear interpolant.
    """

    kappas: tuple
    values: tuple
    errors: tuple
    kind: str = OperatorKind.BROWN_RAVENHALL.value

    def __post_init__(self):
        k = np.asarray(self.kappas, float)
        if k.size < 2 or np.any(np.diff(k) <= 0):
            raise DomainError("curve needs at least two increasing kappa nodes")
        if not (len(self.values) == len(self.errors) == k.size):
            raise DomainError("curve arrays differ in length")

    @classmethod
    def from_points(cls, points, kind=OperatorKind.BROWN_RAVENHALL):
        """From ``shift.CurvePoint`` rows (failed points are skipped)."""
        good = sorted((p.kappa, p.s, p.error) for p in points if p.status == "ok")
        k, s, e = zip(*good) if good else ((), (), ())
        return cls(tuple(k), tuple(s), tuple(e), OperatorKind.parse(kind).value)

    def covers(self, kappa):
        return self.kappas[0] <= kappa <= self.kappas[-1]

    def __call__(self, kappa):
        """(s, error) at kappa; nodes are returned exactly."""
        if not self.covers(kappa):
            raise DomainError(
                f"kappa={kappa!r} outside the cached curve "
                f"[{self.kappas[0]!r}, {self.kappas[-1]!r}]; extrapolation refused")
        k = np.asarray(self.kappas)
        i = int(np.searchsorted(k, kappa))
        if i < k.size and k[i] == kappa:
            return float(self.values[i]), float(self.errors[i])
        s = float(PchipInterpolator(k, self.values)(kappa))
        lin = float(np.interp(kappa, k, self.values))
        err = max(self.errors[i - 1], self.errors[i]) + abs(s - lin)
        return s, float(err)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["kappas"]), tuple(d["values"]), tuple(d["errors"]),
                   d.get("kind", OperatorKind.BROWN_RAVENHALL.value))


def _resolve_shift(kappa, shift_source, compute_kwargs):
    if kappa == 0.0:
        return 0.0, 0.0
    if shift_source is None:
        r = total_shift(kappa, **(compute_kwargs or {}))
        return r.s_value, r.error_estimate
    if isinstance(shift_source, ShiftResult):
        if not math.isclose(shift_source.kappa, kappa, rel_tol=1e-12, abs_tol=0.0):
            raise DomainError(
                f"shift result is for kappa={shift_source.kappa!r}, not {kappa!r}")
        return shift_source.s_value, shift_source.error_estimate
    if isinstance(shift_source, ShiftCurve):
        if not shift_source.covers(kappa) and compute_kwargs is not None:
            r = total_shift(kappa, **compute_kwargs)
            return r.s_value, r.error_estimate
        return shift_source(kappa)
    if callable(shift_source):
        s, e = shift_source(kappa)
        return float(s), float(e)
    raise DomainError("shift_source must be None, a ShiftResult, a ShiftCurve or a callable")


def scott_energy(Z, c, shift_source=None, e_tf1=None, compute_kwargs=None):
    """Scott-corrected energy for nuclear charge Z and speed of light c.

    Parameters
    ----------
    Z : float
    c : float
        ``math.inf`` selects the nonrelativistic limit, where s = 0 exactly.
    shift_source : ShiftResult, ShiftCurve, callable or None
        Source of (s, error) at kappa = Z/c; None computes it on demand
        with ``shift.total_shift(kappa, **compute_kwargs)``.
    e_tf1 : float, optional
        E_TF(1); default from ``tf_energy_unit``.
    """
    kappa = coupling(Z, c)
    s, err = _resolve_shift(kappa, shift_source, compute_kwargs)
    e1 = tf_energy_unit() if e_tf1 is None else float(e_tf1)
    e_tf = e1 * Z ** (7.0 / 3.0)
    z2 = float(Z) * float(Z)
    scott = (0.5 - s) * z2
    return EnergyBreakdown(float(Z), float(c), float(kappa), float(e_tf), float(scott),
                           float(e_tf + scott), float(s), float(err))


def energy_table(Z_list, c_policy, shift_cache=None, e_tf1=None, compute_kwargs=None):
    """Rows of ``scott_energy`` for each Z, in input order.

    c_policy : float, sequence (one c per Z) or callable Z -> c.
    shift_cache : ShiftCurve or None (None computes each kappa on demand).
    """
    zs = list(Z_list)
    if callable(c_policy):
        cs = [c_policy(z) for z in zs]
    elif np.ndim(c_policy) == 0:
        cs = [float(c_policy)] * len(zs)
    else:
        cs = list(c_policy)
        if len(cs) != len(zs):
            raise DomainError("c_policy sequence must have one entry per Z")
    for z, c in zip(zs, cs):
        coupling(z, c)
    return [scott_energy(z, c, shift_cache, e_tf1, compute_kwargs) for z, c in zip(zs, cs)]


def compare_models(kappa, compute_kwargs=None):
    """s_B(kappa) - s_C(kappa) with errors; s_C is undefined above 2/pi.

    Returns a dict with keys s_B, s_B_error, s_C, s_C_error, difference,
    sign (+1, -1, 0 when the difference is within the combined error, or
    None when s_C is undefined).
    """
    kw = dict(compute_kwargs or {})
    b = total_shift(kappa, kind=OperatorKind.BROWN_RAVENHALL, **kw)
    out = {"kappa": float(kappa), "s_B": b.s_value, "s_B_error": b.error_estimate,
           "s_C": None, "s_C_error": None, "difference": None, "sign": None,
           "note": ""}
    try:
        cr = total_shift(kappa, kind=OperatorKind.CHANDRASEKHAR, **kw)
    except SupercriticalError as exc:
        out["note"] = f"Chandrasekhar operator unbounded below: {exc}"
        return out
    except ScottShiftError as exc:
        out["note"] = f"Chandrasekhar shift failed: {exc}"
        return out
    d = b.s_value - cr.s_value
    tol = b.error_estimate + cr.error_estimate
    out.update({"s_C": cr.s_value, "s_C_error": cr.error_estimate, "difference": d,
                "sign": 0 if abs(d) <= tol else (1 if d > 0 else -1)})
    return out


_COLUMNS = ("Z", "c", "kappa", "e_tf", "scott_term", "total", "s_used", "s_error")


def table_to_csv(rows, digits=12):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, k), digits) for k in _COLUMNS])
    return buf.getvalue()


def table_to_json(rows, extra=None):
    d = {"rows": [r.to_dict() for r in rows]}
    if extra:
        d.update(extra)
    return json.dumps(d, sort_keys=True, allow_nan=True)


__all__ = ["EnergyBreakdown", "ShiftCurve", "coupling", "scott_energy", "energy_table",
           "compare_models", "tf_energy_unit", "table_to_csv", "table_to_json"]
