"""Training-session length schedules ``t -> m_t``.

Each non-constant kind evaluates a closed-form growth rule and rounds it up
to an integer. Rounding up is always safe: every sustainability bound only
improves with longer sessions.

>>> s = SampleSchedule.theorem1(d1_sq=0.5, n=16, eps=0.1, p1=1 / 16)
>>> [s(t) for t in (1, 2, 3)]
[63, 69, 72]
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ParameterError

__all__ = ["DEFAULT_MAX_M", "SampleSchedule", "check_cond_nt", "default_B_c", "default_D_c"]

DEFAULT_MAX_M = 10**6

KINDS = (
    "constant",
    "theorem1",
    "theorem2",
    "theorem3",
    "theorem4",
    "theorem5",
    "table",
)

# Aliases accepted in configuration files.
_KIND_ALIASES = {
    "theorem3-chained": "theorem3",
    "theorem4-hopped": "theorem4",
    "theorem5-linreg": "theorem5",
    "custom-table": "table",
}


def default_B_c(c):
    """Default hopped-schedule constant, ``8 (1 + 1/c)``."""
    return 8.0 * (1.0 + 1.0 / c)


def default_D_c(c):
    """Default regression-schedule constant, ``16 (1 + 1/c)``."""
    return 16.0 * (1.0 + 1.0 / c)


def _require(cond, msg):
    if not cond:
        raise ParameterError(msg)


def _positive(name, value):
    _require(value is not None and value > 0 and math.isfinite(value), f"{name} must be > 0, got {value!r}")


def _unit_open(name, value):
    _require(value is not None and 0 < value < 1, f"{name} must lie in (0, 1), got {value!r}")


@dataclass(frozen=True)
class SampleSchedule:
    """A rule mapping session index ``t >= 1`` to a session length ``m_t``.

    Use the classmethod constructors rather than building instances by hand;
    they validate the parameters of each kind.

    Parameters
    ----------
    kind : str
        One of ``constant``, ``theorem1`` ... ``theorem5``, ``table``.
    params : dict
        Kind-specific parameters (see the constructors).
    max_m : int or None
        Hard ceiling on any evaluated ``m_t``; ``None`` disables it. Exact
        enumeration and Monte Carlo callers rely on the default ceiling,
        analytic recursions may lift it.
    """

    kind: str
    params: dict = field(default_factory=dict)
    max_m: int | None = DEFAULT_MAX_M

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown schedule kind {self.kind!r}")
        if self.max_m is not None and self.max_m < 1:
            raise ParameterError("max_m must be >= 1")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, m, max_m=DEFAULT_MAX_M):
        _require(int(m) == m and m >= 1, f"constant m must be a positive integer, got {m!r}")
        return cls("constant", {"m": int(m)}, max_m)

    @classmethod
    def theorem1(cls, n, eps, p1, d1=None, d1_sq=None, max_m=DEFAULT_MAX_M):
        """``m_t = (4 / d1**2) ln(n t / (eps p1))``."""
        if d1_sq is None:
            _positive("d1", d1)
            d1_sq = d1 * d1
        _positive("d1_sq", d1_sq)
        _require(d1_sq <= 1.0, "d1 is a root-sine distance and cannot exceed 1")
        _require(int(n) == n and n >= 2, "n must be an integer >= 2")
        _unit_open("eps", eps)
        _unit_open("p1", p1)
        return cls("theorem1", {"d1_sq": float(d1_sq), "n": int(n), "eps": float(eps), "p1": float(p1)}, max_m)

    @classmethod
    def theorem2(cls, s, n, delta, eps, p_A, rho=None, max_m=DEFAULT_MAX_M):
        """``m_t = (1 / rho**2) ln(n (1 - p_A) t**4 / (eps**2 p_A))``.

        ``rho`` defaults to ``delta / (n sqrt(2 s))``, the separation that
        turns a root-sine radius of ``rho n`` into a total-variation radius
        of ``delta``.
        """
        _require(int(s) == s and s >= 1, "s must be a positive integer")
        _require(int(n) == n and n >= 2, "n must be an integer >= 2")
        _unit_open("delta", delta)
        _unit_open("eps", eps)
        _unit_open("p_A", p_A)
        if rho is None:
            rho = delta / (n * math.sqrt(2.0 * s))
        _positive("rho", rho)
        params = {"s": int(s), "n": int(n), "delta": float(delta), "eps": float(eps), "p_A": float(p_A), "rho": float(rho)}
        return cls("theorem2", params, max_m)

    @classmethod
    def theorem3(cls, gap, eps, sigma, sigma_bar, c, max_m=DEFAULT_MAX_M):
        """``m_t = (gap / eps)(1 + 1/c)(sigma / sigma_bar)**2 t**(1+c)``, ``gap = |mu0 - mu_bar|``."""
        _require(gap is not None and gap >= 0, "gap must be >= 0")
        _unit_open("eps", eps)
        _positive("sigma", sigma)
        _positive("sigma_bar", sigma_bar)
        _positive("c", c)
        params = {"gap": float(gap), "eps": float(eps), "sigma": float(sigma), "sigma_bar": float(sigma_bar), "c": float(c)}
        return cls("theorem3", params, max_m)

    @classmethod
    def theorem4(cls, gap, eps, sigma, sigma_bar, c, B_c=None, max_m=DEFAULT_MAX_M):
        """``m_t = B_c (gap / eps)(sigma / sigma_bar)**2 (1 + ln t)**(1+c)``; requires ``eps < gap``."""
        _positive("eps", eps)
        _require(gap is not None and eps < gap, f"requires eps < |mu0 - mu_bar| (eps={eps!r}, gap={gap!r})")
        _positive("sigma", sigma)
        _positive("sigma_bar", sigma_bar)
        _positive("c", c)
        if B_c is None:
            B_c = default_B_c(c)
        _positive("B_c", B_c)
        params = {"gap": float(gap), "eps": float(eps), "sigma": float(sigma), "sigma_bar": float(sigma_bar), "c": float(c), "B_c": float(B_c)}
        return cls("theorem4", params, max_m)

    @classmethod
    def theorem5(cls, gap, delta, sigma, sigma_bar, c, d, eps, D_c=None, max_m=DEFAULT_MAX_M):
        """``m_t = D_c (gap / delta)(sigma / sigma_bar)**2 t**(1+c) + D_c d ln((t+1) / eps)``.

        ``gap`` is ``||mu0 - mu_bar||_2``.
        """
        _require(gap is not None and gap >= 0, "gap must be >= 0")
        _positive("delta", delta)
        _unit_open("eps", eps)
        _positive("sigma", sigma)
        _positive("sigma_bar", sigma_bar)
        _positive("c", c)
        _require(int(d) == d and d >= 1, "d must be a positive integer")
        if D_c is None:
            D_c = default_D_c(c)
        _positive("D_c", D_c)
        params = {
            "gap": float(gap), "delta": float(delta), "sigma": float(sigma), "sigma_bar": float(sigma_bar),
            "c": float(c), "d": int(d), "eps": float(eps), "D_c": float(D_c),
        }
        return cls("theorem5", params, max_m)

    @classmethod
    def table(cls, values, max_m=DEFAULT_MAX_M):
        """Explicit ``m_1, m_2, ...``; evaluating past the end is an error."""
        vals = tuple(int(v) for v in values)
        _require(len(vals) > 0, "table schedule needs at least one value")
        _require(all(v >= 1 for v in vals) and all(int(v) == v for v in values), "table values must be positive integers")
        return cls("table", {"values": vals}, max_m)

    @classmethod
    def from_dict(cls, spec):
        """Build from a config mapping ``{"kind": ..., <params>..., "max_m": ...}``."""
        spec = dict(spec)
        kind = spec.pop("kind", None)
        kind = _KIND_ALIASES.get(kind, kind)
        params = spec.pop("params", None) or {}
        params.update(spec)
        max_m = params.pop("max_m", DEFAULT_MAX_M)
        ctor = {
            "constant": cls.constant,
            "theorem1": cls.theorem1,
            "theorem2": cls.theorem2,
            "theorem3": cls.theorem3,
            "theorem4": cls.theorem4,
            "theorem5": cls.theorem5,
            "table": cls.table,
        }.get(kind)
        if ctor is None:
            raise ParameterError(f"unknown schedule kind {kind!r}")
        try:
            return ctor(max_m=max_m, **params)
        except TypeError as exc:
            raise ParameterError(f"bad parameters for schedule {kind!r}: {exc}") from None

    def to_dict(self):
        out = {"kind": self.kind, **{k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}}
        out["max_m"] = self.max_m
        return out

    # -- evaluation -------------------------------------------------------

    def raw(self, t):
        """Real-valued schedule before rounding."""
        _require(int(t) == t and t >= 1, f"t must be a positive integer, got {t!r}")
        p = self.params
        if self.kind == "constant":
            return float(p["m"])
        if self.kind == "table":
            vals = p["values"]
            if t > len(vals):
                raise ParameterError(f"table schedule has {len(vals)} entries, asked for t={t}")
            return float(vals[t - 1])
        if self.kind == "theorem1":
            return 4.0 / p["d1_sq"] * math.log(p["n"] * t / (p["eps"] * p["p1"]))
        if self.kind == "theorem2":
            arg = p["n"] * (1.0 - p["p_A"]) * float(t) ** 4 / (p["eps"] ** 2 * p["p_A"])
            return math.log(arg) / p["rho"] ** 2
        ratio = (p["sigma"] / p["sigma_bar"]) ** 2
        if self.kind == "theorem3":
            return p["gap"] / p["eps"] * (1.0 + 1.0 / p["c"]) * ratio * float(t) ** (1.0 + p["c"])
        if self.kind == "theorem4":
            return p["B_c"] * p["gap"] / p["eps"] * ratio * (1.0 + math.log(t)) ** (1.0 + p["c"])
        # theorem5
        return (p["D_c"] * p["gap"] / p["delta"] * ratio * float(t) ** (1.0 + p["c"])
                + p["D_c"] * p["d"] * math.log((t + 1) / p["eps"]))

    def eval(self, t):
        """Integer session length ``m_t = max(1, ceil(raw(t)))``.

        Raises
        ------
        ParameterError
            If ``m_t`` exceeds ``max_m``.
        """
        m = max(1, math.ceil(self.raw(t)))
        if self.max_m is not None and m > self.max_m:
            raise ParameterError(f"m_t={m} at t={t} exceeds max_m={self.max_m}")
        return m

    __call__ = eval

    def values(self, T):
        """``np.array([m_1, ..., m_T])`` as int64."""
        return np.array([self.eval(t) for t in range(1, T + 1)], dtype=np.int64)


def check_cond_nt(schedule, T, d1, n, p1, eps):
    """Whether ``sum_{s<=T} exp(-d1**2 m_s / 2) < eps sqrt(4 p1 / (n (1 - p1)))``.

    This is the summability condition that makes the off-target mass of the
    chain product stay below ``eps``. ``T = 0`` gives an empty sum and
    returns True.
    """
    _require(d1 > 0, "d1 must be > 0")
    _unit_open("p1", p1)
    _unit_open("eps", eps)
    if T <= 0:
        return True
    m = schedule.values(T).astype(np.float64)
    total = math.fsum(np.exp(-0.5 * d1 * d1 * m))
    return total < eps * math.sqrt(4.0 * p1 / (n * (1.0 - p1)))
