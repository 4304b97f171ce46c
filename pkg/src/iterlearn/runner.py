"""Experiment orchestration: JSON spec in, CSV results and a manifest out.

An experiment is one JSON document::

    {
      "kind": "discrete-exact",
      "seed": 7,
      "T": 50,
      "model": "models/overlap.json",
      "schedule": {"kind": "theorem1", "eps": 0.1},
      "params": {"target": 0},
      "budgets": {"enumeration": 10000000},
      "out": "results/overlap"
    }

``model`` and ``config`` may be inline mappings or paths relative to the
spec file. :func:`run` dispatches on ``kind``, writes one or more CSV files
plus ``manifest.json`` into the output directory and records a verdict for
every invariant it checks. Exit codes: 0 all invariants pass, 1 an
invariant fails, 2 bad configuration, 3 budget exceeded.
"""

from dataclasses import dataclass, field
import csv
import datetime as _dt
import json
import logging
import math
from pathlib import Path
import time

import numpy as np

from . import __version__
from .conditional import ConditionalModel
from .discrete import (
    DEFAULT_ENUMERATION_BUDGET,
    TRAJECTORY_HEADER,
    DiscreteModel,
    a_set_bound,
    chain_product,
    find_A_set,
    lemma1_bound,
    model_schedule,
    run_chain_replicates,
    set_mass,
    sustain_mass,
    transition_bound_violation,
)
from .errors import BudgetError, ConfigError, ImpossibleDataError, InvariantViolation, IterLearnError
from .gaussian import (
    MC_HEADER,
    GaussianConfig,
    chained_moments,
    config_schedule,
    hopped_moments,
    simulate_gaussian_mc,
)
from .linreg import DEFAULT_WORK_BUDGET, LINREG_HEADER, RegressionConfig, simulate_linreg, singular_tail_check
from .metrics import all_distances, prob_vector, root_sine_double_sum
from .rafferty import rafferty_model
from .schedules import SampleSchedule, check_cond_nt
from .seeding import SEED_MASK

__all__ = [
    "KINDS",
    "EXIT_OK",
    "EXIT_INVARIANT",
    "EXIT_CONFIG",
    "EXIT_BUDGET",
    "ExperimentSpec",
    "RunManifest",
    "load_spec",
    "prepare",
    "run",
    "format_value",
    "write_csv",
]

log = logging.getLogger(__name__)

KINDS = (
    "discrete-exact",
    "discrete-mc",
    "gaussian-chained",
    "gaussian-hopped",
    "linreg",
    "metrics",
    "schedule-eval",
    "singular-tail",
)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3

# slack on bound comparisons that only differ by rounding
_SLACK = 1e-12


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated experiment description.

    ``source`` keeps the parsed JSON for the manifest echo and ``base_dir``
    anchors relative file references.
    """

    kind: str
    seed: int
    T: int = 1
    replicates: int = 1
    model: object = None
    config: object = None
    schedule: dict | None = None
    params: dict = field(default_factory=dict)
    out: str | None = None
    budgets: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    source: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, data, base_dir=".", seed=None, out=None):
        """Validate a parsed config; ``seed`` and ``out`` override the document."""
        if not isinstance(data, dict):
            raise ConfigError("experiment config must be a JSON object")
        known = {"kind", "seed", "T", "replicates", "model", "config", "schedule", "params", "out", "budgets"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        kind = data.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"kind must be one of {list(KINDS)}, got {kind!r}")
        seed = data.get("seed") if seed is None else seed
        if seed is None:
            raise ConfigError("seed is required")
        if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed <= SEED_MASK):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        T = data.get("T", 1)
        reps = data.get("replicates", 1)
        for name, v in (("T", T), ("replicates", reps)):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        sched = data.get("schedule")
        if sched is not None and not isinstance(sched, dict):
            raise ConfigError("schedule must be an object")
        params = data.get("params") or {}
        budgets = data.get("budgets") or {}
        if not isinstance(params, dict) or not isinstance(budgets, dict):
            raise ConfigError("params and budgets must be objects")
        if kind in ("discrete-exact", "discrete-mc") and data.get("model") is None:
            raise ConfigError(f"{kind} needs a model")
        if kind in ("discrete-exact", "discrete-mc", "schedule-eval") and sched is None:
            raise ConfigError(f"{kind} needs a schedule")
        return cls(
            kind=kind, seed=seed, T=T, replicates=reps, model=data.get("model"), config=data.get("config"),
            schedule=sched, params=dict(params), out=out if out is not None else data.get("out"),
            budgets=dict(budgets), base_dir=Path(base_dir), source=dict(data, seed=seed),
        )


@dataclass
class RunManifest:
    """What was run, which invariants were checked and how they came out."""

    spec: dict
    version: str
    timestamp: str
    invariants: dict
    wall_clock_s: float
    outputs: list
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(v["pass"] for v in self.invariants.values())

    @property
    def exit_code(self):
        return EXIT_OK if self.passed else EXIT_INVARIANT

    def to_dict(self):
        return {
            "spec": self.spec,
            "version": self.version,
            "timestamp": self.timestamp,
            "status": "ok" if self.passed else "invariant-failure",
            "exit_code": self.exit_code,
            "invariants": self.invariants,
            "wall_clock_s": self.wall_clock_s,
            "outputs": self.outputs,
            "notes": self.notes,
        }


def load_spec(path, seed=None, out=None):
    """Read and validate a JSON experiment file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return ExperimentSpec.from_dict(data, base_dir=path.parent, seed=seed, out=out)


# -- serialization ---------------------------------------------------------


def format_value(v):
    """CSV cell text: shortest round-trip floats, lowercase booleans."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])


# -- loading referenced objects --------------------------------------------


def _resolve(spec, ref, what):
    if ref is None:
        return None
    if isinstance(ref, str):
        p = Path(ref)
        if not p.is_absolute():
            p = spec.base_dir / p
        try:
            return json.loads(p.read_text())
        except FileNotFoundError:
            raise ConfigError(f"{what} file not found: {p}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{what} file {p} is not valid JSON: {exc}") from None
    if isinstance(ref, dict):
        return ref
    raise ConfigError(f"{what} must be an object or a file path")


def _load_model(spec):
    data = dict(_resolve(spec, spec.model, "model"))
    family = data.pop("family", "discrete")
    if family == "discrete":
        return DiscreteModel.from_dict(data)
    if family == "conditional":
        return ConditionalModel.from_dict(data).joint_model()
    if family == "rafferty":
        return rafferty_model(int(data["k"]), int(data["m"]))
    raise ConfigError(f"unknown model family {family!r}")


@dataclass
class _Prepared:
    spec: ExperimentSpec
    model: object = None
    config: object = None
    schedule: SampleSchedule | None = None


def _schedule_from(spec, builder):
    try:
        return builder(spec.schedule)
    except KeyError as exc:
        raise ConfigError(f"schedule is missing parameter {exc.args[0]!r}") from None


def prepare(spec):
    """Load models/configs and build the schedule without running anything.

    Raises
    ------
    ConfigError
        For any malformed or inconsistent input.
    """
    try:
        return _prepare(spec)
    except (ConfigError, BudgetError):
        raise
    except (ValueError, TypeError, IndexError, KeyError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from None


def _prepare(spec):
    prep = _Prepared(spec)
    kind = spec.kind
    if kind in ("discrete-exact", "discrete-mc"):
        prep.model = _load_model(spec)
        target = spec.params.get("target", 0)
        prep.model._check_index(target)
        prep.schedule = _schedule_from(spec, lambda s: model_schedule(prep.model, target, s))
    elif kind in ("gaussian-chained", "gaussian-hopped"):
        prep.config = GaussianConfig.from_dict(_resolve(spec, spec.config, "config") or {})
        if spec.schedule is None:
            raise ConfigError(f"{kind} needs a schedule")
        prep.schedule = _schedule_from(spec, lambda s: config_schedule(prep.config, s))
        coupling = spec.params.get("coupling", "iid")
        if coupling not in ("iid", "session"):
            raise ConfigError(f"coupling must be 'iid' or 'session', got {coupling!r}")
    elif kind == "linreg":
        prep.config = RegressionConfig.from_dict(_resolve(spec, spec.config, "config") or {})
        if spec.schedule is None:
            prep.schedule = prep.config.schedule(max_m=None)
        else:
            prep.schedule = _schedule_from(spec, SampleSchedule.from_dict)
    elif kind == "schedule-eval":
        prep.schedule = _schedule_from(spec, SampleSchedule.from_dict)
    elif kind == "metrics":
        pairs = _metric_pairs(spec)
        for a, b in pairs:
            prob_vector(a)
            prob_vector(b)
    elif kind == "singular-tail":
        for key in ("m", "d", "gamma", "draws"):
            if key not in spec.params:
                raise ConfigError(f"singular-tail needs params.{key}")
    return prep


def _metric_pairs(spec):
    p = spec.params
    if "pairs" in p:
        pairs = p["pairs"]
    elif "a" in p and "b" in p:
        pairs = [[p["a"], p["b"]]]
    else:
        raise ConfigError("metrics needs params.pairs or params.a and params.b")
    out = []
    for pair in pairs:
        if len(pair) != 2:
            raise ConfigError("each metrics pair must hold exactly two vectors")
        out.append((np.asarray(pair[0], dtype=np.float64), np.asarray(pair[1], dtype=np.float64)))
    return out


# -- per-kind execution ----------------------------------------------------


class _Ledger:
    """Collects invariant verdicts for the manifest."""

    def __init__(self):
        self.items = {}

    def check(self, name, ok, detail=None):
        entry = {"pass": bool(ok)}
        if detail is not None:
            entry["detail"] = detail
        if name in self.items:
            prev = self.items[name]
            entry["pass"] = prev["pass"] and entry["pass"]
        self.items[name] = entry
        return bool(ok)

    def guard(self, name, fn, *args, **kwargs):
        """Call ``fn``; an :class:`InvariantViolation` becomes a failed verdict."""
        try:
            out = fn(*args, **kwargs)
        except InvariantViolation as exc:
            self.check(name, False, str(exc))
            return None
        self.check(name, True)
        return out


def _run_metrics(prep, ledger):
    rows = []
    names = ("C", "d_RS", "d_H", "d_B", "d_TV", "d_E")
    ok_range = ok_h = ok_b = ok_tv = ok_sum = True
    for k, (a, b) in enumerate(_metric_pairs(prep.spec)):
        r = all_distances(a, b)
        rows.append((k,) + tuple(r[n] for n in names))
        C, d = r["C"], r["d_RS"]
        ok_range &= 0.0 <= d <= 1.0 and 0.0 <= r["d_H"] <= 1.0
        ok_h &= math.isclose(r["d_H"], math.sqrt(max(0.0, 1.0 - C)), abs_tol=1e-12)
        ok_b &= (math.isinf(r["d_B"]) and C == 0.0) or math.isclose(r["d_B"], -math.log(C), abs_tol=1e-12)
        ok_tv &= r["d_TV"] <= math.sqrt(2 * a.size) * d + 1e-12
        ok_sum &= math.isclose(root_sine_double_sum(a, b), d, abs_tol=1e-10)
    ledger.check("metric_range", ok_range)
    ledger.check("hellinger_identity", ok_h)
    ledger.check("bhattacharyya_identity", ok_b)
    ledger.check("tv_bound", ok_tv)
    ledger.check("double_sum_agreement", ok_sum)
    return [("metrics.csv", ("pair",) + names, rows)]


def _run_schedule_eval(prep, ledger):
    spec = prep.spec
    m = prep.schedule.values(spec.T)
    ledger.check("positive_integer", bool(np.all(m >= 1)))
    if prep.schedule.kind != "table":
        ledger.check("nondecreasing", bool(np.all(np.diff(m) >= 0)))
    p = prep.schedule.params
    if prep.schedule.kind == "theorem1":
        d1 = math.sqrt(p["d1_sq"]) if "d1_sq" in p else p.get("d1")
        ledger.check("cond_nt", check_cond_nt(prep.schedule, spec.T, d1, p["n"], p["p1"], p["eps"]))
    return [("schedule.csv", ("t", "m_t"), [(t, int(v)) for t, v in enumerate(m, start=1)])]


def _run_discrete_exact(prep, ledger):
    spec, model = prep.spec, prep.model
    target = spec.params.get("target", 0)
    budget = spec.budgets.get("enumeration", DEFAULT_ENUMERATION_BUDGET)
    chain = ledger.guard("row_stochastic", chain_product, model, prep.schedule, spec.T, budget=budget)
    if chain is None:
        return []
    worst = max(transition_bound_violation(model, P, m) for m, P in chain.transitions.items())
    ledger.check("transition_bound", worst <= _SLACK, f"max excess {worst:.3e}")
    mass = sustain_mass(chain, target)
    bound = lemma1_bound(model, target, chain.m)
    # rows sum to one after renormalization, so this is the off-target mass
    off = 1.0 - mass
    ledger.check("lemma1_bound", bool(np.all(off <= bound + _SLACK)))
    header = ["t", "m_t", "sustain_mass", "lemma1_bound"]
    cols = [np.arange(1, spec.T + 1), chain.m, mass, bound]
    if prep.schedule.kind == "theorem1":
        p = prep.schedule.params
        d1 = math.sqrt(p["d1_sq"]) if "d1_sq" in p else p["d1"]
        ledger.check("cond_nt", check_cond_nt(prep.schedule, spec.T, d1, p["n"], p["p1"], p["eps"]))
        ledger.check("sustained", bool(np.all(mass >= 1.0 - p["eps"])))
    rho = spec.params.get("rho")
    if rho is None and prep.schedule.kind == "theorem2":
        p = prep.schedule.params
        rho = p.get("rho") or p["delta"] / (p["n"] * math.sqrt(2.0 * p["s"]))
    if rho is not None:
        members = ledger.guard("a_set_properties", find_A_set, model, target, rho)
        if members is not None:
            a_mass = set_mass(chain, target, members)
            a_bnd = a_set_bound(model, members, rho, chain.m)
            ledger.check("a_set_bound", bool(np.all(1.0 - a_mass <= a_bnd + _SLACK)))
            header += ["a_set_mass", "a_set_bound"]
            cols += [a_mass, a_bnd]
            eps = spec.params.get("eps", prep.schedule.params.get("eps"))
            if eps is not None:
                ledger.check("a_set_sustained", bool(np.all(a_mass >= 1.0 - eps)))
    rows = list(zip(*[c.tolist() for c in cols]))
    return [("chain.csv", tuple(header), rows)]


def _run_discrete_mc(prep, ledger):
    spec = prep.spec
    target = spec.params.get("target", 0)
    h_init = spec.params.get("h_init", target)
    track = spec.params.get("track")
    trajs = run_chain_replicates(prep.model, prep.schedule, spec.T, h_init, spec.seed, spec.replicates, track=track)
    rows = [row for tr in trajs for row in tr.rows()]
    masses = np.array([r[2] for r in rows])
    ledger.check("mass_in_unit_interval", bool(np.all((masses >= -_SLACK) & (masses <= 1 + _SLACK))))
    ledger.check("sampled_index_valid", all(0 <= r[3] < prep.model.n for r in rows))
    return [("trajectories.csv", TRAJECTORY_HEADER, rows)]


def _run_gaussian(prep, ledger, mode):
    spec, cfg, sched = prep.spec, prep.config, prep.schedule
    coupling = spec.params.get("coupling", "iid")
    fn = chained_moments if mode == "chained" else hopped_moments
    track = ledger.guard("closed_form", fn, cfg, sched, spec.T, coupling=coupling)
    if track is None:
        return []
    ledger.check("variance_nonnegative", bool(np.all(track.var >= -_SLACK)))
    ledger.check("posterior_variance", bool(np.all(track.sigma2[1:] <= 1.0 / (track.m[1:] * cfg.tau) + _SLACK)))
    if track.gamma is not None:
        g = track.gamma[1:]
        ledger.check("gamma_range", bool(np.all((g > 0) & (g <= 1 + _SLACK))))
    eps = sched.params.get("eps")
    if sched.kind in ("theorem3", "theorem4") and eps is not None:
        ledger.check("mean_within_eps", bool(np.all(np.abs(track.mean[1:] - cfg.mu0) <= eps)))
    if mode == "hopped":
        ceiling = spec.params.get("var_ceiling", 10.0 * (cfg.var0 + cfg.var_noise + cfg.var_bar))
        ledger.check("variance_ceiling", bool(np.all(track.var <= ceiling)))
    out = [("moments.csv", tuple(track.header()), list(track.rows()))]
    mc_reps = spec.params.get("mc_replicates", spec.replicates if spec.replicates > 1 else 0)
    if mc_reps:
        mc = simulate_gaussian_mc(cfg, sched, spec.T, mode=mode, replicates=mc_reps, seed=spec.seed)
        z = spec.params.get("mc_z", 3.0)
        ledger.check("mc_mean_agreement", bool(np.all(np.abs(mc.mean - track.mean[1:]) <= z * mc.stderr + _SLACK)))
        if coupling == "session":
            ok = np.abs(mc.var - track.var[1:]) <= z * mc.var_stderr + _SLACK
            ledger.check("mc_variance_agreement", bool(np.all(ok)))
        out.append(("mc.csv", MC_HEADER, list(mc.rows())))
    return out


def _run_linreg(prep, ledger):
    spec, cfg = prep.spec, prep.config
    budget = spec.budgets.get("work", DEFAULT_WORK_BUDGET)
    stochastic = bool(spec.params.get("stochastic", False))
    res = ledger.guard("spectral_ledger", simulate_linreg, cfg, prep.schedule, spec.T, spec.replicates, spec.seed,
                       stochastic=stochastic, budget=budget)
    if res is None:
        return []
    R = spec.replicates
    floor = 1.0 - cfg.eps - 3.0 * math.sqrt(cfg.eps * (1.0 - cfg.eps) / R)
    ledger.check("sustain_fraction", res.fraction >= floor, f"fraction {res.fraction!r}, floor {floor!r}")
    return [("linreg.csv", LINREG_HEADER, list(res.rows()))]


def _run_singular_tail(prep, ledger):
    p = prep.spec.params
    chk = singular_tail_check(int(p["m"]), int(p["d"]), float(p["gamma"]), int(p["draws"]), prep.spec.seed)
    ledger.check("tail_bound", chk.passed, f"frequency {chk.frequency!r}, limit {chk.limit!r}")
    header = ("m", "d", "gamma", "draws", "threshold", "frequency", "bound", "limit")
    row = (chk.m, chk.d, chk.gamma, chk.draws, chk.threshold, chk.frequency, chk.bound, chk.limit)
    return [("tail.csv", header, [row])]


_DISPATCH = {
    "metrics": _run_metrics,
    "schedule-eval": _run_schedule_eval,
    "discrete-exact": _run_discrete_exact,
    "discrete-mc": _run_discrete_mc,
    "gaussian-chained": lambda prep, ledger: _run_gaussian(prep, ledger, "chained"),
    "gaussian-hopped": lambda prep, ledger: _run_gaussian(prep, ledger, "hopped"),
    "linreg": _run_linreg,
    "singular-tail": _run_singular_tail,
}


def run(spec, out=None):
    """Execute ``spec`` and write its results.

    Parameters
    ----------
    spec : ExperimentSpec
    out : path, optional
        Output directory; defaults to ``spec.out`` or ``./iterlearn-<kind>``.

    Returns
    -------
    RunManifest

    Raises
    ------
    ConfigError
        Malformed input (exit code 2).
    BudgetError
        An enumeration or compute budget would be exceeded (exit code 3).
    """
    start = time.perf_counter()
    prep = prepare(spec)
    ledger = _Ledger()
    try:
        tables = _DISPATCH[spec.kind](prep, ledger)
    except (BudgetError, ConfigError):
        raise
    except (ImpossibleDataError, IterLearnError, ValueError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from None
    out_dir = Path(out or spec.out or f"iterlearn-{spec.kind}")
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name, header, rows in tables:
        write_csv(out_dir / name, header, rows)
        outputs.append(name)
    notes = {"schedule": prep.schedule.to_dict()} if prep.schedule is not None else {}
    manifest = RunManifest(
        spec=_jsonable(spec.source),
        version=__version__,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        invariants=ledger.items,
        wall_clock_s=time.perf_counter() - start,
        outputs=outputs,
        notes=_jsonable(notes),
    )
    (out_dir / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2, allow_nan=True) + "\n")
    log.info("%s: %d invariants, status %s", spec.kind, len(ledger.items), manifest.exit_code)
    return manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj
