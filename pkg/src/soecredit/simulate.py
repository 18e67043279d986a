"""Impulse responses, stochastic simulation, loss functions and scenario runs."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .calibration import SHOCK_NAMES, Calibration, resolve_shock
from .model import ANNUALIZE, Policy, build_system, shock_state
from .solver import Solution, SolverError, solve

BURN_IN = 100
LOSS_VERSIONS = (1, 2, 3, 4)


def fmt(x: float) -> str:
    """Twelve significant digits, the precision of every emitted number."""
    # adding 0.0 turns -0.0 into 0.0
    return f"{float(x) + 0.0:.12g}"


@dataclass(frozen=True)
class PathSet:
    """Labeled ``T x n`` time-series matrix in deviation units.

    ``initial`` is the state in the period before the first row (zero for
    paths that start from the steady state).
    """

    values: np.ndarray
    labels: tuple[str, ...]
    metadata: Mapping = field(default_factory=dict)
    innovations: np.ndarray | None = None
    shock_labels: tuple[str, ...] = ()
    initial: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] != len(self.labels):
            raise ValueError(f"values must be T x {len(self.labels)} with T >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    @property
    def periods(self) -> np.ndarray:
        return np.arange(self.horizon)

    def __getitem__(self, label: str) -> np.ndarray:
        try:
            return self.values[:, self.labels.index(label)]
        except ValueError:
            raise KeyError(label) from None

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def previous(self, label: str) -> float:
        if self.initial is None:
            return 0.0
        return float(self.initial[self.labels.index(label)])

    def difference(self, label: str) -> np.ndarray:
        """First difference, using the pre-sample value for the first entry."""
        col = self[label]
        return np.diff(col, prepend=self.previous(label))

    def select(self, labels: Sequence[str]) -> "PathSet":
        idx = [self.labels.index(l) for l in labels]
        init = None if self.initial is None else self.initial[idx]
        return PathSet(self.values[:, idx], tuple(labels), dict(self.metadata), self.innovations, self.shock_labels, init)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["period", *self.labels])
        for t, row in enumerate(self.values):
            writer.writerow([t, *(fmt(x) for x in row)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {
            "metadata": dict(self.metadata),
            "labels": list(self.labels),
            "periods": self.periods.tolist(),
            "values": {label: [float(fmt(x)) for x in self.values[:, j]] for j, label in enumerate(self.labels)},
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_csv(cls, text: str, metadata: Mapping | None = None) -> "PathSet":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        if header[0] != "period":
            raise ValueError("first column must be 'period'")
        values = np.array([[float(x) for x in r[1:]] for r in body])
        return cls(values, tuple(header[1:]), dict(metadata or {}))


# -- impulse responses ----------------------------------------------------


def _shock_index(sol: Solution, shock: str) -> tuple[str, int]:
    try:
        name = resolve_shock(shock)
    except KeyError:
        raise KeyError(f"unknown shock: {shock}") from None
    return name, sol.shocks.index(name)


def irf(
    sol: Solution,
    shock: str,
    size: float = 1.0,
    horizon: int = 20,
    absolute: bool = False,
    metadata: Mapping | None = None,
) -> PathSet:
    """Response to a one-time innovation, periods ``0..horizon``.

    ``size`` is in standard deviations of the shock unless ``absolute``, in
    which case it is the innovation itself (p.p. or percent).
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    name, j = _shock_index(sol, shock)
    impulse = size if absolute else size * sol.system.std_devs.get(name, 1.0)
    n = sol.system.n
    x = np.empty((horizon + 1, n))
    x[0] = sol.Q[:, j] * impulse
    for t in range(1, horizon + 1):
        x[t] = sol.P @ x[t - 1]
    eps = np.zeros((horizon + 1, len(sol.shocks)))
    eps[0, j] = impulse
    meta = {
        "kind": "irf",
        "shock": name,
        "impulse": impulse,
        "policy": sol.system.policy.value if sol.system.policy else None,
    }
    meta.update(metadata or {})
    return PathSet(x, sol.names, meta, eps, sol.shocks, np.zeros(n))


def stochastic_simulate(
    sol: Solution,
    periods: int,
    seed: int,
    active_shocks: Iterable[str] = SHOCK_NAMES,
    burn_in: int = BURN_IN,
    metadata: Mapping | None = None,
) -> PathSet:
    """Simulate from the steady state and keep the last ``periods`` rows.

    Innovations for all shocks are drawn in registry order from one
    ``numpy.random.default_rng(seed)`` stream (``(burn_in + periods) x
    n_shocks`` standard normals) and inactive shocks are then zeroed, so the
    draws of a shock do not depend on which other shocks are active.
    """
    if periods < 1:
        raise ValueError("periods must be >= 1")
    active = {_shock_index(sol, s)[0] for s in active_shocks}
    m = len(sol.shocks)
    scale = np.array([sol.system.std_devs.get(s, 1.0) if s in active else 0.0 for s in sol.shocks])
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((burn_in + periods, m)) * scale
    total = burn_in + periods
    x = np.zeros((total + 1, sol.system.n))
    lagged = sol.system.lagged
    P = sol.P[:, lagged]
    shock_part = draws @ sol.Q.T
    for t in range(total):
        x[t + 1] = P @ x[t, lagged] + shock_part[t]
    meta = {
        "kind": "simulation",
        "seed": seed,
        "periods": periods,
        "burn_in": burn_in,
        "active_shocks": sorted(active),
        "policy": sol.system.policy.value if sol.system.policy else None,
    }
    meta.update(metadata or {})
    return PathSet(x[burn_in + 1 :], sol.names, meta, draws[burn_in:], sol.shocks, x[burn_in].copy())


# -- identities on stored series -------------------------------------------


def nri_gap(paths: PathSet) -> np.ndarray:
    """Credit-blind minus full natural rate, from stored series."""
    return paths["rn_pi"] - paths["rn"]


def nri_gap_components(paths: PathSet, cal: Calibration) -> np.ndarray:
    """The same gap rebuilt from leverage, the spread shock and the expected
    change of the preference shock."""
    credit = cal.alpha_delta_nri * (cal.beta_lev_delta * paths["lev"] + paths[shock_state("spread")])
    return credit + cal.alpha_cb_nri * paths["dcb"]


def nri_decomposition(paths: PathSet, cal: Calibration) -> dict[str, np.ndarray]:
    """Additive contributions to the natural rate."""
    spread_shock = paths[shock_state("spread")]
    return {
        "growth": paths["rn_pi"],
        "spread_shock": -cal.alpha_delta_nri * spread_shock,
        "leverage": -cal.alpha_delta_nri * cal.beta_lev_delta * paths["lev"],
        "preference": -cal.alpha_cb_nri * paths["dcb"],
    }


# -- loss -----------------------------------------------------------------


def loss(paths: PathSet, version: int, alpha: float, beta: float = 0.0) -> float:
    """Central-bank loss from population variances of deviation series.

    1: var(pi) + alpha var(ygap)
    2: var(pi) + alpha var(4 (ygap - ygap[-1]))   (actual minus potential growth)
    3: version 1 + beta var(i - i[-1])
    4: version 2 + beta var(i - i[-1])
    """
    if version not in LOSS_VERSIONS:
        raise ValueError(f"loss version must be one of {LOSS_VERSIONS}")
    needed = ["pi", "ygap"] + (["i"] if version in (3, 4) else [])
    missing = [s for s in needed if s not in paths]
    if missing:
        raise KeyError(f"paths lack series for loss version {version}: {', '.join(missing)}")
    value = np.var(paths["pi"])
    activity = paths["ygap"] if version in (1, 3) else ANNUALIZE * paths.difference("ygap")
    value += alpha * np.var(activity)
    if version in (3, 4):
        value += beta * np.var(paths.difference("i"))
    return float(value)


@dataclass(frozen=True)
class LossReport:
    fi: Mapping[int, float]
    pi: Mapping[int, float]
    ratio: Mapping[int, float]
    flags: Mapping[int, str]
    parameters: Mapping

    def rows(self) -> list[tuple[int, float, float, float]]:
        return [(k, self.fi[k], self.pi[k], self.ratio[k]) for k in LOSS_VERSIONS]

    def to_dict(self) -> dict:
        return {
            "parameters": dict(self.parameters),
            "versions": [
                {
                    "version": k,
                    "fi": float(fmt(f)),
                    "pi": float(fmt(p)),
                    "ratio": float(fmt(r)),
                    **({"flag": self.flags[k]} if k in self.flags else {}),
                }
                for k, f, p, r in self.rows()
            ],
        }

    def to_csv(self) -> str:
        lines = ["version,fi,pi,ratio"]
        lines += [f"{k},{fmt(f)},{fmt(p)},{fmt(r)}" for k, f, p, r in self.rows()]
        return "\n".join(lines) + "\n"


def compare_rules(
    cal: Calibration,
    v: float = 0.64,
    alpha: float = 0.5,
    beta: float = 6.0,
    periods: int = 10_000,
    seed: int = 0,
    shocks: Sequence[str] = ("spread", "preference"),
) -> LossReport:
    """Losses under the fully- and partially-informed rules.

    Both economies see the same innovation draws (common random numbers).
    """
    cal = cal.with_overrides({"v": v})
    paths = {}
    for policy in (Policy.FI, Policy.PI):
        sol = solve(build_system(cal, policy))
        paths[policy] = stochastic_simulate(sol, periods, seed, shocks)
    fi, pi, ratio, flags = {}, {}, {}, {}
    for k in LOSS_VERSIONS:
        fi[k] = loss(paths[Policy.FI], k, alpha, beta)
        pi[k] = loss(paths[Policy.PI], k, alpha, beta)
        if fi[k] > 0:
            ratio[k] = pi[k] / fi[k]
        else:
            ratio[k] = 1.0
            flags[k] = "undefined ratio: zero loss under the fully-informed rule"
    params = {
        "v": v,
        "alpha": alpha,
        "beta": beta,
        "periods": periods,
        "seed": seed,
        "active_shocks": sorted(resolve_shock(s) for s in shocks),
    }
    return LossReport(fi, pi, ratio, flags, params)


# -- sweeps ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepEntry:
    value: float
    paths: PathSet | None
    error: str | None = None


def scenario_sweep(
    cal: Calibration,
    parameter: str,
    values: Sequence[float],
    shock: str,
    horizon: int = 20,
    policy: Policy | str = Policy.FI,
    size: float = 1.0,
    absolute: bool = False,
    workers: int = 1,
) -> list[SweepEntry]:
    """One impulse response per parameter value, in input order.

    A value whose calibration is invalid or whose model has no unique solution
    is recorded with its error and the sweep continues.
    """
    if parameter not in cal.to_flat():
        raise KeyError(f"unknown calibration key: {parameter}")
    resolve_shock(shock)

    def run(value: float) -> SweepEntry:
        try:
            c = cal.with_overrides({parameter: value})
            sol = solve(build_system(c, policy))
        except (SolverError, ValueError) as exc:
            return SweepEntry(float(value), None, str(exc))
        meta = {"parameter": parameter, "value": float(value)}
        return SweepEntry(float(value), irf(sol, shock, size, horizon, absolute, meta))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, values))
    return [run(v) for v in values]


def peak(series: np.ndarray) -> float:
    """Largest absolute deviation, with its sign."""
    j = int(np.argmax(np.abs(series)))
    return float(series[j])


def relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else 0.0
