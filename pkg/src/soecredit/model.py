"""Stacked linear expectational system.

Every equation is written in deviation-from-steady-state form as a row of

    A E_t[x_{t+1}] + B x_t + C x_{t-1} + D eps_t = 0

where ``eps_t`` are unit innovations of the exogenous AR(1) shock states.
Row ``k`` defines variable ``k`` of the registry.

Rates, spreads, inflation and growth rates are annualized percentage points;
gaps are percent.  A change in a gap over one quarter is annualized with
``ANNUALIZE`` wherever it is compared with a growth rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from .calibration import SHOCK_NAMES, Calibration

ANNUALIZE = 4.0


class Policy(str, Enum):
    FI = "fi"
    PI = "pi"

    @classmethod
    def parse(cls, value: "Policy | str") -> "Policy":
        if isinstance(value, Policy):
            return value
        return cls(value.lower())


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # predetermined | jump | auxiliary | exogenous
    description: str
    identity: str = ""


@dataclass(frozen=True)
class VariableRegistry:
    variables: tuple[Variable, ...]

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __len__(self) -> int:
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)


@dataclass(frozen=True)
class ModelSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    registry: VariableRegistry
    shocks: tuple[str, ...]
    row_tags: tuple[str, ...]
    policy: Policy | None = None
    persistence: Mapping[str, float] = field(default_factory=dict)
    # innovation scales; carried along for simulation, never used in A..D
    std_devs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.registry)
        for name in ("A", "B", "C"):
            if getattr(self, name).shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")
        if self.D.shape != (n, len(self.shocks)):
            raise ValueError(f"D must be {n}x{len(self.shocks)}")
        if len(self.row_tags) != n:
            raise ValueError("one row tag per variable required")
        for arr in (self.A, self.B, self.C, self.D):
            arr.setflags(write=False)

    @classmethod
    def from_matrices(cls, A, B, C, D, names: Sequence[str] | None = None, shocks: Sequence[str] | None = None):
        A, B, C, D = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (A, B, C, D))
        n = A.shape[0]
        names = list(names or [f"x{k}" for k in range(n)])
        shocks = tuple(shocks or [f"e{k}" for k in range(D.shape[1])])
        kinds = []
        for k in range(n):
            if np.any(A[:, k]):
                kinds.append("jump")
            elif np.any(C[:, k]):
                kinds.append("predetermined")
            else:
                kinds.append("auxiliary")
        reg = VariableRegistry(tuple(Variable(nm, kd, nm) for nm, kd in zip(names, kinds)))
        return cls(A.copy(), B.copy(), C.copy(), D.copy(), reg, shocks, tuple(names))

    @property
    def names(self) -> tuple[str, ...]:
        return self.registry.names

    @property
    def n(self) -> int:
        return len(self.registry)

    @property
    def lagged(self) -> np.ndarray:
        """Indices of variables that enter with a lag (the state block)."""
        return np.flatnonzero(np.any(self.C != 0, axis=0))

    @property
    def n_predetermined(self) -> int:
        return int(self.lagged.size)

    @property
    def n_jump(self) -> int:
        """Finite roots of the companion pencil beyond the predetermined block:
        the number of unstable roots a unique solution requires."""
        L, R = self.pencil()
        _, beta = linalg.eigvals(R, L, homogeneous_eigvals=True)
        scale = max(np.max(np.abs(beta), initial=0.0), 1.0)
        finite = int(np.sum(np.abs(beta) > 1e-12 * scale))
        return finite - self.n_predetermined

    def pencil(self) -> tuple[np.ndarray, np.ndarray]:
        """Companion form ``L E y' = R y`` with ``y = [x_{-1}[lagged]; x]``."""
        n, lagged = self.n, self.lagged
        k = lagged.size
        L = np.zeros((n + k, n + k))
        R = np.zeros((n + k, n + k))
        L[:k, :k] = np.eye(k)
        R[:k, k:] = np.eye(n)[lagged]
        L[k:, k:] = self.A
        R[k:, :k] = -self.C[:, lagged]
        R[k:, k:] = -self.B
        return L, R

    def row(self, tag: str) -> dict[str, dict[str, float]]:
        """Nonzero coefficients of one row keyed by timing and symbol."""
        k = self.row_tags.index(tag)
        out: dict[str, dict[str, float]] = {"lead": {}, "current": {}, "lag": {}, "shock": {}}
        for label, mat in (("lead", self.A), ("current", self.B), ("lag", self.C)):
            for j in np.flatnonzero(mat[k]):
                out[label][self.names[j]] = float(mat[k, j])
        for j in np.flatnonzero(self.D[k]):
            out["shock"][self.shocks[j]] = float(self.D[k, j])
        return out

    def referenced_symbols(self) -> set[str]:
        used = np.any(self.A != 0, axis=0) | np.any(self.B != 0, axis=0) | np.any(self.C != 0, axis=0)
        return {self.names[j] for j in np.flatnonzero(used)}

    def to_dict(self) -> dict:
        return {
            "policy": self.policy.value if self.policy else None,
            "variables": [
                {"name": v.name, "kind": v.kind, "description": v.description, "identity": v.identity}
                for v in self.registry
            ],
            "shocks": list(self.shocks),
            "row_tags": list(self.row_tags),
            "n_predetermined": self.n_predetermined,
            "n_jump": self.n_jump,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }


# -- registry -------------------------------------------------------------

_EXO = {name: f"e_{name}" for name in SHOCK_NAMES}

_VARIABLES: tuple[Variable, ...] = (
    # domestic nominal block
    Variable("pi", "jump", "CPI inflation, q/q annualized"),
    Variable("pi4", "auxiliary", "four-quarter inflation", "pi4 = (pi + pi_lag1 + pi_lag2 + pi_lag3)/4"),
    Variable("pi_lag1", "predetermined", "inflation lagged once", "pi_lag1 = pi[-1]"),
    Variable("pi_lag2", "predetermined", "inflation lagged twice", "pi_lag2 = pi_lag1[-1]"),
    Variable("pi_lag3", "predetermined", "inflation lagged three times", "pi_lag3 = pi_lag2[-1]"),
    Variable("pi_lead1", "auxiliary", "expected inflation next quarter", "pi_lead1 = E pi[+1]"),
    Variable("pi_lead2", "auxiliary", "expected inflation in two quarters", "pi_lead2 = E pi_lead1[+1]"),
    Variable("pi_lead3", "auxiliary", "expected inflation in three quarters", "pi_lead3 = E pi_lead2[+1]"),
    Variable(
        "pi4_exp",
        "auxiliary",
        "expected four-quarter inflation over the next year",
        "pi4_exp = (pi_lead1 + pi_lead2 + pi_lead3 + E pi_lead3[+1])/4",
    ),
    Variable("z", "jump", "real exchange rate gap (up = depreciation)"),
    Variable("prem", "auxiliary", "country risk premium in UIP", "prem = rn - rn_w + e_fx"),
    Variable("ygap", "jump", "output gap"),
    Variable("r", "auxiliary", "real policy rate", "r = i - E pi[+1]"),
    Variable("rgap", "auxiliary", "monetary stance", "rgap = r - rn"),
    Variable(
        "rn",
        "auxiliary",
        "natural rate of interest",
        "rn = a_g E gn[+1] + a_gw E g_w[+1] - a_spread spread - a_cb dcb",
    ),
    Variable("rn_pi", "auxiliary", "natural rate ignoring credit terms", "rn_pi = a_g E gn[+1] + a_gw E g_w[+1]"),
    Variable("rn_policy", "auxiliary", "natural rate perceived by the central bank", "rn_policy = rn (FI) or rn_pi (PI)"),
    Variable("i", "predetermined", "policy rate"),
    Variable("gn", "predetermined", "potential output growth gap"),
    Variable("lev", "auxiliary", "leverage ratio gap", "lev = b - ygap"),
    Variable("ib", "auxiliary", "borrowing rate gap (equals gross-rate gap in log-linear form)", "ib = i + spread"),
    Variable("spread", "auxiliary", "credit spread gap", "spread = beta_lev lev + e_spread"),
    Variable("cb", "jump", "borrowers' consumption gap"),
    Variable("dcb", "auxiliary", "expected change in the preference shock", "dcb = E e_preference[+1] - e_preference"),
    Variable("b", "predetermined", "household debt gap"),
    # world block
    Variable("pi_w", "jump", "world inflation"),
    Variable("pi4_w", "auxiliary", "world four-quarter inflation", "pi4_w = (pi_w + pi_w_lag1 + pi_w_lag2 + pi_w_lag3)/4"),
    Variable("pi_w_lag1", "predetermined", "world inflation lagged once", "pi_w_lag1 = pi_w[-1]"),
    Variable("pi_w_lag2", "predetermined", "world inflation lagged twice", "pi_w_lag2 = pi_w_lag1[-1]"),
    Variable("pi_w_lag3", "predetermined", "world inflation lagged three times", "pi_w_lag3 = pi_w_lag2[-1]"),
    Variable("pi_w_lead1", "auxiliary", "expected world inflation next quarter", "pi_w_lead1 = E pi_w[+1]"),
    Variable("pi_w_lead2", "auxiliary", "expected world inflation in two quarters", "pi_w_lead2 = E pi_w_lead1[+1]"),
    Variable("pi_w_lead3", "auxiliary", "expected world inflation in three quarters", "pi_w_lead3 = E pi_w_lead2[+1]"),
    Variable(
        "pi4_w_exp",
        "auxiliary",
        "expected world four-quarter inflation",
        "pi4_w_exp = (pi_w_lead1 + pi_w_lead2 + pi_w_lead3 + E pi_w_lead3[+1])/4",
    ),
    Variable("y_w", "jump", "world output gap"),
    Variable("r_w", "auxiliary", "world real rate", "r_w = i_w - E pi_w[+1]"),
    Variable("rgap_w", "auxiliary", "world monetary stance", "rgap_w = r_w - rn_w"),
    Variable("rn_w", "auxiliary", "world natural rate", "rn_w = c1_w E gn_w[+1]"),
    Variable("i_w", "predetermined", "world policy rate"),
    Variable("gn_w", "predetermined", "world potential growth gap"),
    Variable("g_w", "auxiliary", "world actual growth gap", "g_w = gn_w + 4 (y_w - y_w[-1])"),
) + tuple(Variable(_EXO[s], "exogenous", f"{s} shock state, AR(1)") for s in SHOCK_NAMES)

REGISTRY = VariableRegistry(_VARIABLES)


class _Rows:
    """Accumulates rows; each row is keyed by the variable it defines."""

    def __init__(self, registry: VariableRegistry, shocks: Sequence[str]):
        self.reg = registry
        self.shocks = list(shocks)
        n = len(registry)
        self.A = np.zeros((n, n))
        self.B = np.zeros((n, n))
        self.C = np.zeros((n, n))
        self.D = np.zeros((n, len(shocks)))
        self.tags: list[str | None] = [None] * n

    def add(self, defines: str, tag: str, lead=None, current=None, lag=None, shock=None):
        k = self.reg.index(defines)
        if self.tags[k] is not None:
            raise ValueError(f"row for {defines} written twice")
        self.tags[k] = tag
        for mat, terms in ((self.A, lead), (self.B, current), (self.C, lag)):
            for name, coef in (terms or {}).items():
                mat[k, self.reg.index(name)] += coef
        for name, coef in (shock or {}).items():
            self.D[k, self.shocks.index(name)] += coef

    def finish(self) -> tuple[np.ndarray, ...]:
        missing = [self.reg.names[k] for k, t in enumerate(self.tags) if t is None]
        if missing:
            raise ValueError(f"no equation for: {', '.join(missing)}")
        return self.A, self.B, self.C, self.D


def _four_quarter_block(rows: _Rows, prefix: str, tag: str):
    """pi4, lag chain, lead chain and expected next-year average for ``prefix``."""
    base = prefix
    pi4 = "pi4" if prefix == "pi" else "pi4_w"
    exp = "pi4_exp" if prefix == "pi" else "pi4_w_exp"
    lags = [f"{base}_lag{k}" for k in (1, 2, 3)]
    leads = [f"{base}_lead{k}" for k in (1, 2, 3)]
    rows.add(pi4, f"{tag}_four_quarter", current={pi4: 1.0, base: -0.25, **{l: -0.25 for l in lags}})
    prev = base
    for k, name in enumerate(lags, start=1):
        rows.add(name, f"{tag}_lag{k}", current={name: 1.0}, lag={prev: -1.0})
        prev = name
    prev = base
    for k, name in enumerate(leads, start=1):
        rows.add(name, f"{tag}_lead{k}", current={name: 1.0}, lead={prev: -1.0})
        prev = name
    rows.add(
        exp,
        f"{tag}_expected_year",
        current={exp: 1.0, leads[0]: -0.25, leads[1]: -0.25, leads[2]: -0.25},
        lead={leads[2]: -0.25},
    )


def build_system(cal: Calibration, policy: Policy | str = Policy.FI) -> ModelSystem:
    """Assemble all domestic, financial, world and shock-process rows."""
    policy = Policy.parse(policy)
    rows = _Rows(REGISTRY, SHOCK_NAMES)
    w = cal.world
    budget = cal.budget_coefficients()
    s = cal.budget_rate_scale

    # Phillips curve
    rows.add(
        "pi",
        "philips",
        current={"pi": 1.0, "pi4_exp": -cal.A_ld_pi, "z": -cal.A_z_pi, "e_oil": -cal.A_oil_pi, "e_inflation": -1.0},
        lag={"pi4": -(1.0 - cal.A_ld_pi), "ygap": -cal.A_y, "z": cal.A_z_pi, "e_oil": -cal.A_oil_lag_pi},
    )
    _four_quarter_block(rows, "pi", "philips")

    # UIP with risk premium; the natural real exchange rate is constant
    rows.add(
        "z",
        "uip",
        current={"z": 1.0, "r": 1.0, "r_w": -1.0, "prem": -1.0},
        lead={"z": -cal.D_zld},
        lag={"z": -(1.0 - cal.D_zld)},
    )
    rows.add("prem", "uip_premia", current={"prem": 1.0, "rn": -1.0, "rn_w": 1.0, "e_fx": -1.0})

    # IS curve
    rows.add(
        "ygap",
        "ygap",
        current={"ygap": 1.0, "y_w": -cal.beta_yw_y},
        lead={"ygap": -cal.beta_yld_y},
        lag={"ygap": -(1.0 - cal.beta_yld_y), "rgap": cal.beta_r_y, "z": -cal.beta_z_y},
    )
    rows.add("r", "fisher", current={"r": 1.0, "i": -1.0}, lead={"pi": 1.0})
    rows.add("rgap", "stance", current={"rgap": 1.0, "r": -1.0, "rn": 1.0})

    # natural rate, its credit-blind counterpart, and the one the rule uses
    rows.add(
        "rn",
        "nri",
        current={"rn": 1.0, "spread": cal.alpha_delta_nri, "dcb": cal.alpha_cb_nri},
        lead={"gn": -cal.alpha_g_nri, "g_w": -cal.alpha_gw_nri},
    )
    rows.add("rn_pi", "nri_wrong", current={"rn_pi": 1.0}, lead={"gn": -cal.alpha_g_nri, "g_w": -cal.alpha_gw_nri})
    perceived = "rn" if policy is Policy.FI else "rn_pi"
    rows.add("rn_policy", f"nri_policy_{policy.value}", current={"rn_policy": 1.0, perceived: -1.0})

    # policy rule
    g = 1.0 - cal.G_lag
    rows.add(
        "i",
        "policy_rule",
        current={
            "i": 1.0,
            "rn_policy": -g,
            "pi4_exp": -g * cal.G_pi * cal.w_infl,
            "pi4": -g * cal.G_pi * (1.0 - cal.w_infl),
            "ygap": -g * cal.G_y,
            "e_monetary": -1.0,
        },
        lag={"i": -cal.G_lag},
    )

    # potential growth; the natural exchange rate term vanishes
    rows.add(
        "gn",
        "pot_output",
        current={"gn": 1.0, "g_w": -cal.theta3, "e_potential": -1.0},
        lag={"gn": -cal.theta1},
    )

    # financial block
    rows.add("lev", "leverage", current={"lev": 1.0, "b": -1.0, "ygap": 1.0})
    rows.add("ib", "spread", current={"ib": 1.0, "i": -1.0, "spread": -1.0})
    rows.add(
        "spread",
        "spread_leverage",
        current={"spread": 1.0, "lev": -cal.beta_lev_delta, "e_spread": -1.0},
    )
    brc = cal.beta_r_cb
    rows.add(
        "cb",
        "euler_borrowers",
        current={"cb": 1.0, "ib": brc, "lev": brc * cal.v, "dcb": 1.0},
        lead={"cb": -cal.beta_ld_cb, "pi": -brc, "gn": -brc},
        lag={"cb": -(1.0 - cal.beta_ld_cb)},
    )
    rows.add("dcb", "preference_change", current={"dcb": 1.0, "e_preference": 1.0}, lead={"e_preference": -1.0})
    bl, bb = budget["beta_lag"], budget["beta_b_cb"]
    rows.add(
        "b",
        "budget_b",
        current={"b": 1.0, "ib": -s, "pi": bl * s, "gn": bl * s, "cb": -bb, "ygap": budget["beta_b_y"]},
        lag={"b": -bl},
    )

    # world block
    rows.add(
        "pi_w",
        "philips_w",
        current={"pi_w": 1.0, "pi4_w_exp": -w.alpha_w, "e_world_inflation": -1.0},
        lag={"pi4_w": -(1.0 - w.alpha_w), "y_w": -w.k_w},
    )
    _four_quarter_block(rows, "pi_w", "philips_w")
    rows.add(
        "y_w",
        "ygap_w",
        current={"y_w": 1.0},
        lead={"y_w": -w.delta1_w},
        lag={"y_w": -w.delta2_w, "rgap_w": w.delta3_w},
    )
    rows.add("r_w", "fisher_w", current={"r_w": 1.0, "i_w": -1.0}, lead={"pi_w": 1.0})
    rows.add("rgap_w", "stance_w", current={"rgap_w": 1.0, "r_w": -1.0, "rn_w": 1.0})
    rows.add("rn_w", "nri_w", current={"rn_w": 1.0}, lead={"gn_w": -w.c1_w})
    gw = 1.0 - w.gamma_w
    rows.add(
        "i_w",
        "policy_rule_w",
        current={
            "i_w": 1.0,
            "rn_w": -gw,
            "pi4_w_exp": -gw * w.beta1_w,
            "y_w": -gw * w.beta2_w,
            "e_world_monetary": -1.0,
        },
        lag={"i_w": -w.gamma_w},
    )
    rows.add("gn_w", "pot_output_w", current={"gn_w": 1.0, "e_world_potential": -1.0}, lag={"gn_w": -w.theta_w})
    rows.add(
        "g_w", "world_growth", current={"g_w": 1.0, "gn_w": -1.0, "y_w": -ANNUALIZE}, lag={"y_w": ANNUALIZE}
    )

    # AR(1) shock states driven by unit innovations
    persistence = {name: cal.shocks[name].persistence for name in SHOCK_NAMES}
    std_devs = {name: cal.shocks[name].std_dev for name in SHOCK_NAMES}
    for name, rho in persistence.items():
        rows.add(_EXO[name], f"shock_{name}", current={_EXO[name]: 1.0}, lag={_EXO[name]: -rho}, shock={name: -1.0})

    A, B, C, D = rows.finish()
    return ModelSystem(A, B, C, D, REGISTRY, SHOCK_NAMES, tuple(rows.tags), policy, persistence, std_devs)


def shock_state(shock: str) -> str:
    return _EXO[shock]


# -- verification ---------------------------------------------------------


def residuals(
    sys: ModelSystem,
    path: np.ndarray,
    shocks: np.ndarray | None = None,
    transition: np.ndarray | None = None,
    from_steady_state: bool = True,
) -> dict[str, float]:
    """Sup-norm residual of every row along a path.

    ``path`` is ``T x n`` and ``shocks`` (innovations) ``T x n_shocks``.  With
    ``transition`` omitted, expectations are the realized next-period values
    (a perfect-foresight check for deterministic paths) and the last period is
    skipped.  With the solved transition matrix, ``E_t x_{t+1} = P x_t``.
    When ``from_steady_state`` the period before the first row is zero.
    """
    x = np.asarray(path, dtype=float)
    if x.ndim != 2 or x.shape[1] != sys.n:
        raise ValueError(f"path must be T x {sys.n}, got {x.shape}")
    T = x.shape[0]
    eps = np.zeros((T, len(sys.shocks))) if shocks is None else np.asarray(shocks, dtype=float)
    if eps.shape != (T, len(sys.shocks)):
        raise ValueError(f"shocks must be {T} x {len(sys.shocks)}, got {eps.shape}")
    if T < 3:
        raise ValueError("path horizon must be at least 3")
    prev = np.vstack([np.zeros((1, sys.n)), x[:-1]])
    start = 0 if from_steady_state else 1
    if transition is None:
        stop = T - 1
        lead = x[start + 1 : stop + 1]
    else:
        stop = T
        lead = x[start:stop] @ np.asarray(transition).T
    rng = slice(start, stop)
    res = lead @ sys.A.T + x[rng] @ sys.B.T + prev[rng] @ sys.C.T + eps[rng] @ sys.D.T
    worst = np.max(np.abs(res), axis=0)
    return {tag: float(value) for tag, value in zip(sys.row_tags, worst)}


def max_residual(sys: ModelSystem, path, shocks=None, transition=None, from_steady_state=True) -> float:
    return max(residuals(sys, path, shocks, transition, from_steady_state).values())
