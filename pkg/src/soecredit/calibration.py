"""Parameter set for the small-open-economy model with household credit.

All rates, spreads, inflation and growth rates are annualized percentage
points; output, consumption, debt and leverage gaps are percent deviations.
Magnitudes are stored positive and the model equations apply the signs
(e.g. the IS elasticity to the real-rate gap is stored as ``beta_r_y = 0.1``
and enters with a minus sign).

A calibration is written as a flat ``key = value`` document.  Nested groups use
dotted keys: ``world.alpha_w``, ``steady.lev_ss``, ``shocks.monetary.std_dev``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

SHOCK_NAMES = (
    "inflation",
    "fx",
    "monetary",
    "potential",
    "spread",
    "preference",
    "world_inflation",
    "world_monetary",
    "world_potential",
    "oil",
)

SHOCK_ALIASES = {
    "credit_supply": "spread",
    "credit_demand": "preference",
    "cost_push": "inflation",
    "foreign_monetary": "world_monetary",
    "foreign_inflation": "world_inflation",
    "foreign_potential": "world_potential",
}


class CalibrationError(ValueError):
    """Raised for malformed calibration documents or invariant violations."""


@dataclass(frozen=True)
class ShockSpec:
    std_dev: float
    persistence: float


@dataclass(frozen=True)
class WorldParams:
    alpha_w: float = 0.3
    k_w: float = 0.1
    delta1_w: float = 0.3
    delta2_w: float = 0.7
    delta3_w: float = 0.6
    c0_w: float = 2.0
    c1_w: float = 1.0
    gamma_w: float = 0.5
    beta1_w: float = 1.5
    beta2_w: float = 0.5
    theta_w: float = 0.8
    g_nw_ss: float = 2.0
    pi_bar_w: float = 2.0


@dataclass(frozen=True)
class SteadyState:
    pi_bar: float = 2.0
    spread_ss: float = 1.5
    lev_ss: float = 0.5
    r_b_ss: float = 1.0125
    income_share: float = 0.4


def _default_shocks() -> dict[str, ShockSpec]:
    return {
        "inflation": ShockSpec(0.5, 0.0),
        "fx": ShockSpec(1.0, 0.5),
        "monetary": ShockSpec(0.25, 0.0),
        "potential": ShockSpec(0.3, 0.0),
        "spread": ShockSpec(0.4, 0.5),
        "preference": ShockSpec(1.0, 0.5),
        "world_inflation": ShockSpec(0.3, 0.0),
        "world_monetary": ShockSpec(0.25, 0.0),
        "world_potential": ShockSpec(0.3, 0.0),
        "oil": ShockSpec(0.0, 0.0),
    }


@dataclass(frozen=True)
class Calibration:
    # financial block
    beta_lev_delta: float = 0.031
    alpha_delta_nri: float = 0.5
    alpha_g_nri: float = 0.4
    alpha_gw_nri: float = 0.6
    alpha_cb_nri: float = 0.4
    v: float = 0.0225
    beta_r_y: float = 0.1
    beta_r_cb_multiplier: float = 5.0
    beta_ld_cb: float = 0.5
    budget_rate_scale: float = 0.25
    # Phillips curve
    A_ld_pi: float = 0.3
    A_y: float = 0.1
    A_z_pi: float = 0.05
    A_oil_pi: float = 0.02
    A_oil_lag_pi: float = 0.0
    # UIP
    D_zld: float = 0.75
    # IS curve
    beta_yld_y: float = 0.2
    beta_z_y: float = 0.05
    beta_yw_y: float = 0.2
    # policy rule
    G_lag: float = 0.75
    G_pi: float = 1.5
    G_y: float = 0.3
    w_infl: float = 0.5
    # potential growth
    theta1: float = 0.8
    theta2: float = 0.0
    theta3: float = 0.1
    g_n_ss: float = 3.0
    world: WorldParams = field(default_factory=WorldParams)
    steady: SteadyState = field(default_factory=SteadyState)
    shocks: Mapping[str, ShockSpec] = field(default_factory=_default_shocks)
    provenance: tuple[str, ...] = field(default=(), compare=False)

    @property
    def beta_r_cb(self) -> float:
        """Borrowers' rate sensitivity, a multiple of the IS elasticity."""
        return self.beta_r_cb_multiplier * self.beta_r_y

    def budget_coefficients(self) -> dict[str, float]:
        st = self.steady
        return derive_budget_coefficients(
            st.lev_ss,
            st.r_b_ss,
            1.0 + st.pi_bar / 400.0,
            1.0 + self.g_n_ss / 400.0,
            st.income_share,
        )

    def to_flat(self) -> dict[str, float]:
        return _flatten(self)

    def with_overrides(self, overrides: Mapping[str, float]) -> "Calibration":
        flat = self.to_flat()
        for key, value in overrides.items():
            if key not in flat:
                raise CalibrationError(f"unknown calibration key: {key}")
            flat[key] = float(value)
        cal = _unflatten(flat, provenance=self.provenance)
        validate(cal)
        return cal

    def fingerprint(self) -> str:
        return hashlib.sha256(dumps(self).encode("utf-8")).hexdigest()[:16]


# Parameters with a value printed in the source calibration table; every other
# key is a documented default and gets flagged in the provenance log.
PRINTED_KEYS = frozenset(
    {
        "beta_lev_delta",
        "alpha_delta_nri",
        "alpha_g_nri",
        "alpha_gw_nri",
        "alpha_cb_nri",
        "v",
        "beta_r_y",
        "beta_r_cb_multiplier",
    }
)

def _flatten(cal: Calibration) -> dict[str, float]:
    flat: dict[str, float] = {}
    for f in fields(cal):
        if f.name in ("world", "steady", "shocks", "provenance"):
            continue
        flat[f.name] = float(getattr(cal, f.name))
    for f in fields(cal.world):
        flat[f"world.{f.name}"] = float(getattr(cal.world, f.name))
    for f in fields(cal.steady):
        flat[f"steady.{f.name}"] = float(getattr(cal.steady, f.name))
    for name in SHOCK_NAMES:
        spec = cal.shocks[name]
        flat[f"shocks.{name}.std_dev"] = float(spec.std_dev)
        flat[f"shocks.{name}.persistence"] = float(spec.persistence)
    return flat


def _unflatten(flat: Mapping[str, float], provenance: tuple[str, ...] = ()) -> Calibration:
    top = {}
    world = {}
    steady = {}
    shocks: dict[str, dict[str, float]] = {name: {} for name in SHOCK_NAMES}
    for key, value in flat.items():
        parts = key.split(".")
        if parts[0] == "world":
            world[parts[1]] = value
        elif parts[0] == "steady":
            steady[parts[1]] = value
        elif parts[0] == "shocks":
            shocks[parts[1]][parts[2]] = value
        else:
            top[key] = value
    return Calibration(
        **top,
        world=WorldParams(**world),
        steady=SteadyState(**steady),
        shocks={name: ShockSpec(**shocks[name]) for name in SHOCK_NAMES},
        provenance=provenance,
    )


DEFAULT_FLAT = _flatten(Calibration())
CANONICAL_KEYS = tuple(sorted(DEFAULT_FLAT))

_UNIT_INTERVAL = (
    "A_ld_pi",
    "D_zld",
    "beta_yld_y",
    "beta_ld_cb",
    "G_lag",
    "w_infl",
    "world.alpha_w",
    "world.gamma_w",
)
_NON_NEGATIVE = ("beta_lev_delta", "alpha_delta_nri", "beta_r_y", "beta_r_cb_multiplier")
_POSITIVE = ("v", "steady.spread_ss", "steady.lev_ss", "steady.r_b_ss", "budget_rate_scale")


def validate(cal: Calibration) -> None:
    """Check every invariant; raise :class:`CalibrationError` naming the key."""
    flat = cal.to_flat()
    for key, value in flat.items():
        if not math.isfinite(value):
            raise CalibrationError(f"{key} must be finite")
    for key in _NON_NEGATIVE:
        if flat[key] < 0:
            raise CalibrationError(f"{key} must be ≥ 0")
    for key in _POSITIVE:
        if flat[key] <= 0:
            raise CalibrationError(f"{key} must be > 0")
    for key in _UNIT_INTERVAL:
        if not 0.0 <= flat[key] <= 1.0:
            raise CalibrationError(f"{key} must be in [0, 1]")
    for name in SHOCK_NAMES:
        spec = cal.shocks[name]
        if spec.std_dev < 0:
            raise CalibrationError(f"shocks.{name}.std_dev must be ≥ 0")
        if not 0.0 <= spec.persistence < 1.0:
            raise CalibrationError(f"shocks.{name}.persistence must be in [0, 1)")
    if cal.theta1 + cal.theta3 >= 1.0:
        raise CalibrationError("theta1 + theta3 must be < 1")


def derive_budget_coefficients(
    lev_ss: float,
    r_b_ss: float,
    pi_bar: float,
    g_ss: float,
    income_share: float,
) -> dict[str, float]:
    """Log-linear coefficients of the borrowers' budget constraint.

    The nonlinear constraint divided by output reads
    ``lev_t / R_t = c_t + lev_{t-1} / (Pi_t * G_t) - income_share`` with gross
    quarterly factors.  Returns the weight on lagged debt and the (common)
    weight on the consumption-income gap.
    """
    for name, value in (
        ("lev_ss", lev_ss),
        ("r_b_ss", r_b_ss),
        ("pi_bar", pi_bar),
        ("g_ss", g_ss),
        ("income_share", income_share),
    ):
        if value <= 0:
            raise CalibrationError(f"{name} must be > 0")
    growth = pi_bar * g_ss
    c_share = lev_ss * (1.0 / r_b_ss - 1.0 / growth) + income_share
    if c_share <= 0:
        raise CalibrationError("steady-state borrower consumption non-positive")
    beta_b = c_share * r_b_ss / lev_ss
    return {"beta_lag": r_b_ss / growth, "beta_b_cb": beta_b, "beta_b_y": beta_b, "c_share": c_share}


def aggregate_spread_elasticity(beta_H: float, w_H: float, beta_NH: float) -> float:
    """Spread elasticity of total household debt from its two segments.

    The segment leverage gaps move in proportion to total leverage with the
    segment's debt share, and the total spread is the debt-weighted average of
    segment spreads, so each elasticity is weighted by its squared share.
    """
    if not 0.0 <= w_H <= 1.0:
        raise CalibrationError("w_H must be in [0, 1]")
    return beta_H * w_H**2 + beta_NH * (1.0 - w_H) ** 2


# -- scenario presets ------------------------------------------------------

SCENARIOS: dict[str, dict[str, float]] = {
    "no_friction": {"beta_lev_delta": 0.0},
    "baseline_friction": {"beta_lev_delta": 0.031},
    "macroprudential": {"beta_lev_delta": 0.1},
    "accelerator": {"beta_lev_delta": 0.031, "beta_r_y": 0.5, "beta_r_cb_multiplier": 0.2},
    "custom": {},
}
SCENARIO_ALIASES = {"baseline": "baseline_friction", "mp": "macroprudential"}


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    overrides: Mapping[str, float]

    def apply(self, cal: Calibration) -> Calibration:
        return cal.with_overrides(self.overrides)


def scenario(name: str, overrides: Mapping[str, float] | None = None) -> ScenarioPreset:
    key = SCENARIO_ALIASES.get(name, name)
    if key not in SCENARIOS:
        raise CalibrationError(f"unknown scenario: {name}")
    merged = dict(SCENARIOS[key])
    if overrides:
        merged.update(overrides)
    return ScenarioPreset(key, merged)


# -- config documents -------------------------------------------------------


def parse_config(text: str) -> dict[str, float]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CalibrationError(f"line {lineno}: expected 'key = value'")
        key, _, value = (s.strip() for s in line.partition("="))
        if not key:
            raise CalibrationError(f"line {lineno}: empty key")
        if key in values:
            raise CalibrationError(f"line {lineno}: duplicate key {key}")
        try:
            values[key] = float(value)
        except ValueError:
            raise CalibrationError(f"line {lineno}: {key} has non-numeric value {value!r}") from None
    return values


def load_calibration(source: str | Path | Mapping[str, float] | None = None) -> Calibration:
    """Build a validated calibration from a document, a path or a mapping.

    Omitted keys take their documented default.  Every defaulted key that has
    no printed source value is recorded in ``Calibration.provenance``.
    """
    if source is None:
        given: Mapping[str, float] = {}
    elif isinstance(source, Mapping):
        given = {k: float(v) for k, v in source.items()}
    elif isinstance(source, Path):
        given = parse_config(source.read_text(encoding="utf-8"))
    else:
        given = parse_config(source)
    unknown = sorted(set(given) - set(DEFAULT_FLAT))
    if unknown:
        raise CalibrationError(f"unknown calibration key: {', '.join(unknown)}")
    flat = dict(DEFAULT_FLAT)
    flat.update(given)
    defaulted = tuple(k for k in CANONICAL_KEYS if k not in given)
    log = tuple(
        f"{k}: default {DEFAULT_FLAT[k]!r}" + ("" if k in PRINTED_KEYS else " (unprinted)")
        for k in defaulted
    )
    cal = _unflatten(flat, provenance=log)
    validate(cal)
    return cal


def dumps(cal: Calibration) -> str:
    """Serialize to the flat document format with sorted keys."""
    flat = cal.to_flat()
    return "".join(f"{key} = {flat[key]!r}\n" for key in CANONICAL_KEYS)


def resolve_shock(name: str) -> str:
    key = SHOCK_ALIASES.get(name, name)
    if key not in SHOCK_NAMES:
        raise KeyError(name)
    return key


def with_shock(cal: Calibration, name: str, **changes: float) -> Calibration:
    """Return a copy with one shock process modified."""
    shocks = dict(cal.shocks)
    shocks[name] = replace(shocks[name], **changes)
    out = replace(cal, shocks=shocks)
    validate(out)
    return out
