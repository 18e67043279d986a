"""OLS with Newey-West (HAC) standard errors and the credit-spread regressions.

Lag truncation defaults to the plug-in ``floor(4 (T/100)^(2/9))``.  The
covariance has no small-sample correction and p-values use the asymptotic
normal distribution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

INTERCEPT = "const"


class EmpiricsError(ValueError):
    pass


class RankDeficientError(EmpiricsError):
    def __init__(self, columns: Sequence[str]):
        self.columns = tuple(columns)
        super().__init__("rank-deficient design; collinear columns: " + ", ".join(self.columns))


@dataclass(frozen=True)
class Dataset:
    """Column-labelled numeric table with an optional date column."""

    columns: Mapping[str, np.ndarray]
    dates: tuple[str, ...] | None = None

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise EmpiricsError("columns have different lengths")
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        object.__setattr__(self, "columns", cols)
        if self.dates is not None and len(self.dates) != self.n_obs:
            raise EmpiricsError("date column length does not match data")

    @property
    def n_obs(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"unknown column: {name}")
        return self.columns[name]

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def lag(self, name: str, k: int) -> np.ndarray:
        """Series shifted back ``k`` periods; the first ``k`` cells are NaN."""
        x = self[name]
        if k < 0:
            raise EmpiricsError("lag must be >= 0")
        out = np.full_like(x, np.nan)
        if k < x.size:
            out[k:] = x[: x.size - k]
        return out

    def with_columns(self, new: Mapping[str, np.ndarray]) -> "Dataset":
        cols = dict(self.columns)
        cols.update(new)
        return Dataset(cols, self.dates)

    @classmethod
    def from_csv(cls, path: str | Path, date_column: str | None = None) -> "Dataset":
        """Read a UTF-8 CSV with a header row.  Empty cells become NaN.

        A column is treated as dates if it is named ``date_column`` or, when
        none is given, if it is the first column and not numeric.
        """
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise EmpiricsError(f"{path}: empty file")
        header, body = [h.strip() for h in rows[0]], rows[1:]
        raw = {h: [r[j].strip() if j < len(r) else "" for r in body] for j, h in enumerate(header)}
        if date_column is None and header and not _numeric(raw[header[0]]):
            date_column = header[0]
        dates = tuple(raw.pop(date_column)) if date_column else None
        cols = {}
        for name, cells in raw.items():
            try:
                cols[name] = np.array([float(c) if c else np.nan for c in cells])
            except ValueError as exc:
                raise EmpiricsError(f"{path}: column {name} is not numeric") from exc
        return cls(cols, dates)


def _numeric(cells) -> bool:
    try:
        [float(c) for c in cells if c]
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class RegressionResult:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    tstat: np.ndarray
    pvalue: np.ndarray
    cov: np.ndarray
    r2: float
    dw: float
    lags: int
    nobs: int
    dependent: str = ""
    residuals: np.ndarray = field(default=None, repr=False)
    regime: str | None = None

    def __getitem__(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def std_error(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    def to_dict(self) -> dict:
        out = {
            "dependent": self.dependent,
            "nobs": self.nobs,
            "lags": self.lags,
            "r2": self.r2,
            "dw": self.dw,
            "coefficients": [
                {"name": n, "coef": float(b), "se": float(s), "t": float(t), "p": float(p)}
                for n, b, s, t, p in zip(self.names, self.coef, self.se, self.tstat, self.pvalue)
            ],
        }
        if self.regime is not None:
            out["regime"] = self.regime
        return out


def default_lags(nobs: int) -> int:
    return int(math.floor(4.0 * (nobs / 100.0) ** (2.0 / 9.0)))


def newey_west(X: np.ndarray, resid: np.ndarray, lags: int) -> np.ndarray:
    """HAC covariance of OLS coefficients with Bartlett weights ``1 - l/(L+1)``."""
    scores = X * resid[:, None]
    S = scores.T @ scores
    for l in range(1, lags + 1):
        gamma = scores[l:].T @ scores[:-l]
        S += (1.0 - l / (lags + 1.0)) * (gamma + gamma.T)
    bread = np.linalg.inv(X.T @ X)
    return bread @ S @ bread


def _collinear(X: np.ndarray, names: Sequence[str]) -> list[str]:
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    tol = s[0] * max(X.shape) * np.finfo(float).eps * 1e3 if s.size else 0.0
    null = vt[s <= tol]
    involved = np.any(np.abs(null) > 1e-8, axis=0)
    return [n for n, hit in zip(names, involved) if hit]


def _design(data: Dataset, y: str, X: Sequence[str], extra: Mapping[str, np.ndarray] | None = None):
    cols = {}
    for name in [y, *X]:
        cols[name] = extra[name] if extra and name in extra else data[name]
    stacked = np.column_stack([cols[n] for n in [y, *X]]) if X else cols[y][:, None]
    # lag construction leaves NaN at the start; drop those rows listwise
    missing = ~np.isfinite(stacked).all(axis=1)
    if missing.any():
        first_ok = int(np.argmin(missing)) if not missing.all() else stacked.shape[0]
        if missing[first_ok:].any():
            raise EmpiricsError("non-finite values inside the estimation sample")
        stacked = stacked[first_ok:]
    return stacked[:, 0], stacked[:, 1:]


def ols_hac(
    data: Dataset,
    y: str,
    X: Sequence[str],
    lags: int | None = None,
    intercept: str = "first",
    extra: Mapping[str, np.ndarray] | None = None,
) -> RegressionResult:
    """Least squares with an intercept and Newey-West covariance.

    ``intercept`` places the constant ``"first"`` or ``"last"`` in the
    output.  ``extra`` supplies derived columns (lags, interactions) by name.
    """
    if intercept not in ("first", "last"):
        raise ValueError("intercept must be 'first' or 'last'")
    X = list(X)
    yv, Xv = _design(data, y, X, extra)
    T = yv.size
    const = np.ones((T, 1))
    if intercept == "first":
        names = (INTERCEPT, *X)
        Z = np.hstack([const, Xv])
    else:
        names = (*X, INTERCEPT)
        Z = np.hstack([Xv, const])
    if T <= len(X) + 1:
        raise EmpiricsError(f"need more than {len(X) + 1} observations, got {T}")
    if lags is None:
        lags = default_lags(T)
    if lags < 0:
        raise EmpiricsError("lags must be >= 0")
    if np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise RankDeficientError(_collinear(Z, names))

    coef, *_ = np.linalg.lstsq(Z, yv, rcond=None)
    resid = yv - Z @ coef
    cov = newey_west(Z, resid, lags)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    p = 2.0 * stats.norm.sf(np.abs(t))
    tss = float(np.sum((yv - yv.mean()) ** 2))
    ssr = float(resid @ resid)
    r2 = 1.0 - ssr / tss if tss > 0 else 1.0
    dw = float(np.sum(np.diff(resid) ** 2) / ssr) if ssr > 0 else 0.0
    return RegressionResult(
        names=names,
        coef=coef,
        se=se,
        tstat=t,
        pvalue=p,
        cov=cov,
        r2=float(min(max(r2, 0.0), 1.0)),
        dw=dw,
        lags=int(lags),
        nobs=T,
        dependent=y,
        residuals=resid,
    )


def spread_leverage_regression(
    data: Dataset,
    spread: str,
    leverage: str,
    hp_columns: str | Sequence[str],
    dummy: str | None = None,
    lags: int | None = None,
) -> RegressionResult:
    """Spread on leverage and house-price inflation at lags 0..3.

    ``hp_columns`` is either four column names or a single column whose lags
    are built here.  With ``dummy`` the regressor ``leverage x dummy`` is
    added, so the elasticity in the dummy regime is the sum of both
    coefficients; an identically-zero interaction is dropped.
    """
    extra: dict[str, np.ndarray] = {}
    if isinstance(hp_columns, str):
        hp = []
        for k in range(4):
            name = f"{hp_columns}_l{k}"
            extra[name] = data.lag(hp_columns, k)
            hp.append(name)
    else:
        hp = list(hp_columns)
        if len(hp) != 4:
            raise EmpiricsError("expected four house-price inflation columns (lags 0..3)")
    X = [leverage, *hp]
    if dummy is not None:
        inter = data[leverage] * data[dummy]
        if np.any(inter[np.isfinite(inter)] != 0.0):
            name = f"{leverage}_x_{dummy}"
            extra[name] = inter
            X.append(name)
    return ols_hac(data, spread, X, lags=lags, extra=extra)


def decelerator_regression(
    data: Dataset,
    spread: str,
    shock: str,
    X_lagged: Sequence[str] = (),
    Z_exog: Sequence[str] = (),
    lags: int | None = None,
) -> RegressionResult:
    """Spread on the monetary shock, lagged controls and exogenous controls.

    The shock coefficient is reported first; a negative value marks a
    decelerator regime and a positive one an accelerator.
    """
    extra = {f"{name}_l1": data.lag(name, 1) for name in X_lagged}
    X = [shock, *extra, *Z_exog]
    res = ols_hac(data, spread, X, lags=lags, intercept="last", extra=extra)
    alpha = res.coef[0]
    regime = "decelerator" if alpha < 0 else "accelerator" if alpha > 0 else "neutral"
    return replace(res, regime=regime)
