import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st

from soecredit.empirics import (
    Dataset,
    EmpiricsError,
    RankDeficientError,
    decelerator_regression,
    default_lags,
    ols_hac,
    spread_leverage_regression,
)
from soecredit.simulate import stochastic_simulate

from conftest import solved


def ar1_design(T=400, rho=0.7, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=T)
    x2 = np.cumsum(rng.normal(size=T)) * 0.1
    u = np.zeros(T)
    e = rng.normal(size=T) * (1 + np.abs(x1))
    for t in range(1, T):
        u[t] = rho * u[t - 1] + e[t]
    y = 1.0 + 0.5 * x1 - 0.3 * x2 + u
    return Dataset({"y": y, "x1": x1, "x2": x2})


def brute_force_nw(X, u, L):
    """Newey-West written out term by term from score autocovariances."""
    T, k = X.shape
    S = np.zeros((k, k))
    for l in range(L + 1):
        w = 1.0 if l == 0 else 1.0 - l / (L + 1)
        G = np.zeros((k, k))
        for t in range(l, T):
            G += np.outer(X[t] * u[t], X[t - l] * u[t - l])
        S += w * (G if l == 0 else G + G.T)
    Minv = np.linalg.inv(X.T @ X)
    return Minv @ S @ Minv


def test_noiseless_recovery():
    x = np.linspace(-3, 5, 60)
    res = ols_hac(Dataset({"x": x, "y": 2 + 3 * x}), "y", ["x"])
    assert res.names == ("const", "x")
    assert np.max(np.abs(res.coef - [2.0, 3.0])) < 1e-10
    assert res.r2 == pytest.approx(1.0, abs=1e-12)


def test_hac_matches_brute_force():
    d = ar1_design()
    res = ols_hac(d, "y", ["x1", "x2"], lags=4)
    X = np.column_stack([np.ones(d.n_obs), d["x1"], d["x2"]])
    u = d["y"] - X @ res.coef
    assert np.max(np.abs(res.cov - brute_force_nw(X, u, 4))) < 1e-12


def test_zero_lags_is_white():
    d = ar1_design(seed=3)
    res = ols_hac(d, "y", ["x1", "x2"], lags=0)
    X = np.column_stack([np.ones(d.n_obs), d["x1"], d["x2"]])
    u = res.residuals
    Minv = np.linalg.inv(X.T @ X)
    white = Minv @ (X.T * u**2) @ X @ Minv
    assert np.max(np.abs(res.cov - white)) < 1e-12


def test_agrees_with_statsmodels():
    d = ar1_design(seed=5)
    res = ols_hac(d, "y", ["x1", "x2"], lags=6)
    X = sm.add_constant(np.column_stack([d["x1"], d["x2"]]))
    ref = sm.OLS(d["y"], X).fit(cov_type="HAC", cov_kwds={"maxlags": 6, "use_correction": False})
    assert np.allclose(res.coef, ref.params, rtol=0, atol=1e-12)
    assert np.allclose(res.cov, ref.cov_params(), rtol=1e-10, atol=1e-14)
    assert np.allclose(res.pvalue, ref.pvalues, rtol=1e-8)
    assert res.r2 == pytest.approx(ref.rsquared, abs=1e-12)


def test_default_lag_rule():
    assert default_lags(100) == 4
    assert default_lags(50) == 3
    assert default_lags(1000) == 6
    d = ar1_design(T=250)
    assert ols_hac(d, "y", ["x1"]).lags == default_lags(250)


def test_diagnostics_in_range():
    res = ols_hac(ar1_design(), "y", ["x1", "x2"])
    assert 0 <= res.r2 <= 1
    assert 0 <= res.dw <= 4
    assert res.dw < 1.5  # positively autocorrelated errors
    assert len(res.coef) == len(res.se) == len(res.tstat) == len(res.pvalue) == 3


def test_rank_deficiency_names_columns():
    d = Dataset({"y": np.arange(10.0), "lev": np.full(10, 1.7), "x": np.sin(np.arange(10.0))})
    with pytest.raises(RankDeficientError) as info:
        ols_hac(d, "y", ["x", "lev"])
    assert set(info.value.columns) == {"const", "lev"}
    assert "lev" in str(info.value)


def test_too_few_observations():
    d = Dataset({"y": [1.0, 2.0, 4.0], "a": [0.0, 1.0, 3.0], "b": [1.0, 0.0, 2.0]})
    with pytest.raises(EmpiricsError, match="observations"):
        ols_hac(d, "y", ["a", "b"])


def test_interior_missing_value_rejected():
    y = np.arange(20.0)
    y[10] = np.nan
    with pytest.raises(EmpiricsError, match="non-finite"):
        ols_hac(Dataset({"y": y, "x": np.cos(np.arange(20.0))}), "y", ["x"])


def test_column_order_invariance():
    d = ar1_design(seed=8)
    a = ols_hac(d, "y", ["x1", "x2"], lags=3)
    b = ols_hac(d, "y", ["x2", "x1"], lags=3)
    assert a["x1"] == pytest.approx(b["x1"], abs=1e-12)
    assert a.std_error("x2") == pytest.approx(b.std_error("x2"), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_extra_regressor_never_lowers_r2(seed):
    d = ar1_design(T=120, seed=seed)
    rng = np.random.default_rng(seed + 1)
    d2 = d.with_columns({"noise": rng.normal(size=d.n_obs)})
    assert ols_hac(d2, "y", ["x1", "noise"]).r2 >= ols_hac(d, "y", ["x1"]).r2 - 1e-12


# -- spread on leverage -------------------------------------------------------------


def model_spread_data(seed=0, T=2000, noise=0.01):
    sim = stochastic_simulate(solved(), T, seed=seed)
    rng = np.random.default_rng(seed)
    lev = sim["lev"]
    spread = 0.031 * lev + noise * rng.normal(size=T)
    return Dataset({"spread": spread, "lev": lev, "hp": rng.normal(size=T)})


def test_spread_elasticity_recovered_from_model_data():
    res = spread_leverage_regression(model_spread_data(), "spread", "lev", "hp")
    assert abs(res["lev"] - 0.031) < 2 * res.std_error("lev")
    assert res.names == ("const", "lev", "hp_l0", "hp_l1", "hp_l2", "hp_l3")
    assert res.nobs == 2000 - 3


def test_explicit_lag_columns_match_built_lags():
    d = model_spread_data(seed=1, T=300)
    built = spread_leverage_regression(d, "spread", "lev", "hp")
    d2 = d.with_columns({f"p{k}": d.lag("hp", k) for k in range(4)})
    given_cols = spread_leverage_regression(d2, "spread", "lev", ["p0", "p1", "p2", "p3"])
    assert np.array_equal(built.coef, given_cols.coef)


def test_constant_leverage_rank_error():
    d = model_spread_data(T=200).with_columns({"lev": np.full(200, 2.0)})
    with pytest.raises(RankDeficientError):
        spread_leverage_regression(d, "spread", "lev", "hp")


def test_zero_dummy_equals_no_dummy():
    d = model_spread_data(T=300)
    d = d.with_columns({"dum": np.zeros(300)})
    a = spread_leverage_regression(d, "spread", "lev", "hp")
    b = spread_leverage_regression(d, "spread", "lev", "hp", dummy="dum")
    assert a.names == b.names
    assert np.array_equal(a.coef, b.coef) and np.array_equal(a.cov, b.cov)


def test_dummy_interaction_elasticity():
    rng = np.random.default_rng(2)
    T = 800
    lev = rng.normal(size=T)
    dum = (np.arange(T) >= T // 2).astype(float)
    spread = 0.03 * lev + 0.05 * lev * dum + 0.001 * rng.normal(size=T)
    d = Dataset({"spread": spread, "lev": lev, "hp": rng.normal(size=T), "dum": dum})
    res = spread_leverage_regression(d, "spread", "lev", "hp", dummy="dum")
    assert res["lev"] == pytest.approx(0.03, abs=5e-4)
    assert res["lev"] + res["lev_x_dum"] == pytest.approx(0.08, abs=5e-4)


def test_wrong_number_of_hp_columns():
    d = model_spread_data(T=100)
    with pytest.raises(EmpiricsError, match="four"):
        spread_leverage_regression(d, "spread", "lev", ["hp", "hp"])


# -- decelerator regression ------------------------------------------------------------


def model_decelerator_data(seed=0, T=100_000):
    # the impact effect is small next to spread-shock noise, hence the long sample
    sol = solved()
    sim = stochastic_simulate(sol, T, seed=seed, active_shocks=("monetary", "spread", "preference", "inflation"))
    j = sim.shock_labels.index("monetary")
    return Dataset({"spread": sim["spread"], "mon": sim.innovations[:, j], "lev": sim["lev"], "pi": sim["pi"]})


def test_model_data_shows_decelerator():
    # controls are predetermined; a contemporaneous endogenous control would absorb the shock
    res = decelerator_regression(model_decelerator_data(), "spread", "mon", X_lagged=["spread", "lev", "pi"])
    assert res.names[0] == "mon"
    assert res.coef[0] < 0
    assert res.regime == "decelerator"


def test_unrelated_white_noise():
    rng = np.random.default_rng(12)
    d = Dataset({"spread": rng.normal(size=600), "mon": rng.normal(size=600)})
    res = decelerator_regression(d, "spread", "mon")
    assert abs(res.coef[0]) < 2 * res.se[0]


def test_shock_rescaling_keeps_sign():
    d = model_decelerator_data(seed=1, T=800)
    base = decelerator_regression(d, "spread", "mon", X_lagged=["lev"])
    scaled = decelerator_regression(d.with_columns({"mon": 25.0 * d["mon"]}), "spread", "mon", X_lagged=["lev"])
    assert np.sign(base.coef[0]) == np.sign(scaled.coef[0])
    assert scaled.coef[0] == pytest.approx(base.coef[0] / 25.0, rel=1e-10)


# -- data files -----------------------------------------------------------------------------


def test_csv_with_dates_and_gaps(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("date,y,x\n2001Q1,1.5,\n2001Q2,2.5,1\n2001Q3,4,2\n2001Q4,5.5,3\n", encoding="utf-8")
    d = Dataset.from_csv(path)
    assert d.dates == ("2001Q1", "2001Q2", "2001Q3", "2001Q4")
    assert np.isnan(d["x"][0])
    res = ols_hac(d, "y", ["x"], lags=0)
    assert res.nobs == 3
    assert res.coef == pytest.approx([1.0, 1.5])


def test_csv_non_numeric_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,x\n1,a\n2,b\n", encoding="utf-8")
    with pytest.raises(EmpiricsError, match="not numeric"):
        Dataset.from_csv(path, date_column="y")


def test_unknown_column():
    with pytest.raises(KeyError, match="unknown column"):
        Dataset({"y": [1.0]})["x"]
