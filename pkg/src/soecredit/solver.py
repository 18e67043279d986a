"""Saddle-path solution of ``A E x' + B x + C x_{-1} + D eps = 0``.

The default method stacks the lagged variables into a companion pencil and
orders its generalized Schur form so that stable roots come first (Klein's
method).  A fixed-point iteration on the quadratic matrix equation
``A P^2 + B P + C = 0`` is available as an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .model import ModelSystem

DEFAULT_TOL = 1e-10
MAX_ITER = 10_000
# roots within this distance of the unit circle count as unstable
UNIT_ROOT_BAND = 1e-6


class SolverError(RuntimeError):
    code = "solver_error"

    def __init__(self, message: str, report: "SpectralReport | None" = None, residual: float | None = None):
        super().__init__(message)
        self.report = report
        self.residual = residual


class IndeterminacyError(SolverError):
    code = "indeterminate"


class NoStableSolutionError(SolverError):
    code = "explosive"


class ConvergenceError(SolverError):
    code = "no_convergence"


@dataclass(frozen=True)
class SpectralReport:
    moduli: tuple[float, ...]  # finite roots, descending
    n_inside: int
    n_outside: int
    n_infinite: int
    n_predetermined: int
    n_jump: int

    def to_dict(self) -> dict:
        return {
            "moduli": list(self.moduli),
            "n_inside": self.n_inside,
            "n_outside": self.n_outside,
            "n_infinite": self.n_infinite,
            "n_predetermined": self.n_predetermined,
            "n_jump": self.n_jump,
        }


@dataclass(frozen=True)
class Solution:
    P: np.ndarray
    Q: np.ndarray
    eigenvalues: np.ndarray  # finite generalized eigenvalues of the pencil
    n_infinite: int
    determinacy: str
    system: ModelSystem
    residual: float

    @property
    def names(self) -> tuple[str, ...]:
        return self.system.names

    @property
    def shocks(self) -> tuple[str, ...]:
        return self.system.shocks

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.P)))) if self.P.size else 0.0


def _stable(alpha, beta):
    return np.abs(alpha) < (1.0 - UNIT_ROOT_BAND) * np.abs(beta)


def _report(alpha: np.ndarray, beta: np.ndarray, sys: ModelSystem) -> tuple[SpectralReport, np.ndarray, int]:
    scale = max(np.max(np.abs(beta)), np.max(np.abs(alpha)), 1.0)
    infinite = np.abs(beta) <= 1e-12 * scale
    roots = alpha[~infinite] / beta[~infinite]
    mod = np.abs(roots)
    order = sorted(range(mod.size), key=lambda j: (-mod[j], j))
    moduli = tuple(float(mod[j]) for j in order)
    inside = int(np.sum(mod < 1.0 - UNIT_ROOT_BAND))
    rep = SpectralReport(
        moduli=moduli,
        n_inside=inside,
        n_outside=mod.size - inside,
        n_infinite=int(infinite.sum()),
        n_predetermined=sys.n_predetermined,
        n_jump=mod.size - sys.n_predetermined,
    )
    return rep, roots[order], int(infinite.sum())


def _shock_loading(sys: ModelSystem, P: np.ndarray) -> np.ndarray:
    return -np.linalg.solve(sys.A @ P + sys.B, sys.D)


def _fixed_point_residual(sys: ModelSystem, P: np.ndarray, Q: np.ndarray) -> float:
    r1 = sys.A @ P @ P + sys.B @ P + sys.C
    r2 = (sys.A @ P + sys.B) @ Q + sys.D
    return float(max(np.max(np.abs(r1), initial=0.0), np.max(np.abs(r2), initial=0.0)))


def solve(sys: ModelSystem, tol: float = DEFAULT_TOL, method: str = "qz") -> Solution:
    """Unique stable law of motion ``x_t = P x_{t-1} + Q eps_t``.

    Raises :class:`IndeterminacyError` or :class:`NoStableSolutionError` when
    the number of stable roots differs from the number of predetermined
    variables.
    """
    if method == "iterate":
        return _solve_iterative(sys, tol)
    if method != "qz":
        raise ValueError(f"unknown method: {method}")
    L, R = sys.pencil()
    k = sys.n_predetermined
    with np.errstate(all="ignore"):
        _, _, alpha, beta, _, Z = linalg.ordqz(R, L, sort=_stable, output="complex")
    rep, roots, n_inf = _report(alpha, beta, sys)
    n_stable = int(np.sum(_stable(alpha, beta)))
    if n_stable > k:
        raise IndeterminacyError("multiple stable solutions", rep)
    if n_stable < k:
        raise NoStableSolutionError("no stable solution", rep)

    n = sys.n
    P = np.zeros((n, n))
    if k:
        Z11 = Z[:k, :k]
        Z21 = Z[k:, :k]
        if np.linalg.cond(Z11) > 1e12:
            raise NoStableSolutionError("no stable solution (rank failure of the stable subspace)", rep)
        F = np.linalg.solve(Z11.T, Z21.T).T
        if np.max(np.abs(F.imag), initial=0.0) > 1e-8:
            raise SolverError("complex-valued decision rule", rep)
        P[:, sys.lagged] = F.real
    Q = _shock_loading(sys, P)
    resid = _fixed_point_residual(sys, P, Q)
    if resid >= tol:
        # a single fixed-point sweep polishes a slightly inaccurate QZ result
        P = -np.linalg.solve(sys.A @ P + sys.B, sys.C)
        Q = _shock_loading(sys, P)
        resid = _fixed_point_residual(sys, P, Q)
    if resid >= tol:
        raise ConvergenceError(f"fixed-point residual {resid:.3e} exceeds tolerance {tol:.1e}", rep, resid)
    return Solution(P, Q, roots, n_inf, "unique", sys, resid)


def _solve_iterative(sys: ModelSystem, tol: float, max_iter: int = MAX_ITER) -> Solution:
    """Iterate ``P <- -(A P + B)^{-1} C`` from zero.

    Converges to the minimal solvent when the model is determinate; no
    eigenvalue counting is done beyond checking the result is stable.
    """
    n = sys.n
    P = np.zeros((n, n))
    resid = np.inf
    for _ in range(max_iter):
        P = -np.linalg.solve(sys.A @ P + sys.B, sys.C)
        resid = float(np.max(np.abs(sys.A @ P @ P + sys.B @ P + sys.C), initial=0.0))
        if resid < tol:
            break
    else:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations, last residual {resid:.3e}", residual=resid
        )
    Q = _shock_loading(sys, P)
    radius = float(np.max(np.abs(np.linalg.eigvals(P)), initial=0.0))
    if radius >= 1.0 - UNIT_ROOT_BAND:
        raise NoStableSolutionError("no stable solution", residual=resid)
    eig = np.linalg.eigvals(P)
    return Solution(P, Q, eig, 0, "unique", sys, _fixed_point_residual(sys, P, Q))


def spectral_report(sol: Solution | ModelSystem) -> SpectralReport:
    """Finite root moduli, descending (ties by index), with unit-circle counts."""
    sys = sol.system if isinstance(sol, Solution) else sol
    L, R = sys.pencil()
    with np.errstate(all="ignore"):
        _, _, alpha, beta, _, _ = linalg.ordqz(R, L, sort=_stable, output="complex")
    return _report(alpha, beta, sys)[0]
