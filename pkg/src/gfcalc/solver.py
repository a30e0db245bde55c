"""Initial value problems for the Caputo-type fractional derivative.

Solves  D_c^alpha y (x) = f(x, y(x)) on [0, h] with y^(k)(0) = y0[k],
k = 0..ceil(alpha)-1, via the equivalent weakly singular Volterra equation

    y(x) = T(x) + (1/Gamma(alpha)) int_0^{s(x)} (s(x)-sigma)**(alpha-1)
                                     f(x(sigma), y(x(sigma))) dsigma,

where T is the Taylor polynomial of the initial data and s is the grid
coordinate.  The step length h comes from an existence box: with
M >= sup |f| over G = [0, h_star] x {|y - T| <= K},

    h = h_star                                        if M == 0,
    h = min(h_star, (K Gamma(alpha+1) rho**alpha / M)**(1/alpha))  otherwise.

Two independent discretizations of the same equation are provided: global
Picard iteration (``solve_picard``) and node-by-node marching
(``solve_marching``); agreement between them is a strong consistency check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fracops import (
    Grid,
    QuadratureWeights,
    SampledFunction,
    build_weights,
    make_grid,
)
from .specialfn import gamma_ln, mittag_leffler

__all__ = [
    "RightHandSide",
    "make_rhs",
    "rhs_names",
    "IVProblem",
    "ExistenceBox",
    "SolverConfig",
    "SolverReport",
    "DomainExitError",
    "NonConvergenceError",
    "MarchingError",
    "taylor_poly",
    "estimate_M",
    "step_h",
    "existence_box",
    "picard_apply",
    "solve_picard",
    "solve_marching",
    "contraction_bound",
    "holder_bound",
    "volterra_residual",
]

_DOMAIN_SLACK = 1e-9       # relative slack on |y - T| <= K before flagging exit
_MARCH_DAMPING = 0.5
_MARCH_SECANT_AFTER = 25
_MARCH_ITER_CAP = 100


class DomainExitError(RuntimeError):
    """An iterate left the existence box {|y - T| <= K}."""


class NonConvergenceError(RuntimeError):
    """Picard iteration hit max_iter; carries the partial solution/report."""

    def __init__(self, message: str, solution: SampledFunction, report: "SolverReport"):
        super().__init__(message)
        self.solution = solution
        self.report = report


class MarchingError(RuntimeError):
    """The per-node scalar solve failed to converge."""

    def __init__(self, message: str, node: int):
        super().__init__(message)
        self.node = node


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RightHandSide:
    """A registered f(x, y) with optional Lipschitz bound and reference solution.

    ``fn(x, y, problem)`` is vectorized over x and y.  ``lipschitz(problem)``
    returns a bound for |f(x, y1) - f(x, y2)| / |y1 - y2| valid on the
    existence box, or None.  ``exact(problem)`` returns a callable reference
    solution of the Volterra equation, or None when unavailable.
    """

    name: str
    params: tuple

    def __post_init__(self):
        _rhs_param_check(self.name, dict(self.params))

    def _p(self, key: str) -> float:
        return dict(self.params)[key]

    def fn(self, x, y, problem: "IVProblem"):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.name == "zero":
            return np.zeros(np.broadcast(x, y).shape)
        if self.name == "linear":
            return self._p("lambda") * y
        if self.name == "power_forcing":
            beta, c = self._p("beta"), self._p("c")
            alpha, rho = problem.alpha, problem.rho
            scale = c * math.exp(gamma_ln(beta + 1.0) - gamma_ln(beta + 1.0 - alpha))
            return scale * np.power(np.power(x, rho) / rho, beta - alpha) \
                + 0.0 * y
        if self.name == "sin":
            return self._p("c") * np.sin(y)
        if self.name == "logistic":
            return self._p("lambda") * y * (1.0 - y)
        raise AssertionError(self.name)

    def lipschitz(self, problem: "IVProblem") -> float | None:
        if self.name == "zero" or self.name == "power_forcing":
            return 0.0
        if self.name == "linear":
            return abs(self._p("lambda"))
        if self.name == "sin":
            return abs(self._p("c"))
        if self.name == "logistic":
            xs = np.linspace(0.0, problem.h_star, 65)
            t = taylor_poly(problem.y0, xs)
            lo = float(np.min(t)) - problem.K
            hi = float(np.max(t)) + problem.K
            return abs(self._p("lambda")) * max(abs(1.0 - 2.0 * lo), abs(1.0 - 2.0 * hi))
        raise AssertionError(self.name)

    def exact(self, problem: "IVProblem"):
        alpha, rho = problem.alpha, problem.rho
        if self.name == "zero":
            return lambda x: taylor_poly(problem.y0, x)
        if self.name == "linear":
            if len(problem.y0) != 1:
                return None
            lam, y00 = self._p("lambda"), problem.y0[0]

            def ref(x):
                x = np.atleast_1d(np.asarray(x, dtype=float))
                z = lam * np.power(np.power(x, rho) / rho, alpha)
                return y00 * np.array([mittag_leffler(alpha, zi) for zi in z])

            return ref
        if self.name == "power_forcing":
            beta, c = self._p("beta"), self._p("c")

            def ref(x):
                x = np.asarray(x, dtype=float)
                return taylor_poly(problem.y0, x) + c * np.power(np.power(x, rho) / rho, beta)

            return ref
        return None


_RHS_PARAMS: dict[str, dict[str, float | None]] = {
    "zero": {},
    "linear": {"lambda": None},
    "power_forcing": {"beta": None, "c": 1.0},
    "sin": {"c": 1.0},
    "logistic": {"lambda": None},
}


def rhs_names() -> list[str]:
    return sorted(_RHS_PARAMS)


def _rhs_param_check(name: str, params: dict) -> None:
    if name not in _RHS_PARAMS:
        raise ValueError(f"unknown rhs {name!r}; known: {', '.join(rhs_names())}")
    schema = _RHS_PARAMS[name]
    for key in params:
        if key not in schema:
            raise ValueError(f"rhs {name!r} does not take parameter {key!r}")
    for key, default in schema.items():
        if key not in params and default is None:
            raise ValueError(f"rhs {name!r} requires parameter {key!r}")
    for key, val in params.items():
        if not (isinstance(val, (int, float)) and math.isfinite(val)):
            raise ValueError(f"rhs parameter {key!r} must be a finite number, got {val!r}")


def make_rhs(name: str, params: dict | None = None) -> RightHandSide:
    """Look up a right-hand side by name; ``params`` fills its parameters."""
    params = dict(params or {})
    _rhs_param_check(name, params)
    full = {**{k: v for k, v in _RHS_PARAMS[name].items() if v is not None}, **params}
    return RightHandSide(name=name, params=tuple(sorted(full.items())))


# ---------------------------------------------------------------------------
# problem statement and derived quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IVProblem:
    """Caputo-type initial value problem on [0, h_star] with box half-width K."""

    alpha: float
    rho: float
    y0: tuple
    rhs: RightHandSide
    h_star: float
    K: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha}")
        if not (math.isfinite(self.rho) and self.rho > 0.0):
            raise ValueError(f"rho must be finite and > 0, got {self.rho}")
        y0 = tuple(float(v) for v in self.y0)
        if not all(math.isfinite(v) for v in y0):
            raise ValueError("y0 entries must be finite")
        if len(y0) != self.m:
            raise ValueError(
                f"y0 must have ceil(alpha) = {self.m} entries, got {len(y0)}"
            )
        if not (math.isfinite(self.h_star) and self.h_star > 0.0):
            raise ValueError(f"h_star must be finite and > 0, got {self.h_star}")
        if not (math.isfinite(self.K) and self.K > 0.0):
            raise ValueError(f"K must be finite and > 0, got {self.K}")
        object.__setattr__(self, "y0", y0)

    @property
    def m(self) -> int:
        return math.ceil(self.alpha)


@dataclass(frozen=True)
class ExistenceBox:
    """Lattice estimate M of sup |f| over the box, and the step h it implies."""

    problem: IVProblem
    M: float
    h: float
    sample_density: int


@dataclass(frozen=True)
class SolverConfig:
    n_nodes: int
    tol: float = 1e-10
    max_iter: int = 200
    lipschitz_L: float | None = None

    def __post_init__(self):
        if not (isinstance(self.n_nodes, int) and self.n_nodes >= 2):
            raise ValueError(f"n_nodes must be an int >= 2, got {self.n_nodes!r}")
        if not (math.isfinite(self.tol) and self.tol > 0.0):
            raise ValueError(f"tol must be finite and > 0, got {self.tol}")
        if not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise ValueError(f"max_iter must be an int >= 1, got {self.max_iter!r}")
        if self.lipschitz_L is not None and not (
            math.isfinite(self.lipschitz_L) and self.lipschitz_L >= 0.0
        ):
            raise ValueError(f"lipschitz_L must be >= 0, got {self.lipschitz_L}")


@dataclass(frozen=True)
class SolverReport:
    h_used: float
    M: float
    iterations: int
    deltas: np.ndarray
    omega_bounds: np.ndarray | None
    residual: float
    converged: bool


def taylor_poly(y0, x):
    """T(x) = sum_k y0[k] x**k / k!, the polynomial carrying the initial data."""
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    term = np.ones_like(x)
    for k, ck in enumerate(y0):
        acc = acc + ck * term
        term = term * x / (k + 1.0)
    return acc if acc.ndim else float(acc)


def estimate_M(problem: IVProblem, sample_density: int = 64) -> float:
    """max |f| over a sample_density x sample_density lattice of the box
    G = [0, h_star] x {|y - T(x)| <= K}.  A lattice maximum is a lower
    estimate of the true sup; reports flag it accordingly.
    """
    if not (isinstance(sample_density, int) and sample_density >= 2):
        raise ValueError(f"sample_density must be an int >= 2, got {sample_density!r}")
    xs = np.linspace(0.0, problem.h_star, sample_density)
    offsets = np.linspace(-problem.K, problem.K, sample_density)
    t = taylor_poly(problem.y0, xs)
    xx = np.repeat(xs, sample_density)
    yy = (t[:, None] + offsets[None, :]).ravel()
    vals = problem.rhs.fn(xx, yy, problem)
    if not np.all(np.isfinite(vals)):
        raise ValueError("rhs is not finite on the existence box")
    return float(np.max(np.abs(vals)))


def step_h(problem: IVProblem, M: float) -> float:
    """Guaranteed step: h_star when M == 0, else
    min(h_star, (K Gamma(alpha+1) rho**alpha / M)**(1/alpha))."""
    if not (math.isfinite(M) and M >= 0.0):
        raise ValueError(f"M must be finite and >= 0, got {M}")
    if M == 0.0:
        return problem.h_star
    alpha, rho = problem.alpha, problem.rho
    cap = (problem.K * math.gamma(alpha + 1.0) * rho**alpha / M) ** (1.0 / alpha)
    return min(problem.h_star, cap)


def existence_box(problem: IVProblem, sample_density: int = 64) -> ExistenceBox:
    M = estimate_M(problem, sample_density)
    return ExistenceBox(problem=problem, M=M, h=step_h(problem, M),
                        sample_density=sample_density)


# ---------------------------------------------------------------------------
# Picard machinery
# ---------------------------------------------------------------------------

def _check_in_box(values: np.ndarray, t: np.ndarray, K: float, what: str) -> None:
    drift = float(np.max(np.abs(values - t)))
    if drift > K * (1.0 + _DOMAIN_SLACK):
        raise DomainExitError(
            f"{what} leaves the box: max |y - T| = {drift:.6g} > K = {K:.6g}"
        )


def _eval_rhs(problem: IVProblem, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    vals = np.asarray(problem.rhs.fn(x, y, problem), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("rhs evaluation produced non-finite values")
    return vals


def picard_apply(y: SampledFunction, problem: IVProblem,
                 weights: QuadratureWeights) -> SampledFunction:
    """One application of the integral operator: T + I^alpha f(., y)."""
    if weights.alpha != problem.alpha:
        raise ValueError(
            f"weights are for alpha={weights.alpha}, problem has alpha={problem.alpha}"
        )
    if not weights.grid.same_layout(y.grid):
        raise ValueError("weights were built for a different grid")
    if y.grid.a != 0.0:
        raise ValueError("initial value problems live on [0, h]; grid.a must be 0")
    x = y.grid.x_nodes
    t = taylor_poly(problem.y0, x)
    _check_in_box(y.values, t, problem.K, "iterate")
    fvals = _eval_rhs(problem, x, y.values)
    return SampledFunction(y.grid, t + weights.apply(fvals))


def _solver_setup(problem: IVProblem, config: SolverConfig, sample_density: int):
    box = existence_box(problem, sample_density)
    grid = make_grid(0.0, box.h, problem.rho, config.n_nodes)
    weights = build_weights(grid, problem.alpha)
    t = taylor_poly(problem.y0, grid.x_nodes)
    return box, grid, weights, t


def _omega_array(L: float | None, count: int, h: float, alpha: float,
                 rho: float) -> np.ndarray | None:
    if L is None:
        return None
    return np.array([contraction_bound(j, L, h, alpha, rho)
                     for j in range(1, count + 1)])


def solve_picard(problem: IVProblem, config: SolverConfig,
                 sample_density: int = 64):
    """Iterate y <- T + I^alpha f(., y) from y = T until the sup-norm update
    falls below tol.  Returns (solution, report); raises NonConvergenceError
    carrying both if max_iter is exhausted.
    """
    box, grid, weights, t = _solver_setup(problem, config, sample_density)
    y = t.copy()
    deltas = []
    converged = False
    for _ in range(config.max_iter):
        fvals = _eval_rhs(problem, grid.x_nodes, y)
        y_next = t + weights.apply(fvals)
        _check_in_box(y_next, t, problem.K, "Picard iterate")
        delta = float(np.max(np.abs(y_next - y)))
        deltas.append(delta)
        y = y_next
        if delta <= config.tol:
            converged = True
            break
    residual = float(np.max(np.abs(
        y - t - weights.apply(_eval_rhs(problem, grid.x_nodes, y)))))
    report = SolverReport(
        h_used=box.h,
        M=box.M,
        iterations=len(deltas),
        deltas=np.array(deltas),
        omega_bounds=_omega_array(config.lipschitz_L, len(deltas), box.h,
                                  problem.alpha, problem.rho),
        residual=residual,
        converged=converged,
    )
    solution = SampledFunction(grid, y)
    if not converged:
        raise NonConvergenceError(
            f"no convergence within max_iter = {config.max_iter} "
            f"(last update {deltas[-1]:.3e} > tol {config.tol:.3e})",
            solution, report)
    return solution, report


def _march_node(b: float, w_nn: float, f_scalar, u0: float, tol: float,
                node: int) -> float:
    """Solve u = b + w_nn f(u): damped fixed point, then secant fallback."""

    def step(u: float) -> float:
        return b + w_nn * f_scalar(u)

    u = u0
    res_prev = None
    u_prev = None
    for it in range(_MARCH_ITER_CAP):
        phi = step(u)
        res = phi - u
        if abs(res) <= tol:
            return phi
        if it < _MARCH_SECANT_AFTER:
            u_new = u + _MARCH_DAMPING * res
        else:
            if res_prev is None or res == res_prev:
                u_new = u + _MARCH_DAMPING * res
            else:
                u_new = u - res * (u - u_prev) / (res - res_prev)
        u_prev, res_prev = u, res
        u = u_new
    raise MarchingError(
        f"node solve did not converge at node {node} within {_MARCH_ITER_CAP} "
        "iterations", node)


def solve_marching(problem: IVProblem, config: SolverConfig,
                   sample_density: int = 64) -> SampledFunction:
    """Independent node-by-node solve of the same discrete Volterra system."""
    box, grid, weights, t = _solver_setup(problem, config, sample_density)
    n = grid.n_nodes
    x = grid.x_nodes
    y = np.empty(n)
    fv = np.empty(n)
    y[0] = t[0]
    fv[0] = float(_eval_rhs(problem, x[:1], y[:1])[0])
    w = weights.w
    for i in range(1, n):
        b = t[i] + float(np.dot(w[i, :i], fv[:i]))
        xi = x[i]

        def f_scalar(u: float, _xi=xi) -> float:
            return float(_eval_rhs(problem, np.array([_xi]), np.array([u]))[0])

        tol_i = max(1e-15, 1e-4 * config.tol) * max(1.0, abs(b))
        y[i] = _march_node(b, float(w[i, i]), f_scalar, y[i - 1], tol_i, i)
        fv[i] = f_scalar(y[i])
    _check_in_box(y, t, problem.K, "marching solution")
    return SampledFunction(grid, y)


# ---------------------------------------------------------------------------
# bounds and diagnostics
# ---------------------------------------------------------------------------

def contraction_bound(j: int, L: float, x: float, alpha: float, rho: float) -> float:
    """omega_j = L**j (x**rho / rho)**(alpha j) / Gamma(1 + alpha j).

    Bounds the sup-norm contraction of j compositions of the integral
    operator for an L-Lipschitz right-hand side, on [0, x].
    """
    if not (isinstance(j, int) and j >= 0):
        raise ValueError(f"j must be an int >= 0, got {j!r}")
    if not (math.isfinite(L) and L >= 0.0):
        raise ValueError(f"L must be finite and >= 0, got {L}")
    if not (math.isfinite(x) and x >= 0.0):
        raise ValueError(f"x must be finite and >= 0, got {x}")
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ValueError(f"alpha must be finite and > 0, got {alpha}")
    if not (math.isfinite(rho) and rho > 0.0):
        raise ValueError(f"rho must be finite and > 0, got {rho}")
    if j == 0:
        return 1.0
    if x == 0.0 or L == 0.0:
        return 0.0
    log_val = (j * math.log(L)
               + alpha * j * (rho * math.log(x) - math.log(rho))
               - gamma_ln(1.0 + alpha * j))
    return math.exp(log_val)


def holder_bound(x1: float, x2: float, M: float, alpha: float, rho: float) -> float:
    """Modulus-of-continuity bound for the Picard image between x1 <= x2:

        alpha <= 1:  2 M / (rho**alpha Gamma(alpha+1)) (x2**rho - x1**rho)**alpha
        alpha  > 1:    M / (rho**alpha Gamma(alpha+1))
                       * ((x2**rho - x1**rho)**alpha + x2**(rho alpha) - x1**(rho alpha))
    """
    if not (math.isfinite(x1) and math.isfinite(x2) and 0.0 <= x1 <= x2):
        raise ValueError(f"need 0 <= x1 <= x2, got x1={x1}, x2={x2}")
    if not (math.isfinite(M) and M >= 0.0):
        raise ValueError(f"M must be finite and >= 0, got {M}")
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ValueError(f"alpha must be finite and > 0, got {alpha}")
    if not (math.isfinite(rho) and rho > 0.0):
        raise ValueError(f"rho must be finite and > 0, got {rho}")
    scale = M / (rho**alpha * math.gamma(alpha + 1.0))
    gap = x2**rho - x1**rho
    if alpha <= 1.0:
        return 2.0 * scale * gap**alpha
    return scale * (gap**alpha + x2 ** (rho * alpha) - x1 ** (rho * alpha))


def volterra_residual(y: SampledFunction, problem: IVProblem,
                      weights: QuadratureWeights | None = None) -> float:
    """sup_n | y_n - T(x_n) - (I^alpha f(., y))_n |, the defect of y in the
    discrete Volterra equation.  Pure measurement; never raises on box exit.
    """
    if weights is None:
        weights = build_weights(y.grid, problem.alpha)
    else:
        if weights.alpha != problem.alpha or not weights.grid.same_layout(y.grid):
            raise ValueError("weights do not match the solution grid/order")
    if y.grid.a != 0.0:
        raise ValueError("initial value problems live on [0, h]; grid.a must be 0")
    x = y.grid.x_nodes
    t = taylor_poly(problem.y0, x)
    fvals = _eval_rhs(problem, x, y.values)
    return float(np.max(np.abs(y.values - t - weights.apply(fvals))))
