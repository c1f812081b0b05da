"""The four iterative schemes as uniform trace-producing runs.

All four algorithms iterate relaxations of the fixed-point map
F(x) = R[H x - lam*A x], where R is the resolvent of (H, lam*M):

* FH:   x_{n+1} = F(x_n)
* ZGY:  r_n = (1-mu_n) x_n + mu_n F(x_n);  x_{n+1} = (1-xi_n) x_n + xi_n F(r_n)
* MANN: x_{n+1} = (1-xi_n) x_n + xi_n F(x_n)
* NEW:  t_n = (1-mu_n) x_n + mu_n F(x_n);  x_{n+1} = F(t_n)
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .operators import OperatorConstants
from .resolvent import ResolventEngine
from .space import as_vector

__all__ = [
    "StepSequence",
    "make_step_sequence",
    "StoppingRule",
    "ProblemInstance",
    "IterationTrace",
    "f_map",
    "run_fh",
    "run_zgy",
    "run_mann",
    "run_new",
    "ALGORITHMS",
]

ALGORITHMS = ("FH", "ZGY", "MANN", "NEW")


@dataclass(frozen=True)
class StepSequence:
    """A [0,1]-valued step-size sequence with symbolically derived properties.

    Series-level properties (divergence of the sum, vanishing limit, uniform
    lower bound) are derived per family at construction, never sampled: no
    finite sample can witness them.
    """

    family: str
    value_param: float = 0.0
    offset: int = 1
    table: tuple = ()
    sums_to_infinity: bool = False
    tends_to_zero: bool = False
    lower_bound: float = 0.0

    def value(self, n):
        if self.family == "constant":
            return self.value_param
        if self.family == "harmonic":
            return 1.0 / (n + self.offset)
        if self.family == "one-minus-harmonic":
            return 1.0 - 1.0 / (n + self.offset)
        if self.family == "custom-table":
            return self.table[n] if n < len(self.table) else self.table[-1]
        raise ValueError("unknown family %r" % (self.family,))


def make_step_sequence(family, value=None, offset=None, table=None):
    """Build a StepSequence and derive its declared properties.

    constant(c): diverging sum iff c > 0, lower bound c.
    harmonic(k): 1/(n+k); diverging sum, vanishing terms.
    one-minus-harmonic(k): 1 - 1/(n+k); diverging sum, lower bound at n = 0.
    custom-table: finite table, last entry repeated forever.
    """
    if family == "constant":
        if value is None or not 0.0 <= value <= 1.0:
            raise ValueError("constant step value must lie in [0, 1]")
        return StepSequence(
            family=family, value_param=float(value),
            sums_to_infinity=value > 0, tends_to_zero=value == 0,
            lower_bound=float(value),
        )
    if family == "harmonic":
        offset = 1 if offset is None else int(offset)
        if offset < 1:
            raise ValueError("harmonic offset must be >= 1")
        return StepSequence(
            family=family, offset=offset,
            sums_to_infinity=True, tends_to_zero=True, lower_bound=0.0,
        )
    if family == "one-minus-harmonic":
        offset = 1 if offset is None else int(offset)
        if offset < 1:
            raise ValueError("offset must be >= 1")
        return StepSequence(
            family=family, offset=offset,
            sums_to_infinity=True, tends_to_zero=False,
            lower_bound=1.0 - 1.0 / offset,
        )
    if family == "custom-table":
        if not table:
            raise ValueError("custom-table requires a non-empty table")
        table = tuple(float(v) for v in table)
        if any(not 0.0 <= v <= 1.0 for v in table):
            raise ValueError("table values must lie in [0, 1]")
        return StepSequence(
            family=family, table=table,
            sums_to_infinity=table[-1] > 0,
            tends_to_zero=table[-1] == 0,
            lower_bound=min(table),
        )
    raise ValueError("unknown family %r" % (family,))


@dataclass(frozen=True)
class StoppingRule:
    """Stop when the fixed-point residual ||F(x) - x|| <= tol or at the cap.

    A negative tol disables the residual test entirely (fixed-length runs).
    """

    tol: float = 1e-10
    max_steps: int = 100_000


@dataclass
class ProblemInstance:
    """The triple (H, A, M) with constants, lam and optionally the solution."""

    h: object
    a: object
    m: object
    constants: OperatorConstants
    lam: float
    dim: int
    known_solution: object = None
    inner_tolerance: float = 1e-12
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be strictly positive")
        self.engine = ResolventEngine(
            self.h, self.m, self.lam, self.dim,
            inner_tolerance=self.inner_tolerance,
        )
        if self.known_solution is not None:
            self.known_solution = as_vector(self.known_solution)
            if self.known_solution.shape[0] != self.dim:
                raise ValueError("known_solution dimension mismatch")

    def f_map(self, x):
        """F(x) = R[H x - lam*A x]."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.engine.resolve(self.h.apply(x) - self.lam * self.a.apply(x))

    def residual(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(np.linalg.norm(self.f_map(x) - x))

    def contraction_factor(self):
        from .analysis import contraction_factor

        return contraction_factor(self.constants, self.lam)


def f_map(problem, x):
    """Module-level alias for ProblemInstance.f_map."""
    return problem.f_map(x)


@dataclass
class IterationTrace:
    """Per-step record of one algorithm run; immutable once returned."""

    algorithm: str
    iterates: list
    residuals: list
    errors: list
    wall_nanos: list
    steps_used: int
    converged: bool
    hypothesis_violated: bool
    kappa: float
    lam: float
    solution_norm: float = None
    wall_time: float = 0.0


def _run(problem, x0, stop, algorithm, step_fn):
    """Generic runner: records iterates, residuals and errors each step.

    ``step_fn(n, x, fx)`` produces the next iterate given the current iterate
    and its image fx = F(x); F evaluations beyond fx are the step's own.
    """
    stop = stop or StoppingRule()
    x = np.asarray(as_vector(x0), dtype=float)
    if x.shape[0] == 1 and problem.dim > 1:
        x = np.full(problem.dim, x[0])
    if x.shape[0] != problem.dim:
        raise ValueError("start dimension mismatch")
    kappa = problem.contraction_factor()
    xstar = problem.known_solution
    start = time.perf_counter_ns()

    fx = problem.f_map(x)
    iterates = [x.copy()]
    residuals = [float(np.linalg.norm(fx - x))]
    errors = None if xstar is None else [float(np.linalg.norm(x - xstar))]
    wall = [time.perf_counter_ns() - start]

    n = 0
    while residuals[-1] > stop.tol and n < stop.max_steps:
        x = step_fn(n, x, fx)
        fx = problem.f_map(x)
        iterates.append(x.copy())
        residuals.append(float(np.linalg.norm(fx - x)))
        if errors is not None:
            errors.append(float(np.linalg.norm(x - xstar)))
        wall.append(time.perf_counter_ns() - start)
        n += 1

    return IterationTrace(
        algorithm=algorithm,
        iterates=iterates,
        residuals=residuals,
        errors=errors,
        wall_nanos=wall,
        steps_used=n,
        converged=residuals[-1] <= stop.tol,
        hypothesis_violated=kappa >= 1.0,
        kappa=kappa,
        lam=problem.lam,
        solution_norm=None if xstar is None else float(np.linalg.norm(xstar)),
        wall_time=(time.perf_counter_ns() - start) / 1e9,
    )


def run_fh(problem, u0, stop=None):
    """One-step scheme: u_{n+1} = F(u_n)."""

    def step(n, x, fx):
        return fx

    return _run(problem, u0, stop, "FH", step)


def run_zgy(problem, q0, xi, mu, stop=None):
    """Two-step relaxed scheme with sequences xi_n and mu_n."""

    def step(n, x, fx):
        mu_n = mu.value(n)
        xi_n = xi.value(n)
        r = (1.0 - mu_n) * x + mu_n * fx
        fr = problem.f_map(r)
        return (1.0 - xi_n) * x + xi_n * fr

    return _run(problem, q0, stop, "ZGY", step)


def run_mann(problem, v0, xi, stop=None):
    """One-step relaxed scheme: v_{n+1} = (1-xi_n) v_n + xi_n F(v_n)."""

    def step(n, x, fx):
        xi_n = xi.value(n)
        return (1.0 - xi_n) * x + xi_n * fx

    return _run(problem, v0, stop, "MANN", step)


def run_new(problem, s0, mu, stop=None):
    """Two-step scheme with an unrelaxed outer application of F."""

    def step(n, x, fx):
        mu_n = mu.value(n)
        t = (1.0 - mu_n) * x + mu_n * fx
        return problem.f_map(t)

    return _run(problem, s0, stop, "NEW", step)
