"""Resolvent engine: computes x = (H + lam*M)^{-1}(u).

Three strategies, selected automatically from the operator kinds:

* ``closed-form-linear``: dense LU solve when H and M are both linear/affine.
* ``separable-scalar``: per-coordinate solves when H and M act coordinatewise;
  the subdifferential part of a shifted-subdifferential M is handled exactly
  by soft-threshold case analysis, nonlinear coordinates by safeguarded
  Newton inside a bisection bracket.
* ``newton-general``: damped Newton with Armijo backtracking on
  G(x) = H(x) + lam*m(x) - u for the general smooth case.
"""

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import operators as ops

__all__ = [
    "ResolventDivergenceError",
    "ResolventEngine",
    "resolvent_lipschitz_bound",
    "CLOSED_FORM",
    "SEPARABLE",
    "NEWTON",
]

CLOSED_FORM = "closed-form-linear"
SEPARABLE = "separable-scalar"
NEWTON = "newton-general"


class ResolventDivergenceError(RuntimeError):
    """The inner solve failed to reach its tolerance within the iteration cap.

    Signals a hypothesis violation (non-monotone configuration) or a bad lam.
    """


def resolvent_lipschitz_bound(constants, lam):
    """Lipschitz constant 1/(gamma + lam*eta) of the resolvent."""
    if not lam > 0:
        raise ValueError("lam must be strictly positive")
    return 1.0 / (constants.gamma + lam * constants.eta)


def _is_diagonal_single(op):
    return isinstance(op, (ops.ScaledIdentity, ops.DiagonalNonlinear))


class ResolventEngine:
    """Immutable solver for u in H(x) + lam*M(x); ``resolve`` is reentrant."""

    def __init__(self, h_op, m_op, lam, dim, strategy=None,
                 inner_tolerance=1e-12, max_inner_steps=100):
        if not lam > 0:
            raise ValueError("lam must be strictly positive")
        if not inner_tolerance > 0:
            raise ValueError("inner_tolerance must be strictly positive")
        self.h = h_op
        self.m = m_op
        self.lam = float(lam)
        self.dim = int(dim)
        self.inner_tolerance = float(inner_tolerance)
        self.max_inner_steps = int(max_inner_steps)
        self.strategy = strategy or self._auto_strategy()
        self._validate_strategy()
        self._lu = None
        self._rhs_offset = None
        if self.strategy == CLOSED_FORM:
            w, offset = self.h.linear_parts(self.dim)
            k = w + self.lam * self.m.linear_matrix(self.dim)
            self._lu = lu_factor(k)
            self._rhs_offset = offset

    # -- strategy selection

    def _auto_strategy(self):
        if isinstance(self.m, ops.ShiftedSubdifferential):
            return SEPARABLE
        if self.h.is_linear and self.m.is_linear:
            return CLOSED_FORM
        if _is_diagonal_single(self.h) and isinstance(self.m, ops.ScaledIdentityMulti):
            return SEPARABLE
        return NEWTON

    def _validate_strategy(self):
        if self.strategy == CLOSED_FORM:
            if not (self.h.is_linear and self.m.is_linear):
                raise ValueError("closed-form strategy requires linear H and M")
        elif self.strategy == SEPARABLE:
            if not _is_diagonal_single(self.h) or not getattr(self.m, "separable", False):
                raise ValueError("separable strategy requires coordinatewise H and M")
        elif self.strategy == NEWTON:
            if isinstance(self.m, ops.ShiftedSubdifferential):
                raise ValueError("newton strategy requires a smooth selection of M")
        else:
            raise ValueError("unknown strategy %r" % (self.strategy,))

    # -- solving

    def resolve(self, u):
        """Return x with u in H(x) + lam*M(x)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape[0] != self.dim:
            raise ValueError("dimension mismatch: %d vs %d" % (u.shape[0], self.dim))
        if self.strategy == CLOSED_FORM:
            return lu_solve(self._lu, u + self._rhs_offset)
        if self.strategy == SEPARABLE:
            return self._resolve_separable(u)
        return self._resolve_newton(u)

    def _resolve_separable(self, u):
        lam = self.lam
        if isinstance(self.m, ops.ShiftedSubdifferential):
            c = self.m.shift
            if isinstance(self.h, ops.ScaledIdentity):
                # h*x + lam*c*x + lam*d|x| contains u  =>  soft threshold
                return np.sign(u) * np.maximum(np.abs(u) - lam, 0.0) / (self.h.scale + lam * c)
            out = np.empty_like(u)
            for i, ui in enumerate(u):
                g = lambda t: self.h.scalar(t) + lam * c * t
                gp = lambda t: self.h.scalar_deriv(t) + lam * c
                g0 = g(0.0)
                if g0 + lam < ui:
                    out[i] = self._solve_scalar(g, gp, ui - lam)
                elif g0 - lam > ui:
                    out[i] = self._solve_scalar(g, gp, ui + lam)
                else:
                    out[i] = 0.0
            return out
        # smooth diagonal M (scaled identity)
        mscale = self.m.scale
        if isinstance(self.h, ops.ScaledIdentity):
            return u / (self.h.scale + lam * mscale)
        out = np.empty_like(u)
        g = lambda t: self.h.scalar(t) + lam * mscale * t
        gp = lambda t: self.h.scalar_deriv(t) + lam * mscale
        for i, ui in enumerate(u):
            out[i] = self._solve_scalar(g, gp, ui)
        return out

    def _solve_scalar(self, g, gp, target):
        """Root of the increasing scalar map g(t) = target.

        Bracket by doubling, then Newton with bisection fallback whenever a
        step leaves the bracket.
        """
        lo, hi = -1.0, 1.0
        for _ in range(200):
            if g(lo) <= target:
                break
            lo *= 2.0
        for _ in range(200):
            if g(hi) >= target:
                break
            hi *= 2.0
        t = 0.5 * (lo + hi)
        for _ in range(self.max_inner_steps):
            ft = g(t) - target
            if abs(ft) <= self.inner_tolerance:
                return t
            if ft > 0:
                hi = t
            else:
                lo = t
            d = gp(t)
            step = ft / d if d > 0 else 0.0
            cand = t - step
            if not (lo < cand < hi):
                cand = 0.5 * (lo + hi)
            t = cand
        raise ResolventDivergenceError(
            "scalar inner solve did not reach tolerance %g" % self.inner_tolerance
        )

    def _resolve_newton(self, u):
        lam = self.lam
        x = np.zeros(self.dim)
        g = self.h.apply(x) + lam * self.m.selection(x) - u
        phi = float(np.dot(g, g))
        for _ in range(self.max_inner_steps):
            if np.sqrt(phi) <= self.inner_tolerance:
                return x
            jac = self.h.jacobian(x) + lam * self.m.jacobian(x)
            step = np.linalg.solve(jac, g)
            t = 1.0
            while t >= 1e-12:
                cand = x - t * step
                gc = self.h.apply(cand) + lam * self.m.selection(cand) - u
                phic = float(np.dot(gc, gc))
                if phic <= (1.0 - 1e-4 * t) * phi:
                    x, g, phi = cand, gc, phic
                    break
                t *= 0.5
            else:
                raise ResolventDivergenceError("Armijo line search stalled")
        raise ResolventDivergenceError(
            "newton inner solve did not reach tolerance %g within %d steps"
            % (self.inner_tolerance, self.max_inner_steps)
        )

    # -- residual accounting

    def resolved_selection(self, x, u):
        """Selection m(x) in M(x) that witnesses the inclusion u in H(x)+lam*M(x).

        For the subdifferential part the selection at a zero coordinate is the
        clipped value forced by the inclusion, making the residual exact.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if isinstance(self.m, ops.ShiftedSubdifferential):
            c = self.m.shift
            sub = np.where(
                x != 0.0,
                np.sign(x),
                np.clip((u - self.h.apply(x)) / self.lam - c * x, -1.0, 1.0),
            )
            return c * x + sub
        return self.m.selection(x)

    def inclusion_residual(self, x, u):
        """Norm of H(x) + lam*m(x) - u for the resolved selection m."""
        m = self.resolved_selection(x, u)
        return float(np.linalg.norm(self.h.apply(x) + self.lam * m - np.atleast_1d(np.asarray(u, dtype=float))))
