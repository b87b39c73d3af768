"""Dense two-phase tableau simplex with Bland's rule.

Solves ``max c.x  s.t.  A x = b, x >= 0``.  Written in the subset of numpy
that numba compiles, so the same source serves both backends.
"""

import numpy as np

from ._accel import njit, pick_backend

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


def _build(jit):
    """Return the solver with its helpers compiled (``jit=True``) or plain."""
    # closures over other dispatchers cannot use the on-disk cache
    wrap = (lambda f: njit(f, cache=False)) if jit else (lambda f: f)

    @wrap
    def _pivot(T, r, j):
        T[r, :] = T[r, :] / T[r, j]
        for i in range(T.shape[0]):
            if i != r:
                f = T[i, j]
                if f != 0.0:
                    T[i, :] = T[i, :] - f * T[r, :]

    @wrap
    def _iterate(T, basis, ncols, max_iter):
        """Run Bland pivots on tableau ``T`` (last row = reduced costs, maximization)."""
        m = T.shape[0] - 1
        for _ in range(max_iter):
            enter = -1
            for j in range(ncols):
                if T[m, j] > PIVOT_TOL:
                    enter = j
                    break
            if enter < 0:
                return OPTIMAL
            leave = -1
            best = np.inf
            for i in range(m):
                a = T[i, enter]
                if a > PIVOT_TOL:
                    ratio = T[i, -1] / a
                    if ratio < best - 1e-14 or (abs(ratio - best) <= 1e-14 and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                return UNBOUNDED
            _pivot(T, leave, enter)
            basis[leave] = enter
        return UNBOUNDED

    @wrap
    def _price(T, basis, cost):
        m = T.shape[0] - 1
        T[m, :-1] = cost
        T[m, -1] = 0.0
        for i in range(m):
            cb = cost[basis[i]]
            if cb != 0.0:
                T[m, :] = T[m, :] - cb * T[i, :]


    def _solve(c, A, b):
        m, n = A.shape
        A = A.copy()
        b = b.copy()
        for i in range(m):
            if b[i] < 0:
                A[i, :] = -A[i, :]
                b[i] = -b[i]
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = A
        for i in range(m):
            T[i, n + i] = 1.0
        T[:m, -1] = b
        basis = np.arange(n, n + m)
        max_iter = 50 * (n + m) + 1000

        cost1 = np.zeros(n + m)
        cost1[n:] = -1.0
        _price(T, basis, cost1)
        _iterate(T, basis, n + m, max_iter)
        x = np.zeros(n + m)
        for i in range(m):
            x[basis[i]] = T[i, -1]
        if x[n:].sum() > FEAS_TOL * max(1.0, np.abs(b).max()):
            return INFEASIBLE, x[:n], -np.inf

        # drive remaining artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= n:
                for j in range(n):
                    if abs(T[i, j]) > PIVOT_TOL:
                        _pivot(T, i, j)
                        basis[i] = j
                        break

        cost2 = np.zeros(n + m)
        cost2[:n] = c
        _price(T, basis, cost2)
        status = _iterate(T, basis, n, max_iter)
        x = np.zeros(n + m)
        for i in range(m):
            x[basis[i]] = T[i, -1]
        xs = np.maximum(x[:n], 0.0)
        return status, xs, float(np.sum(c * xs))

    return wrap(_solve)


_solve = _build(False)
_solve_jit = _build(True)


def solve_lp(c, A, b, backend=None):
    """Maximize ``c @ x`` subject to ``A @ x == b``, ``x >= 0``.

    Returns ``(status, x, value)`` with status one of OPTIMAL, INFEASIBLE,
    UNBOUNDED.
    """
    c = np.ascontiguousarray(c, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if pick_backend(backend) == "numba":
        return _solve_jit(c, A, b)
    return _solve(c, A, b)
