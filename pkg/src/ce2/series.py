"""Degree-truncated complex power series in one and two disk variables.

A ``TruncatedSeries1`` holds Taylor coefficients c_0..c_{N-1} at 0 and is
treated as an exact object: operations are exact on every retained degree
(products, reciprocals) or exact under a documented grading condition
(composition with f(0) = 0).  A ``TruncatedSeries2`` holds an N x N grid
p_{n,m} together with ``valid_total_degree``, the largest total degree
n + m up to which the entries are trusted.  Consumers must not read
entries above that mark; division by (z - w) lowers it by one.

The one non-obvious primitive is ``divide_by_diag``: the kernel
F(z,w) = f'(z)f'(w)/(f(z)-f(w))^2 - 1/(z-w)^2 is assembled by dividing a
diagonally-vanishing grid by (z - w) twice, using the anti-diagonal
back-substitution q_{n,m} = p_{n+1,m} + q_{n+1,m-1}.

Coefficients are complex doubles by default; ``precision="extended"``
switches to mpmath arbitrary-precision complex numbers (set the working
precision with ``mpmath.mp.dps``) for oracle runs with extra headroom.
"""

from __future__ import annotations

import numpy as np

from .errors import NotDivisibleError, SingularSeriesError, UsageError

DOUBLE = "double"
EXTENDED = "extended"
_PRECISIONS = (DOUBLE, EXTENDED)


def _check_precision(precision):
    if precision not in _PRECISIONS:
        raise UsageError(f"unknown precision {precision!r}")


def _as_1d(values, precision):
    if precision == DOUBLE:
        arr = np.atleast_1d(np.asarray(values, dtype=complex))
        if not np.all(np.isfinite(arr)):
            raise UsageError("series coefficients must be finite")
        return arr
    import mpmath

    return np.array([mpmath.mpc(v) for v in np.atleast_1d(values)], dtype=object)


def _zeros(shape, precision):
    if precision == DOUBLE:
        return np.zeros(shape, dtype=complex)
    import mpmath

    arr = np.empty(shape, dtype=object)
    arr.flat[:] = [mpmath.mpc(0)] * arr.size
    return arr


def _conv(a, b, n):
    """First n coefficients of the Cauchy product of coefficient arrays."""
    return np.convolve(a, b)[:n]


class TruncatedSeries1:
    """Coefficients c_0..c_{N-1} of a power series at 0; cutoff N >= 1."""

    __slots__ = ("coeffs", "cutoff", "precision")

    def __init__(self, coeffs, precision=DOUBLE):
        _check_precision(precision)
        arr = _as_1d(coeffs, precision)
        if arr.size < 1:
            raise UsageError("cutoff must be at least 1")
        self.coeffs = arr
        self.cutoff = arr.size
        self.precision = precision
        arr.setflags(write=False)

    def __repr__(self):
        return f"TruncatedSeries1(N={self.cutoff}, c={list(self.coeffs[:4])}...)"


class TruncatedSeries2:
    """N x N grid p_{n,m} trusted up to total degree ``valid_total_degree``."""

    __slots__ = ("coeffs", "cutoff", "valid_total_degree", "precision")

    def __init__(self, coeffs, valid_total_degree=None, precision=DOUBLE):
        _check_precision(precision)
        if precision == DOUBLE:
            arr = np.asarray(coeffs, dtype=complex)
        else:
            import mpmath

            arr = np.array(
                [[mpmath.mpc(v) for v in row] for row in coeffs], dtype=object
            )
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise UsageError("bivariate grid must be square")
        n = arr.shape[0]
        if valid_total_degree is None:
            valid_total_degree = 2 * n - 2
        if valid_total_degree > 2 * n - 2:
            raise UsageError("valid_total_degree exceeds representable degrees")
        if precision == DOUBLE:
            trusted = _degree_mask(n, valid_total_degree)
            if not np.all(np.isfinite(arr[trusted])):
                raise UsageError("trusted entries must be finite")
        self.coeffs = arr
        self.cutoff = n
        self.valid_total_degree = valid_total_degree
        self.precision = precision
        arr.setflags(write=False)

    def __repr__(self):
        return (
            f"TruncatedSeries2(N={self.cutoff}, "
            f"valid_total_degree={self.valid_total_degree})"
        )


def _degree_mask(n, deg):
    idx = np.arange(n)
    return idx[:, None] + idx[None, :] <= deg


def _same_cutoff(a, b):
    if a.cutoff != b.cutoff:
        raise UsageError(f"cutoff mismatch: {a.cutoff} != {b.cutoff}")
    if a.precision != b.precision:
        raise UsageError("precision mismatch")


# ---------------------------------------------------------------------------
# one-variable operations
# ---------------------------------------------------------------------------


def s_zero(n, precision=DOUBLE):
    return TruncatedSeries1(_zeros(n, precision), precision)


def s_one(n, precision=DOUBLE):
    c = _zeros(n, precision)
    c[0] = 1 if precision == DOUBLE else c[0] + 1
    return TruncatedSeries1(c, precision)


def s_identity(n, precision=DOUBLE):
    c = _zeros(n, precision)
    if n < 2:
        raise UsageError("identity series needs cutoff >= 2")
    c[1] = c[1] + 1
    return TruncatedSeries1(c, precision)


def s_add(a, b):
    _same_cutoff(a, b)
    return TruncatedSeries1(a.coeffs + b.coeffs, a.precision)


def s_sub(a, b):
    _same_cutoff(a, b)
    return TruncatedSeries1(a.coeffs - b.coeffs, a.precision)


def s_scale(a, lam):
    return TruncatedSeries1(a.coeffs * lam, a.precision)


def s_mul(a, b):
    """Cauchy product truncated at the common cutoff; exact on all degrees."""
    _same_cutoff(a, b)
    return TruncatedSeries1(_conv(a.coeffs, b.coeffs, a.cutoff), a.precision)


def s_reciprocal(a):
    """Series b with a*b = 1 up to cutoff, by the standard recursion.

    Requires a nonzero constant term.
    """
    c = a.coeffs
    if abs(c[0]) == 0:
        raise SingularSeriesError("reciprocal of a series with c_0 = 0")
    b = _zeros(a.cutoff, a.precision)
    b[0] = 1 / c[0]
    for n in range(1, a.cutoff):
        b[n] = -np.dot(c[1 : n + 1], b[n - 1 :: -1]) / c[0]
    return TruncatedSeries1(b, a.precision)


def s_derivative(a):
    """Derivative series; the cutoff drops by one (last coefficient unknown)."""
    if a.cutoff < 2:
        raise UsageError("derivative needs cutoff >= 2")
    k = np.arange(1, a.cutoff)
    return TruncatedSeries1(a.coeffs[1:] * k, a.precision)


def s_compose(g, f):
    """Coefficients of g(f(z)) up to the common cutoff, by Horner over series.

    Exact on every retained degree when f(0) = 0.  For f(0) != 0 the result
    converges to the true composition as the cutoff grows, provided |f(0)|
    is well inside the radius where g's truncation is accurate; accuracy
    degrades as |f(0)| -> 1.
    """
    _same_cutoff(g, f)
    n = g.cutoff
    res = _zeros(n, g.precision)
    res[0] = g.coeffs[n - 1]
    for k in range(n - 2, -1, -1):
        res = _conv(res, f.coeffs, n)
        res[0] = res[0] + g.coeffs[k]
    return TruncatedSeries1(res, g.precision)


def s_eval(a, z):
    """Horner evaluation of the truncated polynomial at z."""
    acc = a.coeffs[-1]
    for c in a.coeffs[-2::-1]:
        acc = acc * z + c
    return acc


# ---------------------------------------------------------------------------
# two-variable operations
# ---------------------------------------------------------------------------


def s2_zero(n, precision=DOUBLE):
    return TruncatedSeries2(_zeros((n, n), precision), 2 * n - 2, precision)


def _same_grid(a, b):
    if a.cutoff != b.cutoff:
        raise UsageError(f"grid cutoff mismatch: {a.cutoff} != {b.cutoff}")
    if a.precision != b.precision:
        raise UsageError("precision mismatch")


def s2_add(a, b):
    _same_grid(a, b)
    v = min(a.valid_total_degree, b.valid_total_degree)
    return TruncatedSeries2(a.coeffs + b.coeffs, v, a.precision)


def s2_sub(a, b):
    _same_grid(a, b)
    v = min(a.valid_total_degree, b.valid_total_degree)
    return TruncatedSeries2(a.coeffs - b.coeffs, v, a.precision)


def s2_scale(a, lam):
    return TruncatedSeries2(a.coeffs * lam, a.valid_total_degree, a.precision)


def s2_shift_constant(a, delta):
    """Add a scalar to the (0,0) entry."""
    c = a.coeffs.copy()
    c.setflags(write=True)
    c[0, 0] = c[0, 0] + delta
    return TruncatedSeries2(c, a.valid_total_degree, a.precision)


def s2_outer(a, b):
    """The product a(z) * b(w) as a bivariate grid (square, min cutoff)."""
    if a.precision != b.precision:
        raise UsageError("precision mismatch")
    n = min(a.cutoff, b.cutoff)
    grid = np.outer(a.coeffs[:n], b.coeffs[:n])
    return TruncatedSeries2(grid, 2 * n - 2, a.precision)


def s2_mul(a, b):
    """Truncated bivariate Cauchy product, exact where both factors are trusted.

    Implemented as a row decomposition into one-dimensional convolutions so
    that the inner loops run at C speed.
    """
    _same_grid(a, b)
    n = a.cutoff
    out = _zeros((n, n), a.precision)
    for i in range(n):
        row = _zeros(n, a.precision)
        for k in range(i + 1):
            row = row + _conv(a.coeffs[k], b.coeffs[i - k], n)
        out[i] = row
    v = min(a.valid_total_degree, b.valid_total_degree)
    return TruncatedSeries2(out, v, a.precision)


def s2_reciprocal(a):
    """Grid r with a*r = 1 on the full rectangle; needs p_{0,0} != 0.

    Row n of r solves p_row0 * r_row_n = rhs_n where rhs collects the
    lower-row convolutions, so each row is one truncated division.
    """
    n = a.cutoff
    p = a.coeffs
    if abs(p[0, 0]) == 0:
        raise SingularSeriesError("bivariate reciprocal with vanishing p_{0,0}")
    inv0 = s_reciprocal(TruncatedSeries1(p[0], a.precision)).coeffs
    r = _zeros((n, n), a.precision)
    r[0] = inv0
    for i in range(1, n):
        rhs = _zeros(n, a.precision)
        for k in range(1, i + 1):
            rhs = rhs - _conv(p[k], r[i - k], n)
        r[i] = _conv(rhs, inv0, n)
    return TruncatedSeries2(r, a.valid_total_degree, a.precision)


def s2_transpose(a):
    return TruncatedSeries2(a.coeffs.T.copy(), a.valid_total_degree, a.precision)


def s2_eval(a, z, w):
    """Evaluate the truncated grid at (z, w); test helper."""
    dtype = object if a.precision == EXTENDED else complex
    wp = np.array([w**m for m in range(a.cutoff)], dtype=dtype)
    acc = [np.dot(row, wp) for row in a.coeffs]
    res = acc[-1]
    for c in acc[-2::-1]:
        res = res * z + c
    return res


def s2_max_abs(a, degree_bound=None):
    """Largest |p_{n,m}| over trusted entries up to an optional degree bound."""
    deg = a.valid_total_degree if degree_bound is None else degree_bound
    mask = _degree_mask(a.cutoff, deg)
    if not mask.any():
        return 0.0
    vals = a.coeffs[mask]
    return float(max(abs(v) for v in vals.flat))


def diagonal_sums(a, kmax=None):
    """Anti-diagonal sums s_k = sum_{n+m=k} p_{n,m}, the restriction to z = w.

    Only complete anti-diagonals (k <= cutoff - 1) are meaningful.
    """
    n = a.cutoff
    if kmax is None:
        kmax = min(a.valid_total_degree, n - 1)
    if kmax > n - 1:
        raise UsageError("anti-diagonal beyond the grid is incomplete")
    return [sum(a.coeffs[j, k - j] for j in range(k + 1)) for k in range(kmax + 1)]


def divided_difference(f):
    """The grid of q(z,w) = (f(z) - f(w))/(z - w), via q_{n,m} = c_{n+m+1}.

    The quotient extends holomorphically across z = w with q(0,0) = c_1.
    Output cutoff is f.cutoff - 1; entries needing coefficients beyond f's
    cutoff are zero and untrusted.
    """
    if f.cutoff < 2:
        raise UsageError("divided difference needs cutoff >= 2")
    k = f.cutoff - 1
    grid = _zeros((k, k), f.precision)
    for n in range(k):
        for m in range(min(k, k - n)):
            grid[n, m] = f.coeffs[n + m + 1]
    return TruncatedSeries2(grid, f.cutoff - 2, f.precision)


def mul_by_diag(q):
    """Multiply by (z - w): p_{n,m} = q_{n-1,m} - q_{n,m-1}; trust rises by one."""
    n = q.cutoff
    p = _zeros((n, n), q.precision)
    p[1:, :] += q.coeffs[:-1, :]
    p[:, 1:] -= q.coeffs[:, :-1]
    v = min(q.valid_total_degree + 1, 2 * n - 2)
    return TruncatedSeries2(p, v, q.precision)


def divide_by_diag(p, eps=None):
    """Divide by (z - w) a grid that vanishes on the diagonal.

    The quotient is recovered by the anti-diagonal sweep
    q_{n,m} = p_{n+1,m} + q_{n+1,m-1} with q_{.,-1} = 0.  Divisibility is
    checked first: every complete trusted anti-diagonal sum must vanish
    within eps (default 1e-9 * max trusted |p_{n,m}|).  The trusted total
    degree drops by one and is capped at cutoff - 2, because the top
    anti-diagonals of the quotient would need grid entries beyond p.
    """
    n = p.cutoff
    if eps is None:
        eps = 1e-9 * max(s2_max_abs(p), 1e-300)
    kmax = min(p.valid_total_degree, n - 1)
    if kmax >= 0:
        for k, s in enumerate(diagonal_sums(p, kmax)):
            if abs(s) > eps:
                raise NotDivisibleError(
                    f"diagonal residual {abs(s):.3e} at total degree {k} "
                    f"exceeds {eps:.3e}"
                )
    q = _zeros((n, n), p.precision)
    c = p.coeffs
    for m in range(n):
        for i in range(n - 2, -1, -1):
            q[i, m] = c[i + 1, m] + (q[i + 1, m - 1] if m >= 1 else 0)
    v = min(p.valid_total_degree - 1, n - 2)
    return TruncatedSeries2(q, v, p.precision)


def s2_compose(p, f, g):
    """Substitute one-variable series: the grid of p(f(z), g(w)).

    Exact on trusted degrees when f(0) = g(0) = 0 (graded-triangular
    substitution); otherwise a truncation approximation whose error decays
    as the cutoff grows.  All three inputs must share the cutoff.
    """
    n = p.cutoff
    if f.cutoff != n or g.cutoff != n:
        raise UsageError("substitution requires matching cutoffs")
    if f.precision != p.precision or g.precision != p.precision:
        raise UsageError("precision mismatch")
    # rows: substitute w -> g(w) in each z-degree slice
    rows = np.empty((n, n), dtype=p.coeffs.dtype)
    for i in range(n):
        rows[i] = s_compose(TruncatedSeries1(p.coeffs[i], p.precision), g).coeffs
    # Horner in f along the z axis
    out = _zeros((n, n), p.precision)
    out[0] = rows[n - 1]
    for i in range(n - 2, -1, -1):
        nxt = _zeros((n, n), p.precision)
        for m in range(n):
            nxt[:, m] = _conv(out[:, m], f.coeffs, n)
        nxt[0] += rows[i]
        out = nxt
    return TruncatedSeries2(out, p.valid_total_degree, p.precision)
