"""The one-particle Hilbert space of square-integrable disk functions.

Vectors are coordinates in the orthonormal basis e_n(z) = sqrt(n+1) z^n;
the inner product is conjugate-linear in the first slot, so that pairing
with the reproducing kernel E_a(z) = 1/(1 - a z)^2 evaluates a function at
conj(a).  A disk map phi acts classically through the weighted composition
T_phi f = phi' (f o phi) and its pushforward rho_cl(phi) = T_{J(phi)}^*,
both realized here as truncated matrices in the orthonormal basis.

Monomial-basis intermediates never escape this module: every matrix and
vector is handed out in orthonormal coordinates.  Truncated matrices are
formed by truncate-then-adjoint; for maps fixing the origin the action
matrices are graded-triangular and compose exactly at truncation, while
for general maps composition identities hold only in the dual-cutoff
convergence sense.
"""

from __future__ import annotations

import math

import numpy as np

from .cocycle import GrunskyMatrix, cocycle_F, cocycle_G, grunsky
from .diskmap import dm_conjugate, dm_to_series, map_key
from .errors import DomainError, UsageError
from .series import TruncatedSeries1, s_derivative

_matrix_cache = {}


class BergmanVector:
    """Coordinates v_n in the orthonormal basis e_n, n = 0..N-1."""

    __slots__ = ("coeffs", "cutoff")

    def __init__(self, coeffs):
        arr = np.asarray(coeffs, dtype=complex)
        if arr.ndim != 1 or arr.size < 1:
            raise UsageError("Bergman vector must be a nonempty 1-d array")
        if not np.all(np.isfinite(arr)):
            raise UsageError("Bergman coordinates must be finite")
        self.coeffs = arr
        self.cutoff = arr.size
        arr.setflags(write=False)

    def __repr__(self):
        return f"BergmanVector(N={self.cutoff})"


class ActionMatrix:
    """An operator in the orthonormal basis, tagged by what it represents."""

    __slots__ = ("matrix", "cutoff", "tag")

    def __init__(self, matrix, tag):
        arr = np.asarray(matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise UsageError("action matrix must be square")
        self.matrix = arr
        self.cutoff = arr.shape[0]
        self.tag = tag
        arr.setflags(write=False)

    def __repr__(self):
        return f"ActionMatrix({self.tag}, N={self.cutoff})"


def bergman_inner(u, v):
    """(u, v) = sum conj(u_n) v_n, conjugate-linear in the first slot."""
    if u.cutoff != v.cutoff:
        raise UsageError("cutoff mismatch")
    return complex(np.vdot(u.coeffs, v.coeffs))


def evaluate(v, z):
    """The function sum v_n e_n at the point z (test helper)."""
    n = np.arange(v.cutoff)
    return complex(np.sum(v.coeffs * np.sqrt(n + 1) * z**n))


def kernel_vector(a, n):
    """Truncated reproducing kernel E_a: coordinates sqrt(k+1) a^k.

    Pairing against it evaluates at conj(a): (E_a, f) = f(conj(a)).
    """
    if abs(a) >= 1:
        raise DomainError("kernel parameter needs |a| < 1")
    k = np.arange(n)
    return BergmanVector(np.sqrt(k + 1.0) * np.asarray(a, dtype=complex) ** k)


def kernel_derivative(a, order, n):
    """Coordinates of (d/da)^order E_a, the derivative-evaluation kernel.

    The monomial expansion is sum_k ((order+k+1)!/k!) a^k z^{order+k};
    pairing with f yields the order-th derivative of f at conj(a).
    """
    if abs(a) >= 1:
        raise DomainError("kernel parameter needs |a| < 1")
    if order < 0:
        raise UsageError("derivative order must be nonnegative")
    coeffs = np.zeros(n, dtype=complex)
    ac = complex(a)
    for idx in range(order, n):
        # monomial coefficient (order+k+1)!/k! at degree idx = order + k
        k = idx - order
        mono = math.factorial(idx + 1) // math.factorial(k)
        coeffs[idx] = mono * ac**k / math.sqrt(idx + 1)
    return BergmanVector(coeffs)


def matrix_apply(m, v):
    if m.cutoff != v.cutoff:
        raise UsageError("cutoff mismatch")
    return BergmanVector(m.matrix @ v.coeffs)


def t_matrix(phi, n):
    """Matrix of T_phi f = phi' (f o phi): column m holds phi' phi^m sqrt(m+1).

    A contraction (operator norm at most 1) for genuine disk embeddings;
    diagonal with entries r^{m+1} for the dilation z |-> r z.
    """
    key = ("T", map_key(phi), n)
    hit = _matrix_cache.get(key)
    if hit is not None:
        return hit
    s = dm_to_series(phi, n + 1)
    dphi = s_derivative(s).coeffs[:n]
    base = s.coeffs[:n]
    cols = np.empty((n, n), dtype=complex)
    power = dphi.copy()  # phi' * phi^0
    for m in range(n):
        cols[:, m] = power * math.sqrt(m + 1)
        if m + 1 < n:
            power = np.convolve(power, base)[:n]
    scale = 1.0 / np.sqrt(np.arange(1.0, n + 1))
    out = ActionMatrix(cols * scale[:, None], "T")
    _matrix_cache[key] = out
    return out


def rho_cl_matrix(phi, n):
    """Classical pushforward rho_cl(phi) = adjoint of T_{J(phi)}.

    Sends E_a to phi'(a) E_{phi(a)} and acts diagonally with eigenvalues
    r^{n+1} on the dilation z |-> r z.
    """
    key = ("rho_cl", map_key(phi), n)
    hit = _matrix_cache.get(key)
    if hit is not None:
        return hit
    t = t_matrix(dm_conjugate(phi), n)
    out = ActionMatrix(t.matrix.conj().T, "rho_cl")
    _matrix_cache[key] = out
    return out


def contraction_functional(phi, n):
    """The two-particle functional of F_phi in orthonormal coordinates.

    c_{n,m} = d_{n,m}/sqrt((n+1)(m+1)); the conjugations in the defining
    pairing against F_{J(phi)} cancel in these coordinates (validated
    against direct quadrature in the test suite).  Vanishes identically
    for linear fractional maps.
    """
    return grunsky(cocycle_F(phi, n), "F")


def pair_functional(phi, psi, n):
    """The cross-slot functional of G_{phi,psi}: c_{n,m} = g_{n,m}/sqrt((n+1)(m+1))."""
    return grunsky(cocycle_G(phi, psi, n), "G")


def apply_two_form(g, u, v):
    """Bilinear pairing sum_{n,m} c_{n,m} u_n v_m (no conjugation).

    With u = E_a, v = E_b this reproduces the kernel value: F_phi(a, b)
    for a contraction functional, G_{phi,psi}(a, b) for a pair functional.
    """
    if not isinstance(g, GrunskyMatrix):
        raise UsageError("expected a GrunskyMatrix")
    if u.cutoff != g.cutoff or v.cutoff != g.cutoff:
        raise UsageError("cutoff mismatch")
    return complex(u.coeffs @ g.entries @ v.coeffs)


def clear_cache():
    _matrix_cache.clear()
