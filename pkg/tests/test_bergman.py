"""One-particle space: kernels, weighted compositions, pushforwards."""

import cmath
import math

import numpy as np
import pytest

from ce2.bergman import (
    BergmanVector,
    apply_two_form,
    bergman_inner,
    contraction_functional,
    evaluate,
    kernel_derivative,
    kernel_vector,
    matrix_apply,
    pair_functional,
    rho_cl_matrix,
    t_matrix,
)
from ce2.diskmap import Affine, Mobius, SeriesMap, dm_compose, dm_derivative, dm_eval, identity_map
from ce2.errors import DomainError


def test_kernel_at_origin():
    v = kernel_vector(0.0, 5)
    assert np.allclose(v.coeffs, [1, 0, 0, 0, 0])


def test_kernel_requires_disk_parameter():
    with pytest.raises(DomainError):
        kernel_vector(1.0, 4)


def test_kernel_pair_inner_product():
    # (E_a, E_b) = 1/(1 - conj(a) b)^2 up to the geometric truncation tail
    n = 48
    a, b = 0.4 + 0.2j, -0.3 + 0.35j
    got = bergman_inner(kernel_vector(a, n), kernel_vector(b, n))
    expect = 1.0 / (1.0 - a.conjugate() * b) ** 2
    tail = (abs(a) * abs(b)) ** n * n**2
    assert abs(got - expect) < max(tail, 1e-12)


def test_kernel_evaluates_functions():
    # f = z^2 has orthonormal coordinates (0, 0, 1/sqrt(3), 0, ...)
    n = 8
    f = np.zeros(n, dtype=complex)
    f[2] = 1 / math.sqrt(3)
    got = bergman_inner(kernel_vector(0.5, n), BergmanVector(f))
    assert abs(got - 0.25) < 1e-14


def test_reproducing_property_random_polynomial():
    rng = np.random.default_rng(7)
    n = 40
    v = BergmanVector(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for a in (0.3, -0.2 + 0.4j, 0.55j):
        got = bergman_inner(kernel_vector(a, n), v)
        expect = evaluate(v, np.conj(a))
        tail = abs(a) ** n * float(np.linalg.norm(v.coeffs)) * n
        assert abs(got - expect) < max(tail, 1e-12)


def test_kernel_derivative_order_zero():
    a = 0.3 + 0.1j
    assert np.allclose(kernel_derivative(a, 0, 9).coeffs, kernel_vector(a, 9).coeffs)


def test_kernel_derivative_at_origin():
    v = kernel_derivative(0.0, 1, 6)
    expect = np.zeros(6)
    expect[1] = 2 / math.sqrt(2)
    assert np.allclose(v.coeffs, expect)


def test_kernel_derivative_pairs_with_derivative():
    # (d^2_a E_a, z^3) = (z^3)'' at conj(a) = 6 * 0.4
    n = 10
    f = np.zeros(n, dtype=complex)
    f[3] = 1 / math.sqrt(4)
    got = bergman_inner(kernel_derivative(0.4, 2, n), BergmanVector(f))
    assert abs(got - 2.4) < 1e-13


def test_mobius_kernel_identity_sample_pairs():
    # phi'(z) conj(phi'(w)) / (1 - phi(z) conj(phi(w)))^2 = 1/(1 - z conj(w))^2
    phi = Mobius(0.8, 0.3 - 0.25j)
    pts = [0.1 * k * cmath.exp(1.1j * k) for k in range(1, 6)]
    for z in pts:
        for w in pts:
            lhs = (
                dm_derivative(phi, z)
                * dm_derivative(phi, w).conjugate()
                / (1 - dm_eval(phi, z) * dm_eval(phi, w).conjugate()) ** 2
            )
            rhs = 1 / (1 - z * w.conjugate()) ** 2
            assert abs(lhs - rhs) < 1e-12


def test_t_matrix_dilation_diagonal():
    n = 10
    t = t_matrix(Affine(0.0, 0.5), n)
    assert np.allclose(t.matrix, np.diag(0.5 ** np.arange(1, n + 1)))


def test_t_matrix_identity():
    assert np.allclose(t_matrix(identity_map(), 7).matrix, np.eye(7))


def test_t_matrix_contraction_norm():
    rng = np.random.default_rng(11)
    n = 24
    for _ in range(10):
        if rng.uniform() < 0.5:
            alpha = (rng.uniform(0, 0.6)) * cmath.exp(2j * math.pi * rng.uniform())
            phi = Mobius(rng.uniform(-math.pi, math.pi), alpha)
        else:
            r = rng.uniform(0.1, 0.6)
            a = rng.uniform(0, 0.95 - r) * cmath.exp(2j * math.pi * rng.uniform())
            phi = Affine(a, r)
        s = np.linalg.svd(t_matrix(phi, n).matrix, compute_uv=False)
        assert s[0] <= 1 + 1e-9


def test_rho_cl_translation_on_vacuum_mode():
    # rho_cl(B_{a,r}) e_0 = r E_a: coordinates r sqrt(k+1) a^k
    n = 12
    a, r = 0.3 + 0.2j, 0.4
    m = rho_cl_matrix(Affine(a, r), n)
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1
    got = m.matrix @ e0
    k = np.arange(n)
    assert np.allclose(got, r * np.sqrt(k + 1.0) * a**k, atol=1e-13)


def test_rho_cl_dilation_diagonal():
    n = 9
    m = rho_cl_matrix(Affine(0.0, 0.7), n)
    assert np.allclose(m.matrix, np.diag(0.7 ** np.arange(1, n + 1)))


def test_rho_cl_moves_kernels():
    # rho_cl(phi) E_a = phi'(a) E_{phi(a)}
    n = 48
    phi = Mobius(0.5, 0.3)
    a = 0.2
    lhs = matrix_apply(rho_cl_matrix(phi, n), kernel_vector(a, n))
    rhs = dm_derivative(phi, a) * kernel_vector(dm_eval(phi, a), n).coeffs
    assert np.max(np.abs(lhs.coeffs - rhs)) < 1e-10


def test_rho_cl_translation_lemma_general_mode():
    # rho_cl(B_{a,r}) sqrt(n+1) e_n = (r^{n+1}/n!) (d/da)^n E_a
    n = 20
    a, r = 0.25 - 0.15j, 0.35
    m = rho_cl_matrix(Affine(a, r), n)
    for mode in (0, 1, 3):
        src = np.zeros(n, dtype=complex)
        src[mode] = math.sqrt(mode + 1)
        got = m.matrix @ src
        expect = (
            r ** (mode + 1)
            / math.factorial(mode)
            * kernel_derivative(a, mode, n).coeffs
        )
        assert np.max(np.abs(got - expect)) < 1e-12


def test_action_matrices_compose_exactly_for_triangular_maps():
    n = 16
    phi = SeriesMap([0, 0.8, 0.15])
    psi = SeriesMap([0, 0.7, -0.1, 0.05])
    comp = dm_compose(phi, psi, cutoff=2 * n)
    t_phi = t_matrix(phi, n).matrix
    t_psi = t_matrix(psi, n).matrix
    assert np.max(np.abs(t_psi @ t_phi - t_matrix(comp, n).matrix)) < 1e-12
    r_phi = rho_cl_matrix(phi, n).matrix
    r_psi = rho_cl_matrix(psi, n).matrix
    assert np.max(np.abs(r_phi @ r_psi - rho_cl_matrix(comp, n).matrix)) < 1e-12


def test_action_matrices_converge_for_general_maps():
    phi = Mobius(0.4, 0.3 + 0.2j)
    psi = Mobius(-0.7, -0.25)
    comp = dm_compose(phi, psi)
    errs = []
    for n in (16, 32):
        block = 8
        prod = rho_cl_matrix(phi, n).matrix @ rho_cl_matrix(psi, n).matrix
        direct = rho_cl_matrix(comp, n).matrix
        errs.append(np.max(np.abs((prod - direct)[:block, :block])))
    assert errs[1] <= 0.5 * errs[0]


def test_mobius_preserves_kernel_gram():
    n = 64
    phi = Mobius(1.1, 0.35 - 0.1j)
    pts = [0.3, -0.25, 0.2j, 0.1 - 0.3j, -0.15j, 0.05 + 0.05j]
    m = rho_cl_matrix(phi, n)
    kernels = [kernel_vector(a, n) for a in pts]
    images = [matrix_apply(m, k) for k in kernels]
    for u, iu in zip(kernels, images):
        for v, iv in zip(kernels, images):
            tail = 0.45**n * n**2
            assert abs(bergman_inner(iu, iv) - bergman_inner(u, v)) < max(1e-10, tail)


def test_strong_continuity_spot_check():
    # rho_cl(g) E_a -> E_a along a parameter sequence g -> id
    n = 32
    a = 0.3 + 0.1j
    base = kernel_vector(a, n)
    prev = None
    for eps in (0.1, 0.05, 0.025, 0.0125):
        phi = Mobius(eps, eps * 0.5)
        img = matrix_apply(rho_cl_matrix(phi, n), base)
        dist = float(np.linalg.norm(img.coeffs - base.coeffs))
        if prev is not None:
            assert dist < prev
        prev = dist
    assert prev < 0.05


# --- contraction functionals -------------------------------------------------


def test_contraction_functional_vanishes_for_mobius():
    c = contraction_functional(Mobius(0.3, 0.4j), 12)
    assert np.max(np.abs(c.entries)) < 1e-11


def test_contraction_functional_symmetry():
    c = contraction_functional(SeriesMap([0, 1, 0.1]), 10)
    assert np.array_equal(c.entries, c.entries.T)


def test_contraction_functional_reproduces_kernel_values():
    # pairing with truncated kernels gives F_phi(a, b) = -c^2/(1+c(a+b))^2
    n = 40
    c = 0.1
    functional = contraction_functional(SeriesMap([0, 1, c]), n)
    a, b = 0.2, -0.1
    got = apply_two_form(functional, kernel_vector(a, n), kernel_vector(b, n))
    expect = -(c**2) / (1 + c * (a + b)) ** 2
    assert abs(got - expect) < 1e-8


def test_pair_functional_values_and_transpose():
    n = 10
    c = pair_functional(Affine(0.5, 0.2), Affine(-0.3, 0.2), n)
    assert abs(c.entries[0, 0] - 0.0625) < 1e-13
    swapped = pair_functional(Affine(-0.3, 0.2), Affine(0.5, 0.2), n)
    assert np.max(np.abs(swapped.entries - c.entries.T)) < 1e-13


def test_pair_functional_h_normalization_lemma():
    # on h_n = sqrt(n+1) e_n the pair functional gives the closed form
    # (-1)^n r^{n+1} s^{m+1} (n+m+1)!/(n! m!) zeta^{-n-m-2}
    n = 8
    zeta, r, s = 0.5, 0.2, 0.2
    c = pair_functional(Affine(zeta, r), Affine(0.0, s), n)
    for i in range(4):
        for j in range(4):
            hi = np.zeros(n, dtype=complex)
            hi[i] = math.sqrt(i + 1)
            hj = np.zeros(n, dtype=complex)
            hj[j] = math.sqrt(j + 1)
            got = apply_two_form(c, BergmanVector(hi), BergmanVector(hj))
            expect = (
                (-1) ** i
                * r ** (i + 1)
                * s ** (j + 1)
                * math.factorial(i + j + 1)
                / (math.factorial(i) * math.factorial(j))
                * zeta ** (-i - j - 2)
            )
            assert abs(got - expect) < 1e-12 * max(1, abs(expect))


def _disk_quadrature(n_rad, n_ang, offset):
    """Nodes and weights for (1/pi) * area integral over the unit disk.

    Gauss-Legendre in r^2 paired with an (offset) trapezoid rule in angle.
    """
    x, wx = np.polynomial.legendre.leggauss(n_rad)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * wx
    theta = 2 * math.pi * (np.arange(n_ang) + offset) / n_ang
    z = np.sqrt(u)[:, None] * np.exp(1j * theta)[None, :]
    w = np.repeat(wu[:, None], n_ang, axis=1) / n_ang
    return z.ravel(), w.ravel()


def test_conjugation_cancellation_against_quadrature():
    # the contraction functional claims c_{n,m} = integral of
    # F_phi(conj z, conj w) e_n(z) e_m(w) over the bidisk; check it by
    # direct quadrature with F evaluated pointwise from its definition
    n = 6
    c = 0.1 + 0.05j
    phi = SeriesMap([0, 1, c])
    functional = contraction_functional(phi, n).entries

    def f_phi(z, w):
        num = (1 + 2 * c * z) * (1 + 2 * c * w)
        return num / (z + c * z * z - w - c * w * w) ** 2 - 1 / (z - w) ** 2

    zs, wz = _disk_quadrature(48, 64, 0.0)
    ws, ww = _disk_quadrature(48, 64, 0.5)
    fgrid = f_phi(np.conj(zs)[:, None], np.conj(ws)[None, :])
    idx = np.arange(n)
    ez = np.sqrt(idx + 1)[None, :] * zs[:, None] ** idx[None, :]
    ew = np.sqrt(idx + 1)[None, :] * ws[:, None] ** idx[None, :]
    quad = (wz[:, None] * ez).T @ fgrid @ (ww[:, None] * ew)
    assert np.max(np.abs(quad - functional)) < 1e-8
