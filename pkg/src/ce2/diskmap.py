"""Holomorphic embeddings of the unit disk and their configurations.

Three representations are supported:

* ``Mobius(theta, alpha)`` -- the disk automorphism
  z |-> e^{i theta} (z - alpha)/(1 - conj(alpha) z), |alpha| < 1;
* ``Affine(a, r)`` -- z |-> r z + a with |a| + r <= 1, the closed image
  being the disk of radius r around a;
* ``SeriesMap(series, margin)`` -- the polynomial map defined by a
  truncated coefficient list.  A SeriesMap *is* its polynomial: padding
  with zeros beyond the stored cutoff is exact.  Whether that polynomial
  actually embeds the disk is only sampled, never certified; the outcome
  of the boundary sampling is recorded on the object.

Complex conjugation J(phi)(z) = conj(phi(conj(z))) acts on all three
forms by conjugating parameters, and is a monoid automorphism.

Disjointness of images is decided exactly for pairs of round images
(affine/affine; a Mobius image is the whole disk, so any pair involving a
Mobius map overlaps) and by a sampled convex-hull test for polynomial
maps, always labelled as such in the evidence record.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, UsageError
from .series import (
    DOUBLE,
    TruncatedSeries1,
    s_compose,
    s_eval,
    _zeros,
)

_BOUNDARY_SAMPLES = 512
_BOUNDARY_RADIUS = 1.0 - 1e-6
_DEFAULT_COMPOSE_CUTOFF = 64


@dataclass(frozen=True)
class Mobius:
    """Disk automorphism e^{i theta}(z - alpha)/(1 - conj(alpha) z)."""

    theta: float
    alpha: complex

    def __post_init__(self):
        if abs(self.alpha) >= 1:
            raise DomainError("Mobius parameter needs |alpha| < 1")


@dataclass(frozen=True)
class Affine:
    """The map z |-> r z + a; image is the round disk B_r(a)."""

    a: complex
    r: float

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise DomainError("affine radius must lie in (0, 1)")
        if abs(self.a) + self.r > 1 + 1e-12:
            raise DomainError("affine image must stay inside the closed disk")


class SeriesMap:
    """Polynomial disk map given by truncated Taylor coefficients.

    ``margin`` is a caller-asserted lower bound on the distance of the
    image from the boundary circle; it is recorded, not verified.  The
    constructor samples |phi| and |phi'| on a boundary grid and stores the
    outcome in ``boundary_ok`` / ``derivative_ok`` — heuristic evidence
    only, so a failing sample does not reject the map (coefficient-level
    computations remain meaningful regardless).
    """

    __slots__ = ("series", "margin", "boundary_ok", "derivative_ok")

    def __init__(self, series, margin=0.0):
        if not isinstance(series, TruncatedSeries1):
            series = TruncatedSeries1(series)
        if margin < 0:
            raise UsageError("margin must be nonnegative")
        self.series = series
        self.margin = margin
        zs = _BOUNDARY_RADIUS * np.exp(
            2j * np.pi * np.arange(_BOUNDARY_SAMPLES) / _BOUNDARY_SAMPLES
        )
        if series.precision == DOUBLE:
            vals = np.polyval(series.coeffs[::-1], zs)
            k = np.arange(1, series.cutoff)
            dcoef = series.coeffs[1:] * k
            dval = np.polyval(dcoef[::-1], zs) if series.cutoff > 1 else np.zeros_like(zs)
            self.boundary_ok = bool(np.max(np.abs(vals)) < 1.0)
            self.derivative_ok = bool(np.min(np.abs(dval)) > 0.0)
        else:
            self.boundary_ok = False
            self.derivative_ok = False

    def __repr__(self):
        flag = "sampled-ok" if (self.boundary_ok and self.derivative_ok) else "unverified"
        return f"SeriesMap(N={self.series.cutoff}, {flag})"


def identity_map():
    return Mobius(0.0, 0j)


def map_key(phi):
    """Hashable signature of a map, used for operator caching."""
    if isinstance(phi, Mobius):
        return ("mobius", float(phi.theta), complex(phi.alpha))
    if isinstance(phi, Affine):
        return ("affine", complex(phi.a), float(phi.r))
    if isinstance(phi, SeriesMap):
        return ("series", phi.series.precision, phi.series.coeffs.tobytes())
    raise UsageError(f"not a disk map: {phi!r}")


def dm_eval(phi, z):
    """phi(z) for |z| < 1; closed forms for parametric maps, Horner otherwise."""
    if abs(z) >= 1:
        raise DomainError("evaluation point must satisfy |z| < 1")
    return _eval_unchecked(phi, z)


def _eval_unchecked(phi, z):
    if isinstance(phi, Mobius):
        return cmath.exp(1j * phi.theta) * (z - phi.alpha) / (1 - phi.alpha.conjugate() * z)
    if isinstance(phi, Affine):
        return phi.r * z + phi.a
    if isinstance(phi, SeriesMap):
        return s_eval(phi.series, z)
    raise UsageError(f"not a disk map: {phi!r}")


def dm_derivative(phi, z):
    """phi'(z); closed forms for parametric maps."""
    if isinstance(phi, Mobius):
        return (
            cmath.exp(1j * phi.theta)
            * (1 - abs(phi.alpha) ** 2)
            / (1 - phi.alpha.conjugate() * z) ** 2
        )
    if isinstance(phi, Affine):
        return complex(phi.r)
    if isinstance(phi, SeriesMap):
        k = np.arange(1, phi.series.cutoff)
        dcoef = phi.series.coeffs[1:] * k
        acc = 0j
        for c in dcoef[::-1]:
            acc = acc * z + c
        return acc
    raise UsageError(f"not a disk map: {phi!r}")


def _mobius_matrix(phi):
    e = cmath.exp(1j * phi.theta)
    return np.array(
        [[e, -e * phi.alpha], [-phi.alpha.conjugate(), 1.0]], dtype=complex
    )


def _mobius_from_matrix(m):
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    alpha = -b / a
    phase = a / d
    theta = math.atan2(phase.imag, phase.real)
    # consistency of the SU(1,1) form: c/d must equal -conj(alpha)
    if abs(c / d + alpha.conjugate()) > 1e-9 * max(1.0, abs(alpha)):
        raise UsageError("matrix does not represent a disk automorphism")
    return Mobius(theta, alpha)


def dm_compose(phi, psi, cutoff=None):
    """The composite phi o psi, staying parametric whenever possible.

    Affine o Affine stays affine (B_{a,r} o B_{b,s} = B_{rb+a, rs});
    Mobius o Mobius composes through 2x2 matrices.  Mixed pairs degrade to
    a SeriesMap truncated at ``cutoff`` (default: the largest operand
    cutoff, at least 64).
    """
    if isinstance(phi, Mobius) and phi.theta == 0.0 and phi.alpha == 0:
        return psi
    if isinstance(psi, Mobius) and psi.theta == 0.0 and psi.alpha == 0:
        return phi
    if isinstance(phi, Affine) and isinstance(psi, Affine):
        return Affine(phi.r * psi.a + phi.a, phi.r * psi.r)
    if isinstance(phi, Mobius) and isinstance(psi, Mobius):
        return _mobius_from_matrix(_mobius_matrix(phi) @ _mobius_matrix(psi))
    if cutoff is None:
        cutoff = _DEFAULT_COMPOSE_CUTOFF
        for m in (phi, psi):
            if isinstance(m, SeriesMap):
                cutoff = max(cutoff, m.series.cutoff)
    outer = dm_to_series(phi, cutoff)
    inner = dm_to_series(psi, cutoff)
    return SeriesMap(s_compose(outer, inner))


def dm_conjugate(phi):
    """J(phi)(z) = conj(phi(conj(z))): conjugate all parameters/coefficients.

    Mobius(theta, alpha) |-> Mobius(-theta, conj(alpha)); an involution and
    a monoid homomorphism.
    """
    if isinstance(phi, Mobius):
        return Mobius(-phi.theta, phi.alpha.conjugate())
    if isinstance(phi, Affine):
        return Affine(phi.a.conjugate(), phi.r)
    if isinstance(phi, SeriesMap):
        return SeriesMap(
            TruncatedSeries1(np.conj(phi.series.coeffs), phi.series.precision),
            phi.margin,
        )
    raise UsageError(f"not a disk map: {phi!r}")


def dm_to_series(phi, n, precision=DOUBLE):
    """Taylor coefficients of phi at 0 up to degree n-1.

    Exact for every representation: affine and polynomial maps have finite
    expansions, and the Mobius expansion is the geometric series
    e^{i theta}(z - alpha) sum_k (conj(alpha) z)^k.
    """
    c = _zeros(n, precision)
    if isinstance(phi, Mobius):
        e = cmath.exp(1j * phi.theta)
        ac = phi.alpha.conjugate()
        one = 1 if precision == DOUBLE else c[0] * 0 + 1
        pow_ac = one
        c[0] = -e * phi.alpha
        for k in range(1, n):
            # coefficient of z^k in e(z - alpha) * sum (conj(alpha) z)^j
            c[k] = e * (pow_ac - phi.alpha * pow_ac * ac)
            pow_ac = pow_ac * ac
        return TruncatedSeries1(c, precision)
    if isinstance(phi, Affine):
        c[0] = c[0] + phi.a
        if n > 1:
            c[1] = c[1] + phi.r
        return TruncatedSeries1(c, precision)
    if isinstance(phi, SeriesMap):
        k = min(n, phi.series.cutoff)
        for i in range(k):
            c[i] = c[i] + phi.series.coeffs[i]
        return TruncatedSeries1(c, precision)
    raise UsageError(f"not a disk map: {phi!r}")


def image_disk(phi):
    """(center, radius) of the image when it is a round disk, else None."""
    if isinstance(phi, Affine):
        return (phi.a, phi.r)
    if isinstance(phi, Mobius):
        return (0j, 1.0)
    return None


def _boundary_curve(phi):
    zs = _BOUNDARY_RADIUS * np.exp(
        2j * np.pi * np.arange(_BOUNDARY_SAMPLES) / _BOUNDARY_SAMPLES
    )
    return np.array([_eval_unchecked(phi, z) for z in zs])


def dm_disjoint(phi, psi, closure=True):
    """Decide whether the images are disjoint.

    Returns ``(verdict, method)`` with verdict in {"disjoint", "touching",
    "overlapping", "unknown"} and method in {"analytic", "sampled"}.
    Round-image pairs are decided exactly from |centers| vs radii; with
    ``closure`` the tangent case counts as touching, without it tangent
    open disks are disjoint.  Pairs involving a polynomial map fall back
    to a convex-hull test on sampled boundary curves.
    """
    d1, d2 = image_disk(phi), image_disk(psi)
    if d1 is not None and d2 is not None:
        (c1, r1), (c2, r2) = d1, d2
        dist = abs(c1 - c2)
        rr = r1 + r2
        tol = 1e-12 * max(1.0, dist, rr)
        if dist > rr + tol:
            return ("disjoint", "analytic")
        if dist < rr - tol:
            return ("overlapping", "analytic")
        return ("touching" if closure else "disjoint", "analytic")
    from shapely.geometry import MultiPoint, Polygon

    curves = []
    for m in (phi, psi):
        disk = image_disk(m)
        if disk is None:
            curves.append(_boundary_curve(m))
        else:
            c, r = disk
            ang = 2j * np.pi * np.arange(_BOUNDARY_SAMPLES) / _BOUNDARY_SAMPLES
            curves.append(c + r * np.exp(ang))
    hulls = [
        MultiPoint([(float(z.real), float(z.imag)) for z in curve]).convex_hull
        for curve in curves
    ]
    if hulls[0].distance(hulls[1]) > 1e-9:
        return ("disjoint", "sampled")
    polys = [Polygon([(float(z.real), float(z.imag)) for z in curve]) for curve in curves]
    if polys[0].is_valid and polys[1].is_valid and polys[0].intersects(polys[1]):
        return ("overlapping", "sampled")
    return ("unknown", "sampled")


def separation_sigma(phi, psi):
    """sigma = (r + s)/|a - b| for an affine pair; 1 marks tangency."""
    if not (isinstance(phi, Affine) and isinstance(psi, Affine)):
        raise UsageError("separation sigma is defined for affine pairs")
    if phi.a == psi.a:
        raise ConfigurationError("degenerate configuration: equal centers")
    return (phi.r + psi.r) / abs(phi.a - psi.a)


def schwarz_witness(phi, n_radial=8, n_angular=32):
    """Sampled check that |phi| < 1 on a radial grid; heuristic evidence."""
    radii = np.linspace(0.1, _BOUNDARY_RADIUS, n_radial)
    worst = 0.0
    for r in radii:
        for k in range(n_angular):
            z = r * cmath.exp(2j * math.pi * k / n_angular)
            worst = max(worst, abs(_eval_unchecked(phi, z)))
    return worst < 1.0


class Configuration:
    """An ordered tuple of disk maps with pairwise disjointness evidence.

    ``certify_hs=True`` demands every pair be strictly disjoint in closure
    (tangent pairs are rejected: they fail the square-integrability of the
    pair kernel).  Verdicts obtained by sampling taint the certificate:
    the configuration is then only *asserted*, which the caller may allow
    with ``assert_hs=True``.
    """

    __slots__ = ("maps", "evidence", "certified_hs", "asserted_hs")

    def __init__(self, maps, certify_hs=True, assert_hs=False):
        self.maps = tuple(maps)
        self.evidence = {}
        sampled = False
        for i in range(len(self.maps)):
            for j in range(i + 1, len(self.maps)):
                verdict, method = dm_disjoint(self.maps[i], self.maps[j], closure=True)
                self.evidence[(i, j)] = (verdict, method)
                if verdict == "overlapping":
                    raise ConfigurationError(
                        f"maps {i} and {j} have overlapping images"
                    )
                if certify_hs and verdict in ("touching", "unknown"):
                    raise ConfigurationError(
                        f"maps {i} and {j}: verdict {verdict!r} is not "
                        "accepted for a square-integrability certificate"
                    )
                sampled = sampled or method == "sampled"
        self.certified_hs = certify_hs and not sampled
        self.asserted_hs = assert_hs

    @property
    def hs_ok(self):
        return self.certified_hs or self.asserted_hs

    def __len__(self):
        return len(self.maps)


# --- serialization ----------------------------------------------------------


def map_to_record(phi):
    """JSON-ready record with exactly the fields of the map's kind."""
    if isinstance(phi, Mobius):
        return {
            "kind": "mobius",
            "theta": float(phi.theta),
            "alpha": [phi.alpha.real, phi.alpha.imag],
        }
    if isinstance(phi, Affine):
        return {"kind": "affine", "a": [phi.a.real, phi.a.imag], "r": float(phi.r)}
    if isinstance(phi, SeriesMap):
        return {
            "kind": "series",
            "coeffs": [[c.real, c.imag] for c in map(complex, phi.series.coeffs)],
            "margin": float(phi.margin),
        }
    raise UsageError(f"not a disk map: {phi!r}")


def map_from_record(rec):
    try:
        kind = rec["kind"]
        if kind == "mobius":
            return Mobius(float(rec["theta"]), complex(rec["alpha"][0], rec["alpha"][1]))
        if kind == "affine":
            return Affine(complex(rec["a"][0], rec["a"][1]), float(rec["r"]))
        if kind == "series":
            coeffs = [complex(re, im) for re, im in rec["coeffs"]]
            return SeriesMap(coeffs, float(rec.get("margin", 0.0)))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise UsageError(f"malformed map record: {exc}") from exc
    raise UsageError(f"unknown map kind {rec.get('kind')!r}")
