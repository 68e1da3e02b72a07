"""Disk map representations, composition, conjugation, disjointness."""

import cmath

import numpy as np
import pytest

from ce2.diskmap import (
    Affine,
    Configuration,
    Mobius,
    SeriesMap,
    dm_compose,
    dm_conjugate,
    dm_disjoint,
    dm_eval,
    dm_to_series,
    identity_map,
    map_from_record,
    map_to_record,
    schwarz_witness,
    separation_sigma,
)
from ce2.errors import ConfigurationError, DomainError, UsageError
from ce2.series import s_eval

SAMPLES = [0.3, -0.41 + 0.2j, 0.1 - 0.55j, 0.72j, -0.66, 0.05 + 0.05j]


def test_eval_affine_center():
    assert dm_eval(Affine(0.5, 0.2), 0) == 0.5


def test_eval_mobius_identity():
    for z in SAMPLES:
        assert abs(dm_eval(identity_map(), z) - z) < 1e-15


def test_eval_mobius_sends_alpha_to_zero():
    assert abs(dm_eval(Mobius(0.0, 0.3), 0.3)) < 1e-15


def test_eval_outside_domain():
    with pytest.raises(DomainError):
        dm_eval(Affine(0.1, 0.2), 1.0)


def test_parameter_validation():
    with pytest.raises(DomainError):
        Mobius(0.0, 1.2)
    with pytest.raises(DomainError):
        Affine(0.9, 0.5)


def test_compose_affine_closed_form():
    a, b = Affine(0.3, 0.4), Affine(-0.2, 0.5)
    c = dm_compose(a, b)
    assert isinstance(c, Affine)
    assert c.a == a.r * b.a + a.a and c.r == a.r * b.r


def test_compose_with_identity():
    phi = Affine(0.2, 0.3)
    assert dm_compose(phi, identity_map()) is phi
    assert dm_compose(identity_map(), phi) is phi


def test_compose_mobius_sample_oracle():
    f = Mobius(0.7, 0.3 + 0.2j)
    g = Mobius(-1.2, -0.4 + 0.1j)
    fg = dm_compose(f, g)
    assert isinstance(fg, Mobius)
    points = [0.045 * k * cmath.exp(0.7j * k) for k in range(1, 21)]
    for z in points:
        assert abs(dm_eval(fg, z) - dm_eval(f, dm_eval(g, z))) < 1e-12


def test_compose_mixed_degrades_to_series():
    c = dm_compose(Mobius(0.2, 0.1), Affine(0.3, 0.4))
    assert isinstance(c, SeriesMap)
    assert c.series.cutoff == 64
    for z in SAMPLES:
        expected = dm_eval(Mobius(0.2, 0.1), dm_eval(Affine(0.3, 0.4), z))
        assert abs(dm_eval(c, z) - expected) < 1e-12


def test_compose_associative_pointwise():
    f = Mobius(0.4, 0.2 - 0.1j)
    g = Affine(0.25, 0.3)
    h = SeriesMap([0, 0.6, 0.1])
    lhs = dm_compose(dm_compose(f, g), h)
    rhs = dm_compose(f, dm_compose(g, h))
    for z in SAMPLES:
        assert abs(dm_eval(lhs, z) - dm_eval(rhs, z)) < 1e-10


def test_conjugate_mobius_closed_form():
    phi = Mobius(0.9, 0.2 + 0.4j)
    j = dm_conjugate(phi)
    assert j.theta == -0.9 and j.alpha == 0.2 - 0.4j
    for z in SAMPLES:
        expected = dm_eval(phi, z.conjugate()).conjugate()
        assert abs(dm_eval(j, z) - expected) < 1e-14


def test_conjugate_affine_and_involution():
    phi = Affine(0.1 + 0.2j, 0.3)
    j = dm_conjugate(phi)
    assert j.a == 0.1 - 0.2j and j.r == 0.3
    for m in (phi, Mobius(0.3, 0.1j), SeriesMap([0.1j, 0.5, 0.2 - 0.1j])):
        jj = dm_conjugate(dm_conjugate(m))
        for z in SAMPLES:
            assert abs(dm_eval(jj, z) - dm_eval(m, z)) < 1e-14


def test_conjugate_is_monoid_homomorphism():
    f = Mobius(0.5, 0.3j)
    g = SeriesMap([0.05, 0.6, 0.15j])
    lhs = dm_conjugate(dm_compose(f, g))
    rhs = dm_compose(dm_conjugate(f), dm_conjugate(g))
    for z in SAMPLES:
        assert abs(dm_eval(lhs, z) - dm_eval(rhs, z)) < 1e-10


def test_to_series_affine():
    s = dm_to_series(Affine(0.2 + 0.1j, 0.4), 5)
    assert np.allclose(s.coeffs, [0.2 + 0.1j, 0.4, 0, 0, 0])


def test_to_series_identity():
    s = dm_to_series(Mobius(0.0, 0j), 4)
    assert np.allclose(s.coeffs, [0, 1, 0, 0])


def test_to_series_mobius_matches_eval():
    phi = Mobius(0.0, 0.3)
    s = dm_to_series(phi, 40)
    for z in SAMPLES + [0.5, -0.45j, 0.3 + 0.3j, 0.2]:
        assert abs(s_eval(s, z) - dm_eval(phi, z)) < 1e-12


def test_disjoint_affine_cases():
    assert dm_disjoint(Affine(0.5, 0.2), Affine(-0.3, 0.2), closure=True) == (
        "disjoint",
        "analytic",
    )
    assert dm_disjoint(Affine(0.4, 0.4), Affine(-0.4, 0.4), closure=True) == (
        "touching",
        "analytic",
    )
    # tangent open disks are disjoint
    assert dm_disjoint(Affine(0.4, 0.4), Affine(-0.4, 0.4), closure=False) == (
        "disjoint",
        "analytic",
    )
    assert dm_disjoint(Affine(0.2, 0.3), Affine(0.2, 0.3))[0] == "overlapping"


def test_disjoint_mobius_is_whole_disk():
    verdict, method = dm_disjoint(Mobius(0.1, 0.2), Affine(0.5, 0.1))
    assert verdict == "overlapping" and method == "analytic"


def test_disjoint_series_sampled():
    left = SeriesMap([-0.5, 0.2])
    right = SeriesMap([0.5, 0.2])
    verdict, method = dm_disjoint(left, right)
    assert verdict == "disjoint" and method == "sampled"
    near = SeriesMap([0.05, 0.3])
    verdict, method = dm_disjoint(near, SeriesMap([-0.05, 0.3]))
    assert method == "sampled" and verdict in ("overlapping", "unknown")


def test_separation_sigma():
    assert separation_sigma(Affine(0.5, 0.2), Affine(-0.3, 0.2)) == pytest.approx(0.5)
    assert separation_sigma(Affine(0.4, 0.4), Affine(-0.4, 0.4)) == pytest.approx(1.0)
    assert separation_sigma(Affine(0.25, 0.1), Affine(-0.25, 0.3)) == pytest.approx(0.8)
    with pytest.raises(ConfigurationError):
        separation_sigma(Affine(0.1, 0.2), Affine(0.1, 0.3))


def test_schwarz_witness_holds_for_disk_maps():
    for m in (Mobius(0.3, 0.4j), Affine(0.3, 0.5), SeriesMap([0, 0.5, 0.2])):
        assert schwarz_witness(m)


def test_series_map_records_unverified_analyticity():
    good = SeriesMap([0, 0.5, 0.2])
    assert good.boundary_ok and good.derivative_ok
    # |z + 0.1 z^2| exceeds 1 near the boundary: recorded, not rejected
    flagged = SeriesMap([0, 1, 0.1])
    assert not flagged.boundary_ok


def test_configuration_certification():
    Configuration([Affine(0.5, 0.2), Affine(-0.3, 0.2)])
    with pytest.raises(ConfigurationError):
        Configuration([Affine(0.4, 0.4), Affine(-0.4, 0.4)])  # tangent
    tangent = Configuration(
        [Affine(0.4, 0.4), Affine(-0.4, 0.4)], certify_hs=False
    )
    assert not tangent.certified_hs
    with pytest.raises(ConfigurationError):
        Configuration([Affine(0.1, 0.3), Affine(0.2, 0.3)], certify_hs=False)


def test_configuration_sampled_evidence_taints_certificate():
    pair = [SeriesMap([-0.5, 0.2]), SeriesMap([0.5, 0.2])]
    config = Configuration(pair, certify_hs=True, assert_hs=True)
    assert not config.certified_hs and config.hs_ok
    assert config.evidence[(0, 1)] == ("disjoint", "sampled")


def test_serialization_round_trip():
    maps = [
        Mobius(0.4, 0.1 - 0.2j),
        Affine(0.3 + 0.1j, 0.25),
        SeriesMap([0, 0.7, 0.1j], margin=0.05),
    ]
    for m in maps:
        back = map_from_record(map_to_record(m))
        for z in SAMPLES:
            assert abs(dm_eval(back, z) - dm_eval(m, z)) < 1e-14


def test_malformed_record():
    with pytest.raises(UsageError):
        map_from_record({"kind": "mobius"})
    with pytest.raises(UsageError):
        map_from_record({"kind": "spiral", "a": [0, 0]})
