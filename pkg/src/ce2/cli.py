"""Batch front end: cocycle reports, two-point products, verification suites.

Commands
--------
``ce2 cocycle <map.json> --cutoff N``
    Coefficient grid, Grunsky matrix, Hilbert-Schmidt profile and verdict
    for one map (the F kernel) or a two-map file (the G kernel).
``ce2 twopoint <config.json> --inputs a.json b.json ...``
    Plain and conjugate-twisted vacuum amplitudes of the n-ary product,
    with a halved-cutoff truncation-tail estimate.
``ce2 verify <suite>``
    Deterministic check suites; one JSON record per check, exit 0 iff all
    pass.  Suites: cocycle-identities, monoid, covariance, operad, trace,
    correspondence, convergence.

Exit codes: 0 success, 1 failing verification checks, 2 parse/usage
errors, 3 math/configuration errors.  Reports are emitted with a stable
key order so identical inputs and seed give byte-identical output.
The CE2_THREADS environment variable caps worker parallelism; the current
implementation is sequential, so any positive value is honored trivially
and recorded in the report.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import bergman, cocycle, diskmap, fock, heisenberg, series
from .errors import CE2Error, UsageError

DEFAULTS = {"N": 48, "P": 6, "W": 8, "abs_tol": 1e-8, "conv_factor": 0.6}


class RunConfig:
    """Cutoffs, tolerance policy, precision mode and seed for the suites."""

    def __init__(self, data=None):
        data = data or {}
        cut = data.get("cutoffs", {})
        tol = data.get("tolerance", {})
        self.n = int(cut.get("N", DEFAULTS["N"]))
        self.p = int(cut.get("P", DEFAULTS["P"]))
        self.w = int(cut.get("W", DEFAULTS["W"]))
        self.abs_tol = float(tol.get("abs_tol", DEFAULTS["abs_tol"]))
        self.conv_factor = float(tol.get("conv_factor", DEFAULTS["conv_factor"]))
        self.precision = data.get("precision", "double")
        self.seed = int(data.get("seed", 0))
        if self.n < 4 or self.p < 1:
            raise UsageError("run config needs N >= 4 and P >= 1")
        if self.abs_tol <= 0 or not 0 < self.conv_factor <= 1:
            raise UsageError("bad tolerance policy")
        if self.precision not in ("double", "extended"):
            raise UsageError(f"unknown precision {self.precision!r}")

    def as_dict(self):
        return {
            "cutoffs": {"N": self.n, "P": self.p, "W": self.w},
            "tolerance": {"abs_tol": self.abs_tol, "conv_factor": self.conv_factor},
            "precision": self.precision,
            "seed": self.seed,
        }


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _grid_to_lists(grid):
    return [[[complex(c).real, complex(c).imag] for c in row] for row in np.asarray(grid)]


def _emit(report, fmt, out_stream):
    if fmt == "json":
        out_stream.write(json.dumps(report, indent=2))
        out_stream.write("\n")
        return
    # CSV export: flatten coefficient grids into n,m,re,im rows
    writer = csv.writer(out_stream)
    writer.writerow(["n", "m", "re", "im"])
    grid = report.get("coefficients", [])
    for n, row in enumerate(grid):
        for m, (re, im) in enumerate(row):
            writer.writerow([n, m, repr(re), repr(im)])


def cmd_cocycle(args, out_stream):
    data = _load_json(args.map_file)
    n = args.cutoff
    precision = args.precision
    if isinstance(data, dict) and "maps" in data:
        maps = [diskmap.map_from_record(r) for r in data["maps"]]
        if len(maps) != 2:
            raise UsageError("pair kernel needs exactly two maps")
        grid = cocycle.cocycle_G(maps[0], maps[1], n, precision)
        source = "G"
    else:
        phi = diskmap.map_from_record(data)
        grid = cocycle.cocycle_F(phi, n, precision)
        source = "F"
    if precision == "extended":
        # report in doubles; the extended digits live in the grid itself
        as_double = np.array([[complex(c) for c in row] for row in grid.coeffs])
        grid_d = series.TruncatedSeries2(as_double, grid.valid_total_degree)
    else:
        grid_d = grid
    gm = cocycle.grunsky(grid_d, source)
    profile = cocycle.hs_partial_profile(gm)
    verdict = cocycle.profile_verdict(profile)
    report = {
        "command": "cocycle",
        "kernel": source,
        "cutoff": n,
        "valid_total_degree": grid.valid_total_degree,
        "precision": precision,
        "coefficients": _grid_to_lists(grid.coeffs),
        "grunsky": _grid_to_lists(gm.entries),
        "hs_profile": [[int(k), float(s)] for k, s in profile],
        "hs_norm_sq": float(profile[-1][1]) if profile else 0.0,
        "verdict": verdict,
    }
    _emit(report, args.format, out_stream)
    return 0


def _load_fock(path, modes, particles):
    data = _load_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"malformed Fock file {path}")
    return fock.fock_from_obj(data, modes=modes, particles=particles)


def cmd_twopoint(args, out_stream):
    data = _load_json(args.config_file)
    try:
        map_records = data["maps"]
    except (TypeError, KeyError) as exc:
        raise UsageError("configuration file needs a 'maps' list") from exc
    maps = [diskmap.map_from_record(r) for r in map_records]
    n, p = args.cutoff, args.particles
    config = diskmap.Configuration(maps, certify_hs=True)
    if len(maps) == 0:
        report = {
            "command": "twopoint",
            "cutoff": n,
            "vacuum_amplitude": [1.0, 0.0],
            "vacuum_amplitude_twisted": [1.0, 0.0],
            "tail_estimate": 0.0,
            "drops": 0,
        }
        _emit(report, args.format, out_stream)
        return 0
    if len(args.inputs) != len(maps):
        raise UsageError("number of inputs must match the configuration arity")
    inputs = [_load_fock(path, n, p) for path in args.inputs]
    result = fock.rho_n(config, inputs)
    twisted = fock.rho_n(fock.twist_J(config), inputs)
    # halved-cutoff rerun as a truncation-tail estimate
    half = max(4, n // 2)
    inputs_half = [_load_fock(path, half, p) for path in args.inputs]
    config_half = diskmap.Configuration(maps, certify_hs=True)
    result_half = fock.rho_n(config_half, inputs_half)
    amp = result.vacuum_amplitude()
    amp_half = result_half.vacuum_amplitude()
    report = {
        "command": "twopoint",
        "cutoff": n,
        "particles": p,
        "vacuum_amplitude": [amp.real, amp.imag],
        "vacuum_amplitude_twisted": [
            twisted.vacuum_amplitude().real,
            twisted.vacuum_amplitude().imag,
        ],
        "tail_estimate": abs(amp - amp_half),
        "drops": result.drops,
    }
    _emit(report, args.format, out_stream)
    return 0


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------


def _check(cid, params, value, expected, tol):
    err = abs(value - expected)
    return {
        "id": cid,
        "params": params,
        "value": float(value) if not isinstance(value, complex) else [value.real, value.imag],
        "expected": float(expected) if not isinstance(expected, complex) else [expected.real, expected.imag],
        "abs_err": float(err),
        "pass": bool(err <= tol),
    }


def _check_bound(cid, params, value, bound):
    return {
        "id": cid,
        "params": params,
        "value": float(value),
        "expected": f"<= {bound}",
        "abs_err": float(value),
        "pass": bool(value <= bound),
    }


def _triangular_family():
    f1 = diskmap.SeriesMap([0, 0.8, 0.15])
    f2 = diskmap.SeriesMap([0, 0.7, -0.1, 0.05])
    return f1, f2

def _general_family():
    return diskmap.Mobius(0.3, 0.25 + 0.15j), diskmap.Mobius(-0.4, -0.2 + 0.3j)


def _suite_cocycle_identities(cfg):
    checks = []
    f1, f2 = _triangular_family()
    rep = cocycle.verify_F_cocycle(f1, f2, 20)
    checks.append(
        _check_bound("F-cocycle-triangular", {"N": 20}, rep["max_discrepancy"], 1e-9)
    )
    g1 = diskmap.Affine(0.5, 0.2)
    g2 = diskmap.Affine(-0.3, 0.2)
    h1 = diskmap.SeriesMap([0, 0.9, 0.05])
    rep = cocycle.verify_G_cocycles(h1, g1, g2, diskmap.Affine(0.0, 0.5), diskmap.Affine(0.0, 0.6), 20)
    checks.append(
        _check_bound("G-cocycle-outer", {"N": 20}, rep["max_discrepancy_outer"], 1e-9)
    )
    checks.append(
        _check_bound("G-cocycle-inner", {"N": 20}, rep["max_discrepancy_inner"], 1e-9)
    )
    m1, m2 = diskmap.SeriesMap([0, 0.7, 0.21]), diskmap.Mobius(0.3, 0.5)
    d20 = cocycle.verify_F_cocycle(m1, m2, 20)["max_discrepancy"]
    d40 = cocycle.verify_F_cocycle(m1, m2, 40)["max_discrepancy"]
    floor = 1e-12
    ok = d40 <= max(cfg.conv_factor * d20, floor)
    checks.append(
        {
            "id": "F-cocycle-general-shrinks",
            "params": {"N": [20, 40]},
            "value": float(d40),
            "expected": f"<= {cfg.conv_factor} * {d20:.3e} (floor {floor})",
            "abs_err": float(d40),
            "pass": bool(ok),
        }
    )
    return checks


def _random_h3_state(modes, rng):
    v = fock.FockVector(modes, 3)
    keys = [(), (0,), (1,), (0, 0), (0, 1), (1, 2), (0, 0, 1), (1, 1, 2)]
    for key in keys:
        re, im = rng.standard_normal(2)
        v.amps[key] = complex(re, im)
    return v


def _suite_monoid(cfg):
    checks = []
    rng = np.random.default_rng(cfg.seed)
    n = min(cfg.n, 24)
    phi = diskmap.SeriesMap([0, 0.8, 0.15])
    psi = diskmap.SeriesMap([0, 0.7, -0.1, 0.05])
    v = _random_h3_state(n, rng)
    lhs = fock.rho1(diskmap.dm_compose(phi, psi, cutoff=4 * n + 4), v)
    rhs = fock.rho1(phi, fock.rho1(psi, v))
    diff = lhs.copy().add(rhs, scale=-1.0).norm()
    checks.append(_check_bound("monoid-triangular-H3", {"N": n}, diff, 1e-9))
    # cocycle law as a matrix identity on trusted degrees
    c_psi = bergman.contraction_functional(psi, n).entries
    c_phi = bergman.contraction_functional(phi, n).entries
    c_comp = bergman.contraction_functional(
        diskmap.dm_compose(phi, psi, cutoff=4 * n + 4), n
    ).entries
    r = bergman.rho_cl_matrix(psi, n).matrix
    resid = np.max(np.abs(c_psi + r.T @ c_phi @ r - c_comp))
    checks.append(_check_bound("contraction-cocycle-law", {"N": n}, float(resid), 1e-9))
    m1, m2 = _general_family()
    diffs = []
    for nn in (12, 24):
        v2 = _random_h3_state(nn, np.random.default_rng(cfg.seed))
        lhs = fock.rho1(diskmap.dm_compose(m1, m2, cutoff=4 * nn + 4), v2)
        rhs = fock.rho1(m1, fock.rho1(m2, v2))
        diffs.append(lhs.copy().add(rhs, scale=-1.0).norm())
    ok = diffs[1] <= max(cfg.conv_factor * diffs[0], 1e-12)
    checks.append(
        {
            "id": "monoid-general-shrinks",
            "params": {"N": [12, 24]},
            "value": float(diffs[1]),
            "expected": f"<= {cfg.conv_factor} * {diffs[0]:.3e}",
            "abs_err": float(diffs[1]),
            "pass": bool(ok),
        }
    )
    return checks


def _suite_covariance(cfg):
    checks = []
    n = min(cfg.n, 24)
    phi1 = diskmap.Affine(0.5, 0.2)
    phi2 = diskmap.Affine(-0.3, 0.2)
    psi1 = diskmap.Affine(0.1, 0.5)
    psi2 = diskmap.Affine(-0.05, 0.6)
    c = bergman.pair_functional(phi1, phi2, n).entries
    lhs = bergman.pair_functional(
        diskmap.dm_compose(phi1, psi1), diskmap.dm_compose(phi2, psi2), n
    ).entries
    r1 = bergman.rho_cl_matrix(psi1, n).matrix
    r2 = bergman.rho_cl_matrix(psi2, n).matrix
    resid = np.max(np.abs(r1.T @ c @ r2 - lhs))
    checks.append(_check_bound("covariance-inner", {"N": n}, float(resid), 1e-9))
    h = diskmap.SeriesMap([0, 0.9, 0.05])
    lhs2 = bergman.pair_functional(
        diskmap.dm_compose(h, phi1, cutoff=4 * n + 4),
        diskmap.dm_compose(h, phi2, cutoff=4 * n + 4),
        n,
    ).entries
    ch = bergman.contraction_functional(h, n).entries
    q1 = bergman.rho_cl_matrix(phi1, n).matrix
    q2 = bergman.rho_cl_matrix(phi2, n).matrix
    resid2 = np.max(np.abs(c + q1.T @ ch @ q2 - lhs2))
    checks.append(_check_bound("covariance-outer", {"N": n}, float(resid2), 1e-9))
    return checks


def _suite_operad(cfg):
    checks = []
    n = min(cfg.n, 20)
    g1 = diskmap.Affine(0.6, 0.15)
    g2 = diskmap.Affine(-0.4, 0.35)
    h1 = diskmap.Affine(0.5, 0.2)
    h2 = diskmap.Affine(-0.3, 0.2)
    comp = [g1, diskmap.dm_compose(g2, h1), diskmap.dm_compose(g2, h2)]
    config_l = diskmap.Configuration(comp)
    e0 = fock.basis_state([1] + [0] * (n - 1), n, 2)
    e1 = fock.basis_state([0, 1] + [0] * (n - 2), n, 2)
    lhs = fock.rho_n(config_l, [e0, e1, e0])
    inner = fock.rho_n(diskmap.Configuration([h1, h2]), [e1, e0])
    outer_in = fock.FockVector(n, inner.particles)
    outer_in.amps = dict(inner.amps)
    rhs = fock.rho_n(diskmap.Configuration([g1, g2]), [e0, outer_in])
    diff = lhs.copy().add(
        fock.FockVector(n, lhs.particles, amps=rhs.amps), scale=-1.0
    ).norm()
    checks.append(_check_bound("operad-affine-H2", {"N": n}, diff, 1e-8))
    return checks


def _suite_trace(cfg):
    rep = fock.dilation_trace(0.5, 20, 20)
    return [
        _check(
            "dilation-trace",
            {"r": 0.5, "N": 20, "P": 20},
            rep.truncated_sum,
            rep.product_ref,
            1e-4,
        )
    ]


def _suite_correspondence(cfg):
    checks = []
    n = min(cfg.n, 40)
    zeta, r, s = 0.5, 0.2, 0.2
    config = diskmap.Configuration([diskmap.Affine(zeta, r), diskmap.Affine(0.0, s)])
    parts = [()] + heisenberg.partitions_up_to(3)
    worst = 0.0
    for kv in parts:
        for kw in parts:
            p_need = len(kv) + len(kw)
            v = heisenberg.partition_state(kv, max(1, len(kv)), 4)
            w = heisenberg.partition_state(kw, max(1, len(kw)), 4)
            lhs = fock.rho_n_normalized(
                config, [heisenberg.psi(v, n, p_need), heisenberg.psi(w, n, p_need)],
                prune=1e-14,
            )
            rhs = heisenberg.vertex_side(v, w, zeta, r, s, n, prune=1e-14)
            diff = lhs.copy().add(
                fock.FockVector(n, lhs.particles, amps=rhs.amps), scale=-1.0
            ).norm()
            worst = max(worst, diff)
    checks.append(
        _check_bound("correspondence-grid-w3", {"N": n, "zeta": zeta}, worst, cfg.abs_tol)
    )
    return checks


def _suite_convergence(cfg):
    checks = []
    v = heisenberg.partition_state([1], 1, 1)
    rep = heisenberg.norm_convergence_profile(v, v, 0.5, terms=30)
    sums = [p for _, _, p in rep.entries]
    monotone = all(b >= a - 1e-15 for a, b in zip(sums, sums[1:]))
    checks.append(_check_bound("profile-ratio", {"zeta": 0.5}, rep.ratio_estimate, 0.3))
    checks.append(
        {
            "id": "profile-monotone",
            "params": {"zeta": 0.5},
            "value": float(monotone),
            "expected": "monotone partial sums",
            "abs_err": 0.0 if monotone else 1.0,
            "pass": bool(monotone),
        }
    )
    return checks


SUITES = {
    "cocycle-identities": _suite_cocycle_identities,
    "monoid": _suite_monoid,
    "covariance": _suite_covariance,
    "operad": _suite_operad,
    "trace": _suite_trace,
    "correspondence": _suite_correspondence,
    "convergence": _suite_convergence,
}


def cmd_verify(args, out_stream):
    if args.suite not in SUITES:
        raise UsageError(
            f"unknown suite {args.suite!r}; known: {', '.join(sorted(SUITES))}"
        )
    cfg = RunConfig(_load_json(args.config) if args.config else None)
    checks = SUITES[args.suite](cfg)
    all_pass = all(c["pass"] for c in checks)
    report = {
        "command": "verify",
        "suite": args.suite,
        "config": cfg.as_dict(),
        "threads": os.environ.get("CE2_THREADS", "1"),
        "checks": checks,
        "pass": all_pass,
    }
    _emit(report, args.format, out_stream)
    return 0 if all_pass else 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ce2",
        description="Truncated 2-disk operad algebra on the Bergman Fock space",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_coc = sub.add_parser("cocycle", help="cocycle kernel report for a map file")
    p_coc.add_argument("map_file")
    p_coc.add_argument("--cutoff", type=int, default=DEFAULTS["N"])
    p_coc.add_argument("--format", choices=("json", "csv"), default="json")
    p_coc.add_argument("--precision", choices=("double", "extended"), default="double")

    p_two = sub.add_parser("twopoint", help="vacuum amplitudes of an n-ary product")
    p_two.add_argument("config_file")
    p_two.add_argument("--inputs", nargs="*", default=[])
    p_two.add_argument("--cutoff", type=int, default=DEFAULTS["N"])
    p_two.add_argument("--particles", type=int, default=DEFAULTS["P"])
    p_two.add_argument("--format", choices=("json", "csv"), default="json")

    p_ver = sub.add_parser("verify", help="run a deterministic check suite")
    p_ver.add_argument("suite")
    p_ver.add_argument("--config", default=None)
    p_ver.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    out = io.StringIO()
    try:
        if args.command == "cocycle":
            code = cmd_cocycle(args, out)
        elif args.command == "twopoint":
            code = cmd_twopoint(args, out)
        else:
            code = cmd_verify(args, out)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except CE2Error as exc:
        sys.stderr.write(f"math error: {exc}\n")
        return 3
    sys.stdout.write(out.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
