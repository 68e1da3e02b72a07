"""The rank-one free-boson vertex algebra, built independently of the Fock
module so the two sides can cross-check each other.

Basis states are partitions: the key (k_1 >= ... >= k_p >= 1) stands for
h(-k_1)...h(-k_p)|vac>.  The mode algebra is [h(n), h(m)] = n delta_{n+m,0}
with h(n)|vac> = 0 for n >= 0; the stress tensor modes L(n) are the usual
normally-ordered quadratic sums and satisfy the Virasoro bracket at
central charge one.  The positive inner product is diagonal on partitions:
a depth-k mode of multiplicity m contributes m! * k^m.

Amplitudes are duck-typed: ``fractions.Fraction`` amplitudes keep every
mode and Virasoro computation exact (all structure constants are
rational), while complex amplitudes serve the numerical bridge maps.  The
bridge into the Bergman Fock space sends depth k to mode index k - 1 and
scales so that the map is an isometry; the vertex-operator side of the
correspondence is the normally-ordered subset/injection expansion, not a
general vertex-algebra engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

from .bergman import kernel_derivative
from .errors import CutoffError, DomainError, UsageError
from .fock import FockVector, _create_with_vector


def _conj(x):
    return x.conjugate() if isinstance(x, complex) else x


class HeisenbergVector:
    """Sparse amplitude table over partition keys, with cutoffs (P, W)."""

    __slots__ = ("amps", "particles", "weight", "drops")

    def __init__(self, particles, weight, amps=None, drops=0):
        if particles < 0 or weight < 0:
            raise UsageError("cutoffs must be nonnegative")
        self.particles = particles
        self.weight = weight
        self.amps = {}
        self.drops = drops
        if amps:
            for key, amp in amps.items():
                self._accumulate(key, amp)

    def _accumulate(self, key, amp):
        if list(key) != sorted(key, reverse=True) or (key and key[-1] < 1):
            raise UsageError(f"partition key must be weakly decreasing >= 1: {key}")
        if len(key) > self.particles or sum(key) > self.weight:
            self.drops += 1
            return
        new = self.amps.get(key, 0) + amp
        if new == 0:
            self.amps.pop(key, None)
        else:
            self.amps[key] = new

    def copy(self):
        out = HeisenbergVector(self.particles, self.weight, drops=self.drops)
        out.amps = dict(self.amps)
        return out

    def scaled(self, lam):
        out = HeisenbergVector(self.particles, self.weight, drops=self.drops)
        out.amps = {k: lam * a for k, a in self.amps.items()}
        return out

    def add(self, other, scale=1):
        if other.particles > self.particles or other.weight > self.weight:
            raise UsageError("cutoff mismatch in accumulation")
        for key, amp in other.amps.items():
            self._accumulate(key, scale * amp)
        self.drops += other.drops
        return self

    def max_weight_present(self):
        return max((sum(k) for k in self.amps), default=0)

    def canonical_items(self):
        for key in sorted(self.amps, key=lambda k: (sum(k), len(k), k)):
            yield key, self.amps[key]

    def __repr__(self):
        return (
            f"HeisenbergVector(P={self.particles}, W={self.weight}, "
            f"terms={len(self.amps)}, drops={self.drops})"
        )


def vacuum_state(particles, weight, exact=False):
    out = HeisenbergVector(particles, weight)
    out.amps[()] = Fraction(1) if exact else 1.0 + 0j
    return out


def partition_state(ks, particles, weight, exact=False):
    """Basis state h(-k_1)...h(-k_p)|vac> for the given depths."""
    key = tuple(sorted(ks, reverse=True))
    out = HeisenbergVector(particles, weight)
    out._accumulate(key, Fraction(1) if exact else 1.0 + 0j)
    if key and not out.amps:
        raise CutoffError(f"partition {key} exceeds cutoffs")
    return out


def partitions_up_to(max_weight):
    """All partition keys of weight 1..max_weight, graded order."""
    out = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for k in range(min(remaining, largest), 0, -1):
            rec(remaining - k, k, prefix + [k])

    for w in range(1, max_weight + 1):
        rec(w, w, [])
    return out


def diagonal_norm_sq(key):
    """Exact integer ||h(-k_1)...h(-k_p)|vac>||^2 = prod_d m_d! d^{m_d}."""
    acc = 1
    for depth in set(key):
        m = key.count(depth)
        acc *= math.factorial(m) * depth**m
    return acc


def inner_M(u, v):
    """The positive form: diagonal on partitions with integer weights;
    conjugate-linear in the first slot."""
    acc = 0
    for key, amp in u.amps.items():
        other = v.amps.get(key)
        if other is not None:
            acc += _conj(amp) * other * diagonal_norm_sq(key)
    return acc


def theta(v):
    """The anti-linear involution: (-1)^p on p-particle states."""
    out = HeisenbergVector(v.particles, v.weight, drops=v.drops)
    out.amps = {k: (-1) ** len(k) * _conj(a) for k, a in v.amps.items()}
    return out


def mode_h(n, v):
    """The mode h(n): creation of depth -n for n < 0, annihilation with
    commutator weight n for n > 0, zero for n = 0."""
    out = HeisenbergVector(v.particles, v.weight)
    if n == 0:
        return out
    if n < 0:
        depth = -n
        for key, amp in v.amps.items():
            new = tuple(sorted(key + (depth,), reverse=True))
            out._accumulate(new, amp)
        return out
    for key, amp in v.amps.items():
        mult = key.count(n)
        if mult:
            rem = list(key)
            rem.remove(n)
            out._accumulate(tuple(rem), n * mult * amp)
    return out


def _half_of(amp):
    return Fraction(1, 2) * amp if isinstance(amp, Fraction) else 0.5 * amp


def virasoro_L(n, v):
    """L(n) = (1/2)(sum_{k>=0} h(n-k)h(k) + sum_{k<0} h(k)h(n-k)), truncated
    by the vector's cutoffs.  Exact on Fraction amplitudes when no drop
    occurs; preserves the particle number for n in {-1, 0, 1} and shifts it
    by -2 (n >= 2) or +2 (n <= -2) otherwise.
    """
    wmax = v.max_weight_present()
    out = HeisenbergVector(v.particles, v.weight)
    for k in range(1, wmax + 1):  # k = 0 contributes h(n)h(0) = 0
        tmp = mode_h(k, v)
        if tmp.amps:
            out.add(mode_h(n - k, tmp))
    hi = min(-1, n - 1)
    for k in range(n - wmax, hi + 1):  # h(k) h(n-k) with n-k >= 1
        if n - k < 1:
            continue
        tmp = mode_h(n - k, v)
        if tmp.amps:
            out.add(mode_h(k, tmp))
    for k in range(n + 1, 0):  # both modes creating (n <= -2)
        if n - k >= 0:
            continue
        tmp = mode_h(n - k, v)
        out.add(mode_h(k, tmp))
    out.amps = {k: _half_of(a) for k, a in out.amps.items()}
    return out


def scale_L0(t, v):
    """The grading scale t^{L(0)}: multiply each amplitude by t^{weight}."""
    if t <= 0:
        raise DomainError("grading scale needs t > 0")
    out = HeisenbergVector(v.particles, v.weight, drops=v.drops)
    out.amps = {k: (t ** sum(k)) * a for k, a in v.amps.items()}
    return out


# ---------------------------------------------------------------------------
# the bridge to the Bergman Fock space
# ---------------------------------------------------------------------------


def psi_amplitude_sq(key):
    """Exact squared bridge amplitude of a partition: prod m_d! d^{m_d}."""
    return diagonal_norm_sq(key)


def psi(v, modes, particles=None):
    """The isometric bridge: depth k maps to Bergman mode k-1, and the
    partition basis state maps to sqrt(prod m_d! d^{m_d}) times the
    occupation basis state, which matches the partition's norm exactly.
    """
    if particles is None:
        particles = max(v.particles, max((len(k) for k in v.amps), default=0))
    out = FockVector(modes, particles, drops=v.drops)
    for key, amp in v.amps.items():
        if key and key[0] > modes:
            raise CutoffError(f"depth {key[0]} exceeds mode cutoff {modes}")
        fock_key = tuple(sorted(d - 1 for d in key))
        out._accumulate(fock_key, complex(amp) * math.sqrt(diagonal_norm_sq(key)))
    return out


def _c_coefficient(zeta, i, j):
    """C_zeta^{i,j} = (-1)^i (i+j+1)!/(i! j!) zeta^{-i-j-2}."""
    return (-1) ** i * math.comb(i + j, i) * (i + j + 1) * zeta ** (-i - j - 2)


def vertex_side(v, w, zeta, r, s, modes, prune=0.0):
    """The vertex-operator product bridged into Fock coordinates.

    Computes the image of Y(r^{L(0)} v, z) s^{L(0)} w at z = zeta through
    the normally-ordered expansion: a sum over subsets S of v's modes and
    injections into w's modes, each contraction contributing C_zeta^{i,j},
    the surviving v-modes becoming derivative kernels (1/i!) d^i E_zeta and
    the surviving w-modes staying as (j+1) z^j.  Linear in both arguments.
    """
    if zeta == 0:
        raise DomainError("vertex side is singular at zeta = 0")
    if abs(zeta) >= 1:
        raise DomainError("insertion point needs |zeta| < 1")
    zeta = complex(zeta)
    max_p = max(
        (len(kv) + len(kw) for kv in v.amps for kw in w.amps), default=0
    )
    out = FockVector(modes, max_p)
    kernels = {}

    def kernel_column(i):
        col = kernels.get(i)
        if col is None:
            col = kernel_derivative(zeta, i, modes).coeffs / math.factorial(i)
            kernels[i] = col
        return col

    h_columns = {}

    def h_column(j):
        col = h_columns.get(j)
        if col is None:
            col = np.zeros(modes, dtype=complex)
            col[j] = math.sqrt(j + 1)
            h_columns[j] = col
        return col

    for kv, av in v.amps.items():
        ilist = [d - 1 for d in kv]
        for kw, aw in w.amps.items():
            jlist = [d - 1 for d in kw]
            n, m = len(ilist), len(jlist)
            base = complex(av) * complex(aw) * r ** sum(kv) * s ** sum(kw)
            for size in range(0, min(n, m) + 1):
                for subset in combinations(range(n), size):
                    for image in permutations(range(m), size):
                        coef = base
                        for pos, tgt in zip(subset, image):
                            coef *= _c_coefficient(zeta, ilist[pos], jlist[tgt])
                        table = {(): coef}
                        for pos in range(n):
                            if pos not in subset:
                                table, _ = _create_with_vector(
                                    table, kernel_column(ilist[pos]), modes, prune
                                )
                        used = set(image)
                        for tgt in range(m):
                            if tgt not in used:
                                table, _ = _create_with_vector(
                                    table, h_column(jlist[tgt]), modes, prune
                                )
                        for key, amp in table.items():
                            out._accumulate(key, amp)
    return out


@dataclass(frozen=True)
class ProfileReport:
    entries: list  # (mode index n, term, partial sum)
    ratio_estimate: float


def norm_convergence_profile(v, w, zeta, terms=30):
    """Partial sums of sum_n ||v(n) w||^2 |zeta|^{-2n-2}.

    Supported generators: v a single-partition one-particle state, i.e. a
    multiple of h(-k)|vac> = (1/(k-1)!) L(-1)^{k-1} h(-1)|vac>, whose modes
    are scalar multiples of plain h-modes.  General quasi-primary
    decompositions are out of scope and rejected.
    """
    if not 0 < abs(zeta) < 1:
        raise DomainError("profile needs 0 < |zeta| < 1")
    if len(v.amps) != 1:
        raise NotImplementedError("profile supports single-generator v only")
    (kv, av), = v.amps.items()
    if len(kv) != 1:
        raise NotImplementedError("profile supports one-particle v only")
    shift = kv[0] - 1  # v = av * (1/shift!) L(-1)^shift h(-1)|vac>
    wmax = w.max_weight_present()
    work = HeisenbergVector(w.particles + 1, w.weight + shift + terms + 2)
    for key, amp in w.amps.items():
        work._accumulate(key, complex(amp))
    n_max = shift + wmax
    entries = []
    total = 0.0
    for n in range(n_max, n_max - terms, -1):
        # v(n) = av * (-1)^shift * C(n, shift) * h(n - shift)
        c = av
        for t in range(1, shift + 1):
            c = c * (n - shift + t)
        c = complex(c) * (-1) ** shift / math.factorial(shift)
        img = mode_h(n - shift, work)
        norm_sq = abs(c) ** 2 * abs(inner_M(img, img))
        term = norm_sq * abs(zeta) ** (-2 * n - 2)
        total += term
        entries.append((n, term, total))
    positive = [t for _, t, _ in entries if t > 0]
    tail = positive[-max(4, len(positive) // 3):]
    if len(tail) >= 2 and tail[0] > 0:
        ratio = (tail[-1] / tail[0]) ** (1.0 / (len(tail) - 1))
    else:
        ratio = 0.0
    return ProfileReport(entries, float(ratio))


# --- serialization ----------------------------------------------------------


def heisenberg_to_obj(v):
    """Canonical JSON object: partition amplitudes plus cutoffs."""
    return {
        "cutoffs": {"particles": v.particles, "weight": v.weight},
        "amps": [
            {"partition": list(key), "amp": [complex(a).real, complex(a).imag]}
            for key, a in v.canonical_items()
        ],
    }


def heisenberg_from_obj(obj, particles=None, weight=None):
    try:
        particles = int(obj["cutoffs"]["particles"]) if particles is None else particles
        weight = int(obj["cutoffs"]["weight"]) if weight is None else weight
        out = HeisenbergVector(particles, weight)
        for rec in obj["amps"]:
            key = tuple(int(k) for k in rec["partition"])
            out._accumulate(key, complex(rec["amp"][0], rec["amp"][1]))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise UsageError(f"malformed state object: {exc}") from exc
    return out
