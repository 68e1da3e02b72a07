"""Bosonic Fock space over the truncated Bergman space.

States are sparse amplitude tables over occupation multisets: the key
(a_1 <= ... <= a_p) stands for the unit-norm basis vector obtained by
normalizing the symmetrized tensor of e_{a_1}, ..., e_{a_p}.  With
creation operators a+_n (a+_n raises the count of mode n with the usual
sqrt(count+1) weight) the basis vector of occupations nu is
prod_n (a+_n)^{nu_n} |vac> / sqrt(prod_n nu_n!).

All combinatorial constants below (the merge factor kappa, the lift of a
one-body matrix, the pair-annihilation weights) are forced by that
normalization; the test suite validates every one of them against the
brute-force dense symmetrizer before anything else relies on them.

Particle overflow during a merge is dropped and *counted*, never silently
ignored: contractions only lower the particle number, so honestly sized
computations report zero drops and the tests demand exactly that.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations

import numpy as np

from .bergman import BergmanVector, contraction_functional, pair_functional, rho_cl_matrix
from .diskmap import Configuration, dm_conjugate
from .errors import ConfigurationError, DomainError, OracleScaleError, UsageError

_DENSE_MAX_PARTICLES = 4
_DENSE_MAX_MODES = 6


class FockVector:
    """Sparse amplitude table over occupation keys, with cutoffs (N, P)."""

    __slots__ = ("amps", "modes", "particles", "drops", "pruned")

    def __init__(self, modes, particles, amps=None, drops=0, pruned=0.0):
        if modes < 1 or particles < 0:
            raise UsageError("need modes >= 1 and particles >= 0")
        self.modes = modes
        self.particles = particles
        self.amps = {}
        self.drops = drops
        self.pruned = pruned
        if amps:
            for key, amp in amps.items():
                self._accumulate(key, amp)

    def _accumulate(self, key, amp):
        if len(key) > self.particles:
            self.drops += 1
            return
        if key and (key[-1] >= self.modes or key[0] < 0):
            raise UsageError(f"mode index out of range in key {key}")
        if tuple(sorted(key)) != tuple(key):
            raise UsageError(f"occupation key must be sorted: {key}")
        new = self.amps.get(key, 0j) + amp
        if new == 0:
            self.amps.pop(key, None)
        else:
            self.amps[key] = new

    def copy(self):
        out = FockVector(self.modes, self.particles, drops=self.drops, pruned=self.pruned)
        out.amps = dict(self.amps)
        return out

    def scaled(self, lam):
        out = FockVector(self.modes, self.particles, drops=self.drops, pruned=self.pruned)
        out.amps = {k: lam * a for k, a in self.amps.items()}
        return out

    def add(self, other, scale=1.0):
        """In-place accumulation self += scale * other.

        The mode cutoffs must match; the other vector may have a smaller
        particle cutoff.
        """
        if other.modes != self.modes or other.particles > self.particles:
            raise UsageError("Fock cutoff mismatch")
        for key, amp in other.amps.items():
            self._accumulate(key, scale * amp)
        self.drops += other.drops
        self.pruned += other.pruned
        return self

    def vacuum_amplitude(self):
        return self.amps.get((), 0j)

    def norm(self):
        return math.sqrt(sum(abs(a) ** 2 for a in self.amps.values()))

    def max_particles_present(self):
        return max((len(k) for k in self.amps), default=0)

    def sector(self, p):
        out = FockVector(self.modes, self.particles)
        out.amps = {k: a for k, a in self.amps.items() if len(k) == p}
        return out

    def canonical_items(self):
        """(occupation list, amplitude) pairs in graded-lexicographic order."""
        for key in sorted(self.amps, key=lambda k: (len(k), k)):
            yield occupations_from_key(key, self.modes), self.amps[key]

    def __repr__(self):
        return (
            f"FockVector(N={self.modes}, P={self.particles}, "
            f"terms={len(self.amps)}, drops={self.drops})"
        )


def fock_inner(u, v):
    """Hermitian inner product, conjugate-linear in the first slot."""
    if u.modes != v.modes:
        raise UsageError("mode cutoff mismatch")
    acc = 0j
    for key, amp in u.amps.items():
        other = v.amps.get(key)
        if other is not None:
            acc += amp.conjugate() * other
    return acc


def vacuum(modes, particles):
    out = FockVector(modes, particles)
    out.amps[()] = 1.0 + 0j
    return out


def key_from_occupations(nu):
    key = []
    for mode, count in enumerate(nu):
        key.extend([mode] * count)
    return tuple(key)


def occupations_from_key(key, modes):
    nu = [0] * modes
    for mode in key:
        nu[mode] += 1
    return nu


def basis_state(nu, modes, particles):
    """Unit basis vector for the given occupation list."""
    key = key_from_occupations(nu)
    out = FockVector(modes, particles)
    out._accumulate(key, 1.0 + 0j)
    if not out.amps and key:
        raise UsageError("basis state exceeds the particle cutoff")
    return out


def from_bergman(v, particles=1):
    """Embed a one-particle vector; key (n,) carries amplitude v_n."""
    out = FockVector(v.cutoff, particles)
    for n, amp in enumerate(v.coeffs):
        if amp != 0:
            out.amps[(n,)] = complex(amp)
    return out


def _create(key, mode):
    """Apply a+_mode to a basis key; returns (new_key, sqrt(count+1))."""
    count = key.count(mode)
    new = list(key)
    insort(new, mode)
    return tuple(new), math.sqrt(count + 1)


def _create_with_vector(table, column, modes, prune=0.0):
    """Apply sum_n column[n] a+_n to a key->amp table; returns (table, pruned)."""
    out = {}
    pruned = 0.0
    for key, amp in table.items():
        for n in range(modes):
            c = column[n]
            if c == 0:
                continue
            new_amp = amp * c
            if prune and abs(new_amp) <= prune:
                pruned += abs(new_amp)
                continue
            new_key, w = _create(key, n)
            out[new_key] = out.get(new_key, 0j) + new_amp * w
    return out, pruned


# ---------------------------------------------------------------------------
# dense oracle
# ---------------------------------------------------------------------------


def dense_symmetrize(vectors):
    """Brute-force symmetrizer: average the full tensor over permutations.

    Returns the orthogonal projection of v_1 x ... x v_p onto the symmetric
    subspace, re-expressed in occupation coordinates.  Restricted to
    p <= 4, N <= 6; this is the oracle every occupation-basis constant is
    validated against.
    """
    p = len(vectors)
    if p == 0:
        raise UsageError("dense symmetrizer needs at least one vector")
    modes = vectors[0].cutoff
    if p > _DENSE_MAX_PARTICLES or modes > _DENSE_MAX_MODES:
        raise OracleScaleError("dense symmetrizer limited to p <= 4, N <= 6")
    if any(v.cutoff != modes for v in vectors):
        raise UsageError("cutoff mismatch")
    tensor = np.zeros((modes,) * p, dtype=complex)
    for perm in permutations(range(p)):
        outer = vectors[perm[0]].coeffs
        for i in perm[1:]:
            outer = np.multiply.outer(outer, vectors[i].coeffs)
        tensor += outer
    tensor /= math.factorial(p)
    out = FockVector(modes, p)
    for key in combinations_with_replacement(range(modes), p):
        nu_fact = 1
        for mode in set(key):
            nu_fact *= math.factorial(key.count(mode))
        amp = math.sqrt(math.factorial(p) / nu_fact) * tensor[key]
        if amp != 0:
            out.amps[key] = complex(amp)
    return out


# ---------------------------------------------------------------------------
# occupation-basis operators
# ---------------------------------------------------------------------------


def _merge_factor(key_a, key_b):
    """kappa(nu, mu) = sqrt(p! q!/(p+q)! * prod_i C(nu_i + mu_i, nu_i))."""
    p, q = len(key_a), len(key_b)
    fac = math.factorial(p) * math.factorial(q) / math.factorial(p + q)
    for mode in set(key_a):
        fac *= math.comb(key_a.count(mode) + key_b.count(mode), key_a.count(mode))
    return math.sqrt(fac)


def merge(u, w, particles=None):
    """Symmetrized product Sym^p x Sym^q -> Sym^{p+q} in occupation coordinates.

    Basis states combine as e_nu x e_mu |-> kappa(nu, mu) e_{nu+mu}.  The
    output particle cutoff defaults to the lossless sum of the operands';
    passing a smaller cap drops the overflowing terms and counts them.
    """
    if u.modes != w.modes:
        raise UsageError("mode cutoff mismatch")
    if particles is None:
        particles = u.particles + w.particles
    out = FockVector(u.modes, particles)
    out.drops = u.drops + w.drops
    out.pruned = u.pruned + w.pruned
    for ka, aa in u.amps.items():
        for kb, ab in w.amps.items():
            if len(ka) + len(kb) > particles:
                out.drops += 1
                continue
            merged = tuple(sorted(ka + kb))
            amp = aa * ab * _merge_factor(ka, kb)
            out._accumulate(merged, amp)
    return out


def lift_one_body(m, v, prune=0.0):
    """Apply the p-fold tensor power of a one-body matrix, sector by sector.

    On a basis key the action is (1/sqrt(prod nu_i!)) * prod_k
    (sum_n M[n, a_k] a+_n) applied to the vacuum: each particle is re-created
    with its matrix column.  ``prune`` drops intermediate amplitudes at or
    below the given magnitude (accumulated into ``pruned``); 0 disables it.
    """
    matrix = m.matrix if hasattr(m, "matrix") else np.asarray(m, dtype=complex)
    if matrix.shape[0] != v.modes:
        raise UsageError("matrix / vector cutoff mismatch")
    out = FockVector(v.modes, v.particles, drops=v.drops, pruned=v.pruned)
    columns = [matrix[:, a] for a in range(v.modes)]
    for key, amp in v.amps.items():
        nu_fact = 1
        for mode in set(key):
            nu_fact *= math.factorial(key.count(mode))
        table = {(): amp / math.sqrt(nu_fact)}
        for a in key:
            table, lost = _create_with_vector(table, columns[a], v.modes, prune)
            out.pruned += lost
        for new_key, new_amp in table.items():
            out._accumulate(new_key, new_amp)
    return out


def pair_annihilate(c, v):
    """One-slot contraction: remove two particles against a symmetric kernel.

    On a p-particle basis state the amplitude flowing to nu - delta_a -
    delta_b is sqrt(p(p-1)) * sqrt(nu_a nu_b) * c_{a,b} for a < b and
    sqrt(p(p-1)) * sqrt(nu_a(nu_a - 1))/2 * c_{a,a} on the diagonal;
    vanishes on the vacuum and one-particle states.
    """
    entries = c.entries if hasattr(c, "entries") else np.asarray(c, dtype=complex)
    if entries.shape[0] != v.modes:
        raise UsageError("kernel / vector cutoff mismatch")
    out = FockVector(v.modes, v.particles, drops=v.drops, pruned=v.pruned)
    for key, amp in v.amps.items():
        p = len(key)
        if p < 2:
            continue
        root = math.sqrt(p * (p - 1))
        distinct = sorted(set(key))
        for i, a in enumerate(distinct):
            na = key.count(a)
            if na >= 2:
                coef = root * math.sqrt(na * (na - 1)) / 2.0 * entries[a, a]
                if coef != 0:
                    reduced = _remove_two(key, a, a)
                    out._accumulate(reduced, amp * coef)
            for b in distinct[i + 1 :]:
                nb = key.count(b)
                coef = root * math.sqrt(na * nb) * entries[a, b]
                if coef != 0:
                    reduced = _remove_two(key, a, b)
                    out._accumulate(reduced, amp * coef)
    return out


def _remove_two(key, a, b):
    rem = list(key)
    rem.remove(a)
    rem.remove(b)
    return tuple(rem)


def exp_pair_annihilate(c, v):
    """exp of the one-slot contraction: finite sum, degree -2 per power."""
    total = v.copy()
    cur = v
    k = 1
    while True:
        cur = pair_annihilate(c, cur)
        if not cur.amps:
            break
        cur = cur.scaled(1.0 / k)
        total.add(cur)
        k += 1
    return total


class Rho1:
    """The quantum action of one map at a fixed cutoff, with caching.

    rho(phi) = lift(rho_cl(phi)) o exp(contraction of F_phi); applying it
    key by key lets repeated joint-state slots reuse work.
    """

    def __init__(self, phi, modes, prune=0.0):
        self.phi = phi
        self.modes = modes
        self.prune = prune
        self.matrix = rho_cl_matrix(phi, modes)
        self.contraction = contraction_functional(phi, modes)
        self._key_cache = {}

    def apply(self, v):
        out = FockVector(v.modes, v.particles, drops=v.drops, pruned=v.pruned)
        for key, amp in v.amps.items():
            img = self._apply_key(key, v.particles)
            out.add(img, scale=amp)
        return out

    def _apply_key(self, key, particles):
        hit = self._key_cache.get(key)
        if hit is None or hit.particles < particles:
            single = FockVector(self.modes, max(particles, len(key)))
            single.amps[key] = 1.0 + 0j
            hit = lift_one_body(
                self.matrix, exp_pair_annihilate(self.contraction, single), self.prune
            )
            self._key_cache[key] = hit
        if hit.particles != particles:
            resized = FockVector(self.modes, particles)
            for k, a in hit.amps.items():
                resized._accumulate(k, a)
            resized.pruned = hit.pruned
            return resized
        return hit


_rho1_cache = {}


def get_rho1(phi, modes, prune=0.0):
    """Cached Rho1 operators; key-level images persist across products."""
    from .diskmap import map_key

    key = (map_key(phi), modes, prune)
    op = _rho1_cache.get(key)
    if op is None:
        op = Rho1(phi, modes, prune)
        _rho1_cache[key] = op
    return op


def rho1(phi, v, prune=0.0):
    """Quantum monoid action of a single map on a Fock vector."""
    return get_rho1(phi, v.modes, prune).apply(v)


# ---------------------------------------------------------------------------
# n-ary operadic products
# ---------------------------------------------------------------------------


def _cross_contract(entries, joint, i, j):
    """Cross-slot contraction on a joint table: remove one particle from
    slot i and one from slot j against the kernel c_{a,b} (slot-i mode first).

    On basis keys the weight is sqrt(p q nu_a mu_b).
    """
    out = {}
    for keys, amp in joint.items():
        ka, kb = keys[i], keys[j]
        p, q = len(ka), len(kb)
        if p == 0 or q == 0:
            continue
        root = math.sqrt(p * q)
        for a in sorted(set(ka)):
            na = ka.count(a)
            ra = list(ka)
            ra.remove(a)
            ra = tuple(ra)
            for b in sorted(set(kb)):
                coef = entries[a, b]
                if coef == 0:
                    continue
                nb = kb.count(b)
                rb = list(kb)
                rb.remove(b)
                new = list(keys)
                new[i] = ra
                new[j] = tuple(rb)
                new = tuple(new)
                w = amp * root * math.sqrt(na * nb) * coef
                out[new] = out.get(new, 0j) + w
    return out


def rho_n(config, inputs, prune=0.0):
    """The n-ary product: exp of all cross contractions, then the one-map
    action slot by slot, then the symmetrized merge of all slots.

    The empty configuration returns the vacuum.  The configuration must be
    certified (or explicitly asserted) square-integrable.
    """
    if not isinstance(config, Configuration):
        raise UsageError("expected a Configuration")
    if len(config) != len(inputs):
        raise UsageError(f"arity mismatch: {len(config)} maps, {len(inputs)} inputs")
    if len(config) > 0 and not config.hs_ok:
        raise ConfigurationError(
            "configuration is neither certified nor asserted square-integrable"
        )
    n_slots = len(config)
    if n_slots == 0:
        return vacuum(1, 0)
    modes = inputs[0].modes
    if any(v.modes != modes for v in inputs):
        raise UsageError("all inputs must share the mode cutoff")
    p_out = sum(v.max_particles_present() for v in inputs)
    drops = sum(v.drops for v in inputs)
    pruned = sum(v.pruned for v in inputs)

    joint = {(): 1.0 + 0j}
    for v in inputs:
        new = {}
        for keys, amp in joint.items():
            for key, a in v.amps.items():
                new[keys + (key,)] = amp * a
        joint = new

    kernels = {
        (i, j): pair_functional(config.maps[i], config.maps[j], modes).entries
        for i in range(n_slots)
        for j in range(i + 1, n_slots)
    }
    total = dict(joint)
    cur = joint
    k = 1
    while cur:
        nxt = {}
        for (i, j), entries in kernels.items():
            part = _cross_contract(entries, cur, i, j)
            for keys, amp in part.items():
                nxt[keys] = nxt.get(keys, 0j) + amp
        cur = {keys: amp / k for keys, amp in nxt.items() if amp != 0}
        for keys, amp in cur.items():
            total[keys] = total.get(keys, 0j) + amp
        k += 1

    ops = [get_rho1(g, modes, prune) for g in config.maps]
    out = FockVector(modes, p_out, drops=drops)
    for keys, amp in total.items():
        acc = vacuum(modes, p_out).scaled(amp)
        for i, key in enumerate(keys):
            img = ops[i]._apply_key(key, p_out)
            pruned += img.pruned
            acc = merge(acc, img, particles=p_out)
        acc.pruned = 0.0
        out.add(acc)
    out.pruned = pruned
    return out


def normalization(v, inverse=False):
    """The sector scaling N = sqrt(p!) per p-particle sector (or its inverse)."""
    out = FockVector(v.modes, v.particles, drops=v.drops, pruned=v.pruned)
    for key, amp in v.amps.items():
        fac = math.sqrt(math.factorial(len(key)))
        out.amps[key] = amp / fac if inverse else amp * fac
    return out


def rho_n_normalized(config, inputs, prune=0.0):
    """The normalized product N o rho_n o (N^{-1} x ... x N^{-1})."""
    scaled = [normalization(v, inverse=True) for v in inputs]
    return normalization(rho_n(config, scaled, prune))


def twist_J(config):
    """The conjugate configuration; composing rho_n with it gives the
    complex-conjugate algebra structure."""
    return Configuration(
        [dm_conjugate(m) for m in config.maps],
        certify_hs=config.certified_hs,
        assert_hs=config.asserted_hs,
    )


# ---------------------------------------------------------------------------
# dilation trace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceReport:
    truncated_sum: float
    product_ref: float
    gap: float


def dilation_trace(r, modes, particles):
    """Trace of the dilation action against the partition generating function.

    The truncated sum runs over occupation states with mode index < N and
    at most P particles, each contributing r^{sum (i+1) nu_i}; the
    reference value is prod_{n=1..N} (1 - r^n)^{-1}, the same sum without
    the particle bound.  Their gap is returned for tail-bound checks.
    """
    if not 0 < r < 1:
        raise DomainError("dilation trace needs 0 < r < 1")
    # dp[p] = sum over states with exactly p particles of r^{weight}
    dp = [0.0] * (particles + 1)
    dp[0] = 1.0
    for mode_weight in range(1, modes + 1):
        x = r**mode_weight
        new = [0.0] * (particles + 1)
        for p in range(particles + 1):
            acc = 0.0
            xk = 1.0
            for k in range(p + 1):
                acc += dp[p - k] * xk
                xk *= x
            new[p] = acc
        dp = new
    truncated = float(sum(dp))
    product = 1.0
    for k in range(1, modes + 1):
        product /= 1.0 - r**k
    return TraceReport(truncated, product, product - truncated)


def fock_to_obj(v):
    """Canonical JSON object: amplitudes in graded-lex occupation order,
    plus cutoffs and the drop count."""
    return {
        "cutoffs": {"modes": v.modes, "particles": v.particles},
        "drops": v.drops,
        "amps": [
            {"nu": nu, "amp": [amp.real, amp.imag]} for nu, amp in v.canonical_items()
        ],
    }


def fock_from_obj(obj, modes=None, particles=None):
    """Rebuild a vector from its JSON object, optionally re-embedding it at
    different cutoffs (occupied modes must fit the requested mode count)."""
    try:
        own_modes = int(obj["cutoffs"]["modes"])
        own_particles = int(obj["cutoffs"]["particles"])
        modes = own_modes if modes is None else modes
        particles = own_particles if particles is None else particles
        out = FockVector(modes, particles, drops=int(obj.get("drops", 0)))
        for rec in obj["amps"]:
            nu = [int(x) for x in rec["nu"]]
            if len(nu) != own_modes:
                raise UsageError(f"occupation list must have length {own_modes}")
            key = key_from_occupations(nu)
            if key and key[-1] >= modes:
                raise UsageError(
                    f"occupied mode {key[-1]} does not fit cutoff {modes}"
                )
            out._accumulate(key, complex(rec["amp"][0], rec["amp"][1]))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise UsageError(f"malformed Fock object: {exc}") from exc
    return out


def sampled_rho1_norm(phi, modes, sector, samples=10, seed=0):
    """Sampled Rayleigh quotients of rho(phi) on the k-particle block.

    Reported evidence only: the truncated block norm; no claim is made
    about the full operator.
    """
    rng = np.random.default_rng(seed)
    op = Rho1(phi, modes)
    keys = list(combinations_with_replacement(range(min(modes, 6)), sector))
    worst = 0.0
    for _ in range(samples):
        v = FockVector(modes, sector)
        for key in keys:
            re, im = rng.standard_normal(2)
            v.amps[key] = complex(re, im)
        worst = max(worst, op.apply(v).norm() / v.norm())
    return worst
