"""Exact generator action on polynomial observables up to degree 4.

The collision substitution followed by the sphere/Gaussian moment tables
gives the adjoint generators as linear maps on finite polynomial spaces.
Energies are carried in temperature units: e = (1/3n) sum ||v_i||^2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np
from scipy.linalg import expm

from .jump import GeneratorSpec
from .polynomials import MAX_DEGREE, Polynomial

OMEGA = "om"
VIRTUAL = "w"


class GeneratorClosureError(ValueError):
    """Applying the generator left the requested span."""

    def __init__(self, residual: Polynomial):
        self.residual = residual
        super().__init__(f"generator image leaves the span; residual {residual!r}")


def _frac(x):
    if isinstance(x, Rational):
        return Fraction(x)
    f = Fraction(x).limit_denominator(10 ** 9)
    if float(f) == float(x):
        return f
    return x


def _dfact(n: int):
    # (n)!! for odd n >= -1
    out = Fraction(1)
    k = n
    while k > 1:
        out *= k
        k -= 2
    return out


def sphere_moment(p: int, q: int, r: int) -> Fraction:
    """Moment of omega_x^p omega_y^q omega_z^r under uniform measure on S^2."""
    if p % 2 or q % 2 or r % 2:
        return Fraction(0)
    k = (p + q + r) // 2
    den = Fraction(1)
    for j in range(k):
        den *= 3 + 2 * j
    return _dfact(p - 1) * _dfact(q - 1) * _dfact(r - 1) / den


def _integrate_block(poly: Polynomial, block: str, moment_fn) -> Polynomial:
    """Integrate out all variables of ``block`` using per-monomial moments."""
    out = {}
    for mono, c in poly.terms.items():
        exps = [0, 0, 0]
        rest = []
        for var, e in mono:
            if var[0] == block:
                exps[var[2]] += e
            else:
                rest.append((var, e))
        w = moment_fn(exps)
        if w == 0:
            continue
        key = tuple(sorted(rest))
        s = out.get(key, 0) + c * w
        if s == 0:
            out.pop(key, None)
        else:
            out[key] = s
    p = Polynomial()
    p.terms = out
    return p


def _integrate_omega(poly: Polynomial) -> Polynomial:
    return _integrate_block(poly, OMEGA, lambda e: sphere_moment(*e))


def _integrate_gaussian(poly: Polynomial, T) -> Polynomial:
    def mom(exps):
        out = Fraction(1) if isinstance(T, Rational) else 1.0
        for e in exps:
            if e % 2:
                return 0
            out = out * _dfact(e - 1) * (T ** (e // 2))
        return out

    return _integrate_block(poly, VIRTUAL, mom)


def _star_factors(slot_a, slot_b):
    """Post-collision coordinate polynomials for the two colliding slots."""
    om = [Polynomial.variable((OMEGA, 0, a)) for a in range(3)]
    va = [Polynomial.variable((slot_a[0], slot_a[1], a)) for a in range(3)]
    vb = [Polynomial.variable((slot_b[0], slot_b[1], a)) for a in range(3)]
    proj = Polynomial()
    for b in range(3):
        proj = proj + (va[b] - vb[b]) * om[b]
    star_a = [va[a] - proj * om[a] for a in range(3)]
    star_b = [vb[a] + proj * om[a] for a in range(3)]
    return star_a, star_b


def _touching(poly: Polynomial, slots) -> Polynomial:
    t = {m: c for m, c in poly.terms.items()
         if any((v[0], v[1]) in slots for v, _ in m)}
    p = Polynomial()
    p.terms = t
    return p


def _substituted(poly: Polynomial, subs) -> Polynomial:
    """Replace slot variables by their post-collision polynomials."""
    out = Polynomial()
    for mono, c in poly.terms.items():
        q = Polynomial.constant(c)
        for var, e in mono:
            rep = subs.get(var)
            if rep is None:
                q = q * Polynomial.variable(var, e)
            else:
                q = q * rep ** e
        out = out + q
    return out


def sphere_average_pair(p: Polynomial, slot_i, slot_j) -> Polynomial:
    """Average p over the collision of the pair (slot_i, slot_j).

    Slots are (block, particle) pairs; plain ints refer to system
    particles.  Degree never increases.
    """
    slot_i = ("S", slot_i) if isinstance(slot_i, int) else tuple(slot_i)
    slot_j = ("S", slot_j) if isinstance(slot_j, int) else tuple(slot_j)
    if p.degree() > MAX_DEGREE:
        raise ValueError("degree > 4 not supported")
    touch = _touching(p, (slot_i, slot_j))
    if touch.is_zero():
        return p
    rest = p - touch
    star_a, star_b = _star_factors(slot_i, slot_j)
    subs = {}
    for a in range(3):
        subs[(slot_i[0], slot_i[1], a)] = star_a[a]
        subs[(slot_j[0], slot_j[1], a)] = star_b[a]
    avg = _integrate_omega(_substituted(touch, subs))
    return rest + avg


def _pair_deviation(p: Polynomial, slot_a, slot_b) -> Polynomial:
    touch = _touching(p, (slot_a, slot_b))
    if touch.is_zero():
        return Polynomial()
    star_a, star_b = _star_factors(slot_a, slot_b)
    subs = {}
    for a in range(3):
        subs[(slot_a[0], slot_a[1], a)] = star_a[a]
        subs[(slot_b[0], slot_b[1], a)] = star_b[a]
    avg = _integrate_omega(_substituted(touch, subs))
    return avg - touch


def _thermostat_deviation(p: Polynomial, slot, T) -> Polynomial:
    touch = _touching(p, (slot,))
    if touch.is_zero():
        return Polynomial()
    star_a, _ = _star_factors(slot, (VIRTUAL, 0))
    subs = {(slot[0], slot[1], a): star_a[a] for a in range(3)}
    avg = _integrate_gaussian(_integrate_omega(_substituted(touch, subs)), T)
    return avg - touch


def apply_generator(spec: GeneratorSpec, p: Polynomial) -> Polynomial:
    """Adjoint generator applied to a polynomial of degree <= 4."""
    if p.degree() > MAX_DEGREE:
        raise ValueError("degree > 4 not supported")
    out = Polynomial()
    slots = p.particles()
    M = spec.M

    sup_s = sorted(i for b, i in slots if b == "S")
    if M >= 2:
        coeff = Fraction(1, M - 1)  # lambda_S = 1
        pairs = sorted({(min(i, j), max(i, j))
                        for i in sup_s for j in range(M) if j != i})
        for i, j in pairs:
            out = out + coeff * _pair_deviation(p, ("S", i), ("S", j))

    if spec.has_reservoir:
        lam = _frac(spec.lambda_R)
        mu = _frac(spec.mu)
        N = spec.N
        blocks = ["P"] + (["Q"] if spec.two_sided else [])
        for blk in blocks:
            sup_r = sorted(i for b, i in slots if b == blk)
            if lam != 0:
                c_int = lam * Fraction(1, N - 1)
                pairs = sorted({(min(i, j), max(i, j))
                                for i in sup_r for j in range(N) if j != i})
                for i, j in pairs:
                    out = out + c_int * _pair_deviation(p, (blk, i), (blk, j))
            if mu != 0:
                c_i = mu * Fraction(1, N)
                ipairs = sorted({(i, j) for i in sup_r for j in range(M)}
                                | {(i, j) for j in sup_s for i in range(N)})
                for i, j in ipairs:
                    out = out + c_i * _pair_deviation(p, (blk, i), ("S", j))

    if spec.has_thermostat:
        mu = _frac(spec.mu)
        temps = [_frac(spec.T_plus)]
        if spec.two_sided:
            temps.append(_frac(spec.T_minus))
        if mu != 0:
            for T in temps:
                for j in sup_s:
                    out = out + mu * _thermostat_deviation(p, ("S", j), T)
    return out


# ---------------------------------------------------------------------------
# generator matrices

@dataclass
class GeneratorMatrix:
    """Matrix of the adjoint generator on an ordered polynomial basis.

    ``entries[i][j]`` is the coefficient of basis[i] in the image of
    basis[j] (columns are images).
    """

    basis: list
    names: list
    entries: list

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries],
                        dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.names) + "\r\n")
            for row in self.entries:
                fh.write(",".join("%.17g" % float(x) for x in row) + "\r\n")


def _solve_exact(columns, targets, n_rows):
    """Solve sum_j x_j col_j = target exactly for each target.

    ``columns``/``targets`` are dicts monomial -> coefficient.  Raises
    GeneratorClosureError when a target is outside the span.
    """
    monos = sorted(set(itertools.chain(*[c.keys() for c in columns],
                                       *[t.keys() for t in targets])))
    idx = {m: i for i, m in enumerate(monos)}
    m, n, k = len(monos), len(columns), len(targets)
    rows = [[Fraction(0)] * (n + k) for _ in range(m)]
    for j, col in enumerate(columns):
        for mono, c in col.items():
            rows[idx[mono]][j] = Fraction(c)
    for j, tgt in enumerate(targets):
        for mono, c in tgt.items():
            rows[idx[mono]][n + j] = Fraction(c)

    pivots = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(m):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    sols = []
    for j in range(k):
        for i in range(r, m):
            if rows[i][n + j] != 0:
                res = Polynomial({monos[t]: rows[t][n + j] for t in range(m)})
                raise GeneratorClosureError(res)
        x = [Fraction(0)] * n
        for i, c in enumerate(pivots):
            x[c] = rows[i][n + j]
        sols.append(x)
    return sols


def build_matrix(spec: GeneratorSpec, basis, names=None) -> GeneratorMatrix:
    """Matrix of the generator on a generator-closed span of polynomials."""
    basis = list(basis)
    if names is None:
        names = [f"p{i}" for i in range(len(basis))]
    if not basis:
        return GeneratorMatrix(basis=[], names=[], entries=[])
    images = [apply_generator(spec, b) for b in basis]

    # fast path: pure monomial basis with unit coefficients
    single = all(len(b.terms) == 1 and next(iter(b.terms.values())) == 1
                 for b in basis)
    if single:
        pos = {next(iter(b.terms)): i for i, b in enumerate(basis)}
        cols = []
        for img in images:
            col = [Fraction(0)] * len(basis)
            extra = {}
            for mono, c in img.terms.items():
                if mono in pos:
                    col[pos[mono]] = c
                else:
                    extra[mono] = c
            if extra:
                raise GeneratorClosureError(Polynomial(extra))
            cols.append(col)
    else:
        cols = _solve_exact([b.terms for b in basis],
                            [img.terms for img in images], 0)
    entries = [[cols[j][i] for j in range(len(basis))]
               for i in range(len(basis))]
    return GeneratorMatrix(basis=basis, names=list(names), entries=entries)


def monomial_closure(spec: GeneratorSpec, seeds):
    """Smallest generator-closed monomial set containing the seeds.

    Returns (basis polynomials, monomial keys) sorted deterministically.
    """
    todo = []
    seen = set()
    for poly in seeds:
        for mono in poly.terms:
            if mono not in seen:
                seen.add(mono)
                todo.append(mono)
    while todo:
        mono = todo.pop()
        img = apply_generator(spec, Polynomial({mono: 1}))
        for m2 in img.terms:
            if m2 not in seen:
                seen.add(m2)
                todo.append(m2)
    monos = sorted(seen)
    return [Polynomial({m: 1}) for m in monos], monos


def moment_trajectory(matrix: GeneratorMatrix, initial, times) -> np.ndarray:
    """Exact moment ODE solve dm/dt = A^T m via the matrix exponential."""
    A = matrix.to_float()
    m0 = np.asarray(initial, dtype=float)
    if m0.shape != (A.shape[0],):
        raise ValueError("initial vector dimension mismatch")
    out = np.empty((len(times), A.shape[0]))
    for i, t in enumerate(times):
        out[i] = expm(A.T * float(t)) @ m0
    return out


# ---------------------------------------------------------------------------
# Newton's law of cooling (temperature units; Gamma_T block has channel T)

def newton_cooling(e_minus0, e_S0, e_plus0, mu, M, N, t):
    """Closed-form solution of the 3x3 energy ODE system.

    N*e_minus + M*e_S + N*e_plus is conserved exactly; the reservoir
    difference decays at rate mu*M/(3N) and the system gap at rate
    mu*M/(3N) + 2*mu/3.
    """
    t = np.asarray(t, dtype=float)
    a = mu * M / (3.0 * N)
    b = mu / 3.0
    eq = (N * (e_minus0 + e_plus0) + M * e_S0) / (2.0 * N + M)
    d = (e_plus0 - e_minus0) * np.exp(-a * t)
    g = (e_S0 - 0.5 * (e_plus0 + e_minus0)) * np.exp(-(a + 2.0 * b) * t)
    s = eq - M * g / (2.0 * N + M)
    e_S = eq + 2.0 * N * g / (2.0 * N + M)
    return s - 0.5 * d, e_S, s + 0.5 * d


def energy_polynomial(block: str, n: int) -> Polynomial:
    """Per-particle energy channel (temperature units) as a polynomial."""
    c = Fraction(1, 3 * n)
    p = Polynomial()
    for i in range(n):
        for a in range(3):
            p = p + Polynomial.variable((block, i, a), 2, c)
    return p


# ---------------------------------------------------------------------------
# E4 moment functional

def _partitions(k):
    if k == 0:
        yield ()
        return
    def gen(k, mx):
        if k == 0:
            yield ()
            return
        for first in range(min(k, mx), 0, -1):
            for rest in gen(k - first, first):
                yield (first,) + rest
    yield from gen(k, k)


def _canonical_patterns(P: int):
    """Exponent patterns for absolute moments of order <= 4, one
    representative per particle/coordinate relabeling class."""
    pool = [(p, c) for p in range(min(P, 4)) for c in range(3)]
    patterns = []
    seen = set()
    for k in range(1, 5):
        for parts in _partitions(k):
            r = len(parts)
            for combo in itertools.permutations(pool, r):
                assignment = tuple(zip(combo, parts))
                # canonical signature under relabeling of particles/coords
                pmap, cmap = {}, {}
                sig = []
                for (p, c), e in assignment:
                    pl = pmap.setdefault(p, len(pmap))
                    cl = cmap.setdefault(c, len(cmap))
                    sig.append((e, pl, cl))
                sig = tuple(sorted(sig))
                if sig in seen:
                    continue
                seen.add(sig)
                patterns.append(assignment)
    return patterns


def e4_observable(samples: np.ndarray) -> float:
    """E4 moment functional estimated from samples.

    ``samples`` has shape (K, P, 3) or (K, 3P).  The maximum runs over a
    canonical set of index patterns reduced by relabeling symmetry; the
    empty pattern contributes 1 (normalization).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        if samples.shape[1] % 3:
            raise ValueError("flat samples must have dimension divisible by 3")
        samples = samples.reshape(samples.shape[0], -1, 3)
    P = samples.shape[1]
    a = np.abs(samples)
    best = 1.0
    for assignment in _canonical_patterns(P):
        prod = None
        for (p, c), e in assignment:
            col = a[:, p, c] ** e
            prod = col if prod is None else prod * col
        best = max(best, float(prod.mean()))
    return best


def e4_from_pure_fourth(m4_values) -> float:
    """E4 upper value from pure fourth moments (Hoelder reduction)."""
    m4 = max(float(v) for v in m4_values)
    return max(1.0, m4)
