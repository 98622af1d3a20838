"""Sparse multivariate polynomials in velocity coordinates.

Variables are tuples (block, particle, axis); blocks in use are
"S" (system), "P"/"Q" (plus/minus reservoir) and the temporaries
"om" (impact direction) and "w" (thermostat virtual particle).
Coefficients are exact Fractions whenever inputs are rational.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

MAX_DEGREE = 4


def _to_coeff(c):
    if isinstance(c, Rational):
        return Fraction(c)
    if isinstance(c, float) and c.is_integer():
        return Fraction(int(c))
    return c


class Polynomial:
    """Sparse map monomial -> coefficient; zero coefficients are dropped.

    A monomial is a sorted tuple of (variable, exponent) pairs with
    positive exponents; the empty tuple is the constant monomial.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for mono, c in terms.items():
                c = _to_coeff(c)
                if c != 0:
                    self.terms[mono] = c

    @classmethod
    def constant(cls, c):
        return cls({(): c})

    @classmethod
    def variable(cls, var, exponent: int = 1, coeff=1):
        if exponent < 0:
            raise ValueError("exponent must be >= 0")
        if exponent == 0:
            return cls.constant(coeff)
        return cls({((var, exponent),): coeff})

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out.get(mono, 0) + c
            if s == 0:
                out.pop(mono, None)
            else:
                out[mono] = s
        p = Polynomial()
        p.terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Polynomial()
        p.terms = {m: -c for m, c in self.terms.items()}
        return p

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = _to_coeff(other)
            if c == 0:
                return Polynomial()
            p = Polynomial()
            p.terms = {m: cc * c for m, cc in self.terms.items()}
            return p
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _merge_monomials(m1, m2)
                s = out.get(mono, 0) + c1 * c2
                if s == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = s
        p = Polynomial()
        p.terms = out
        return p

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- queries ------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e for _, e in m) for m in self.terms)

    def variables(self):
        out = set()
        for m in self.terms:
            for var, _ in m:
                out.add(var)
        return out

    def particles(self):
        """Set of (block, particle) slots appearing in the polynomial."""
        return {(v[0], v[1]) for v in self.variables()}

    def evaluate(self, assignment) -> float:
        """Numeric evaluation; ``assignment`` maps variable -> value."""
        total = 0.0
        for m, c in self.terms.items():
            val = float(c)
            for var, e in m:
                val *= assignment[var] ** e
            total += val
        return total

    def coefficient(self, mono):
        return self.terms.get(mono, 0)

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for m, c in sorted(self.terms.items()):
            factors = ["%s%d_%s^%d" % (v[0], v[1], "xyz"[v[2]], e) if e > 1
                       else "%s%d_%s" % (v[0], v[1], "xyz"[v[2]])
                       for v, e in m]
            parts.append(f"{c}*" + "*".join(factors) if factors else f"{c}")
        return "Polynomial(" + " + ".join(parts) + ")"


def _merge_monomials(m1, m2):
    d = dict(m1)
    for var, e in m2:
        d[var] = d.get(var, 0) + e
    return tuple(sorted(d.items()))


def monomial(*factors) -> Polynomial:
    """Convenience builder: monomial((var, exp), ...)."""
    p = Polynomial.constant(1)
    for var, e in factors:
        p = p * Polynomial.variable(var, e)
    return p
