"""Polynomial and power-like potentials on the line.

Units are atomic with mass m = 1/2 throughout the package, so the
Hamiltonian is H = -d^2/dx^2 + V(x) and the harmonic oscillator
V = x^2 has the spectrum E_N = 2N + 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

__all__ = ["PolyTerm", "Potential"]


@dataclass(frozen=True)
class PolyTerm:
    """One monomial: coeff * x**power, or coeff * |x|**power if absolute.

    power must be a non-negative integer unless absolute is set, in which
    case any real power > 0 is allowed.
    """

    coeff: float
    power: float
    absolute: bool = False

    def __post_init__(self):
        if not np.isfinite(self.coeff):
            raise ValueError("coefficient must be finite")
        if self.power < 0:
            raise ValueError("power must be non-negative")
        if not self.absolute and self.power != int(self.power):
            raise ValueError(
                f"non-integer power {self.power} requires an |x| term"
            )

    def __call__(self, x):
        base = np.abs(x) if self.absolute else x
        if self.power == 0:
            return self.coeff * np.ones_like(np.asarray(x, dtype=float))
        return self.coeff * base ** self.power


@dataclass(frozen=True)
class Potential:
    """Sum of PolyTerms plus a constant, with an optional hard-wall box.

    The box, when present, is the symmetric interval [-wall, wall] with
    infinite walls; the terms are only ever evaluated inside it.
    """

    terms: tuple = ()
    constant: float = 0.0
    wall: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.wall is not None and self.wall <= 0:
            raise ValueError("hard wall half-width must be positive")
        for t in self.terms:
            if not isinstance(t, PolyTerm):
                raise TypeError("terms must be PolyTerm instances")

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def from_coeffs(coeffs: Iterable[float], wall: Optional[float] = None) -> "Potential":
        """Build from dense polynomial coefficients c[k] * x**k."""
        terms = []
        const = 0.0
        for k, c in enumerate(coeffs):
            if c == 0.0:
                continue
            if k == 0:
                const += c
            else:
                terms.append(PolyTerm(float(c), k))
        return Potential(tuple(terms), const, wall)

    @staticmethod
    def power_like(m: float, coeff: float = 1.0, wall: Optional[float] = None) -> "Potential":
        """V = coeff * |x|**m."""
        if m <= 0:
            raise ValueError("power must be positive")
        if not float(m).is_integer() or int(m) % 2 != 0:
            return Potential((PolyTerm(coeff, float(m), True),), 0.0, wall)
        return Potential((PolyTerm(coeff, int(m)),), 0.0, wall)

    def with_wall(self, wall: float) -> "Potential":
        return Potential(self.terms, self.constant, wall)

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.constant, dtype=float)
        for t in self.terms:
            out += t(x)
        return out if out.shape else float(out)

    # -- structure queries ---------------------------------------------------

    @property
    def degree(self) -> float:
        return max((t.power for t in self.terms), default=0.0)

    def canonical(self) -> "Potential":
        """Combine like terms, drop zeros, sort by (power, absolute)."""
        acc: dict = {}
        const = self.constant
        for t in self.terms:
            key = (float(t.power), bool(t.absolute))
            acc[key] = acc.get(key, 0.0) + t.coeff
        terms = tuple(
            PolyTerm(c, p, a)
            for (p, a), c in sorted(acc.items())
            if c != 0.0 and p != 0
        )
        const += sum(c for (p, _a), c in acc.items() if p == 0)
        return Potential(terms, const, self.wall)

    def same_as(self, other: "Potential") -> bool:
        """Exact coefficient equality after canonicalization."""
        a, b = self.canonical(), other.canonical()
        return a.terms == b.terms and a.constant == b.constant and a.wall == b.wall

    @property
    def is_even(self) -> bool:
        """True if every term is even under x -> -x."""
        return all(t.absolute or int(t.power) % 2 == 0 for t in self.terms)

    def poly_coeffs(self) -> Optional[np.ndarray]:
        """Dense coefficients c[k] of sum c_k x^k, or None if any |x| term."""
        if any(t.absolute for t in self.terms):
            return None
        deg = int(self.degree)
        c = np.zeros(deg + 1)
        c[0] = self.constant
        for t in self.terms:
            c[int(t.power)] += t.coeff
        return c

    def leading_signs(self) -> tuple:
        """Signs of V as x -> -inf and x -> +inf (0 for identically constant)."""
        if not self.terms:
            return (0, 0)
        deg = self.degree
        right = sum(t.coeff for t in self.terms if t.power == deg)
        left = sum(
            t.coeff if (t.absolute or int(t.power) % 2 == 0) else -t.coeff
            for t in self.terms
            if t.power == deg
        )
        return (int(np.sign(left)), int(np.sign(right)))

    @property
    def confining(self) -> bool:
        """V -> +inf on both sides, or a hard wall is present."""
        if self.wall is not None:
            return True
        return self.leading_signs() == (1, 1)

    def global_min(self, span: float = 30.0) -> tuple:
        """Approximate (x_min, V_min) inside the box or a scan window."""
        lo, hi = (-self.wall, self.wall) if self.wall else (-span, span)
        c = self.poly_coeffs()
        cand = [lo, hi, 0.0]
        if c is not None and len(c) > 2:
            dc = np.polynomial.polynomial.polyder(c)
            roots = np.polynomial.polynomial.polyroots(dc)
            cand += [float(r.real) for r in roots
                     if abs(r.imag) < 1e-9 and lo <= r.real <= hi]
        else:
            xs = np.linspace(lo, hi, 4001)
            vs = self(xs)
            cand.append(float(xs[np.argmin(vs)]))
        vals = [(float(self(x)), float(x)) for x in cand]
        v, x = min(vals)
        return x, v

    def __str__(self) -> str:
        from .expressions import potential_to_text

        return potential_to_text(self)
