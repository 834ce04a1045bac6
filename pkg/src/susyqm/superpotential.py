"""Superpotentials and their SUSY partner potentials.

A polynomial superpotential w(x) generates the partner pair
V_B = w^2 - w' (bosonic sector) and V_F = w^2 + w' (fermionic sector).
The formal ground state of the bosonic sector is exp(-int w); whenever
that function is normalizable SUSY is exact and E_0(V_B) = 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .potentials import Potential, PolyTerm

__all__ = [
    "Superpotential",
    "SusyClass",
    "derivative",
    "partner_potentials",
    "duality_holds",
    "zero_mode_exponent",
    "classify_susy",
]


class SusyClass(enum.Enum):
    EXACT_BOSONIC = "ExactBosonic"
    EXACT_FERMIONIC = "ExactFermionic"
    BROKEN = "Broken"


@dataclass(frozen=True)
class Superpotential:
    """w(x) = sum_k coeffs[k] * x**k, integer powers only."""

    coeffs: Tuple[float, ...] = ()

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        # strip trailing zeros so degree and leading coefficient are well defined
        while c and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @staticmethod
    def from_coeffs(coeffs: Iterable[float]) -> "Superpotential":
        return Superpotential(tuple(coeffs))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs else 0

    @property
    def leading(self) -> float:
        return self.coeffs[-1] if self.coeffs else 0.0

    def __call__(self, x):
        if not self.coeffs:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coeffs)

    def __neg__(self) -> "Superpotential":
        return Superpotential(tuple(-c for c in self.coeffs))

    def __add__(self, other: "Superpotential") -> "Superpotential":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0.0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0.0] * (n - len(other.coeffs))
        return Superpotential(tuple(x + y for x, y in zip(a, b)))

    def scaled(self, s: float) -> "Superpotential":
        return Superpotential(tuple(s * c for c in self.coeffs))

    def __str__(self) -> str:
        from .expressions import coeffs_to_text

        return coeffs_to_text(self.coeffs)


def derivative(w: Superpotential) -> Superpotential:
    """Exact coefficient-wise derivative w'."""
    if w.is_zero:
        return Superpotential(())
    return Superpotential(tuple(k * c for k, c in enumerate(w.coeffs) if k >= 1))


def _square_coeffs(c: Tuple[float, ...]) -> Tuple[float, ...]:
    if not c:
        return ()
    out = [0.0] * (2 * len(c) - 1)
    for i, a in enumerate(c):
        for j, b in enumerate(c):
            out[i + j] += a * b
    return tuple(out)


def partner_potentials(w: Superpotential) -> Tuple[Potential, Potential]:
    """(V_B, V_F) = (w^2 - w', w^2 + w') as exactly expanded polynomials."""
    sq = _square_coeffs(w.coeffs)
    dw = derivative(w).coeffs
    n = max(len(sq), len(dw), 1)
    vb = [0.0] * n
    vf = [0.0] * n
    for k in range(n):
        s = sq[k] if k < len(sq) else 0.0
        d = dw[k] if k < len(dw) else 0.0
        vb[k] = s - d
        vf[k] = s + d
    return Potential.from_coeffs(vb), Potential.from_coeffs(vf)


def duality_holds(w: Superpotential) -> bool:
    """Check V_B(w) == V_F(-w) term by term (an algebraic identity)."""
    vb, _ = partner_potentials(w)
    _, vf_neg = partner_potentials(-w)
    return vb.same_as(vf_neg)


def zero_mode_exponent(w: Superpotential) -> Superpotential:
    """phi(x) = int_0^x w, so the bosonic zero mode is exp(-phi).

    Returned as a coefficient polynomial with phi(0) = 0.
    """
    return Superpotential((0.0,) + tuple(c / (k + 1) for k, c in enumerate(w.coeffs)))


def classify_susy(w: Superpotential) -> SusyClass:
    """Classify by normalizability of exp(-phi) / exp(+phi).

    phi has degree deg(w) + 1.  For odd deg(w) that degree is even, so
    exactly one of exp(-phi), exp(+phi) decays on both sides (sign of the
    leading coefficient decides which).  For even deg(w), including
    constants, phi is odd at infinity and neither sign is normalizable.
    """
    if w.is_zero:
        raise ValueError("w = 0 has no discrete spectrum to classify")
    if w.degree % 2 == 1:
        return SusyClass.EXACT_BOSONIC if w.leading > 0 else SusyClass.EXACT_FERMIONIC
    return SusyClass.BROKEN
