"""Exact Bohr-Sommerfeld condition: actions, turning points, WKB corrections.

With exact level energies E_N the condition

    int_{x_a}^{x_b} sqrt(E_N - V) dx = pi * (N + 1/2 + gamma(N))

defines the correction gamma(N).  For the harmonic oscillator the left
side is exactly pi*(N + 1/2), so gamma vanishes; for a hard-wall box it
is 2*sqrt(E), giving gamma = 1/2 at E_N = ((N+1)*pi/(2L))^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .potentials import Potential
from .superpotential import Superpotential, partner_potentials
from .solver import solve_potential, Spectrum

__all__ = [
    "TurningPoints",
    "ActionResult",
    "GammaEntry",
    "GammaTable",
    "QuadratureError",
    "turning_points",
    "action_integral",
    "wkb_gamma",
    "gamma_table",
    "susy_gamma_pair",
    "SusyGammaPair",
    "coupling_invariance",
    "InvarianceReport",
]


class QuadratureError(RuntimeError):
    """Action quadrature failed to converge under order doubling."""


@dataclass(frozen=True)
class TurningPoints:
    """Outermost classical turning points, plus interior tangencies.

    hard_wall_left/right mark sides where the wall itself bounds the
    motion (V < E all the way to the wall).  below_barrier is set when
    E - V dips negative strictly inside (x_a, x_b); the action integral
    then clamps the classically forbidden stretch to zero.
    """

    x_a: float
    x_b: float
    interior_zeros: tuple = ()
    hard_wall_left: bool = False
    hard_wall_right: bool = False
    below_barrier: bool = False

    def __post_init__(self):
        if not self.x_a < self.x_b:
            raise ValueError("turning points must satisfy x_a < x_b")


@dataclass(frozen=True)
class ActionResult:
    value: float
    error: float


@dataclass(frozen=True)
class GammaEntry:
    level: int
    energy: float
    gamma: float
    turning: TurningPoints
    action: ActionResult
    error: float  # propagated: quadrature + energy sensitivity


@dataclass(frozen=True)
class GammaTable:
    potential: Potential
    entries: tuple
    sector: Optional[str] = None  # "B" / "F" for SUSY pairs

    def __post_init__(self):
        for i, e in enumerate(self.entries):
            if e.level != i:
                raise ValueError("gamma table entries must be complete and ordered")

    def gammas(self) -> np.ndarray:
        return np.array([e.gamma for e in self.entries])

    def energies(self) -> np.ndarray:
        return np.array([e.energy for e in self.entries])

    def errors(self) -> np.ndarray:
        return np.array([e.error for e in self.entries])


# ---------------------------------------------------------------------------
# turning points


def _scan_edge(V: Potential, E: float) -> float:
    """|x| beyond which V > E on both sides (search edge for scans)."""
    if V.wall is not None:
        return V.wall
    xm, _ = V.global_min()
    span = max(2.0, 2 * abs(xm))
    while V(-span) < E or V(span) < E:
        span *= 2.0
        if span > 1e8:
            raise ValueError("no classical turning point found; V appears unbounded")
    return span


def turning_points(V: Potential, E: float, tangency_tol: float = 1e-9) -> TurningPoints:
    """Outermost pair where E - V changes sign, refined to ~1e-12.

    Monomial |x|^m potentials use the closed form E**(1/m).  Polynomials
    take their candidate roots from the companion matrix and are polished
    by bisection; anything else falls back to a sign-change scan.  Hard
    walls bound the motion when no sign change occurs on that side.
    """
    _, vmin = V.global_min()
    if E <= vmin and V.wall is None:
        raise ValueError(f"E = {E!r} does not exceed min V = {vmin!r}")

    f = lambda x: E - V(x)
    scale = max(abs(E), abs(vmin), 1.0)

    # closed form for a pure |x|^m or x^m (m even) potential
    if len(V.terms) == 1 and V.constant == 0.0 and V.terms[0].coeff > 0 and E > 0:
        t = V.terms[0]
        if t.absolute or int(t.power) % 2 == 0:
            r = (E / t.coeff) ** (1.0 / t.power)
            if V.wall is not None and r >= V.wall:
                return TurningPoints(-V.wall, V.wall, (), True, True)
            return TurningPoints(-r, r)

    edge = _scan_edge(V, E) if V.wall is None else V.wall
    c = V.poly_coeffs()
    roots: list = []
    if c is not None and len(c) > 1:
        cc = c.copy()
        cc[0] -= E
        rts = np.polynomial.polynomial.polyroots(cc)
        roots = sorted(
            float(r.real)
            for r in rts
            if abs(r.imag) < 1e-8 * (1 + abs(r)) and -edge <= r.real <= edge
        )
    else:
        xs = np.linspace(-edge, edge, 20001)
        fv = f(xs)
        sign = np.sign(fv)
        flips = np.nonzero(np.diff(sign) != 0)[0]
        roots = [brentq(f, xs[i], xs[i + 1], xtol=1e-13) for i in flips]

    wall_l = wall_r = False
    if V.wall is not None and f(-V.wall) > 0 and not any(r < 0 for r in roots):
        x_a, wall_l = -V.wall, True
    elif roots:
        x_a = _polish_root(f, min(roots), edge, scale)
    else:
        raise ValueError("no turning point found on the left")
    if V.wall is not None and f(V.wall) > 0 and not any(r > 0 for r in roots):
        x_b, wall_r = V.wall, True
    elif roots:
        x_b = _polish_root(f, max(roots), edge, scale)
    else:
        raise ValueError("no turning point found on the right")
    if V.wall is not None:
        # walls always bound the allowed region when V < E there
        if f(-V.wall) > 0 and (not roots or min(roots) > -V.wall + 1e-12):
            x_a, wall_l = -V.wall, True
        if f(V.wall) > 0 and (not roots or max(roots) < V.wall - 1e-12):
            x_b, wall_r = V.wall, True

    if not x_a < x_b:
        raise ValueError("degenerate turning interval; E is at the potential minimum")

    # interior tangencies: near-zero minima of E - V strictly inside
    interior = []
    below = False
    xs = np.linspace(x_a, x_b, 4001)[1:-1]
    fv = f(xs)
    tol = tangency_tol * scale
    if np.any(fv < -tol):
        below = True
    # local minima of f below threshold
    idx = np.nonzero((fv[1:-1] <= fv[:-2]) & (fv[1:-1] <= fv[2:]) & (fv[1:-1] < tol))[0]
    for i in idx:
        interior.append(float(xs[i + 1]))
    # snap clustered detections
    merged = []
    for x in interior:
        if not merged or x - merged[-1] > (x_b - x_a) / 100:
            merged.append(x)
    return TurningPoints(x_a, x_b, tuple(merged), wall_l, wall_r, below)


def _polish_root(f, x0: float, edge: float, scale: float) -> float:
    """Bisection refinement around a candidate root."""
    if abs(f(x0)) < 1e-13 * scale:
        return x0
    for d in (1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.5):
        lo, hi = max(x0 - d, -edge), min(x0 + d, edge)
        if f(lo) * f(hi) < 0:
            return brentq(f, lo, hi, xtol=1e-13)
    return x0


# ---------------------------------------------------------------------------
# action integral


@lru_cache(maxsize=32)
def _gauss_nodes(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * np.pi * t, 0.5 * np.pi * w


def action_integral(
    V: Potential,
    E: float,
    tp: TurningPoints,
    target: float = 1e-10,
    max_order: int = 4096,
) -> ActionResult:
    """int sqrt(max(E - V, 0)) dx over [x_a, x_b].

    Each subinterval (split at interior tangencies) is mapped by
    x = c + r*sin(theta), which turns simple and double endpoint zeros of
    E - V into analytic integrands; Gauss-Legendre order is doubled until
    the value settles below the target.
    """
    splits = [x for x in tp.interior_zeros if tp.x_a < x < tp.x_b]
    pts = [tp.x_a] + sorted(splits) + [tp.x_b]
    total = 0.0
    err = 0.0
    for u, v in zip(pts[:-1], pts[1:]):
        c, r = 0.5 * (u + v), 0.5 * (v - u)
        prev = None
        sub_err = None
        order = 64
        while order <= max_order:
            th, wt = _gauss_nodes(order)
            xs = c + r * np.sin(th)
            fv = np.maximum(E - V(xs), 0.0)
            val = float(np.sum(wt * np.sqrt(fv) * r * np.cos(th)))
            if prev is not None:
                sub_err = abs(val - prev)
                if sub_err < target * max(1.0, abs(val)):
                    break
            prev = val
            order *= 2
        else:
            raise QuadratureError(
                f"action quadrature not converged at order {max_order} "
                f"(last change {sub_err!r})"
            )
        total += val
        err += sub_err if sub_err is not None else 0.0
    return ActionResult(total, err)


# ---------------------------------------------------------------------------
# gamma


def wkb_gamma(
    V: Potential, N: int, E_exact: float, energy_err: float = 0.0
) -> GammaEntry:
    """gamma(N) = action/pi - N - 1/2 at the exact level energy.

    The error field combines the quadrature estimate with the sensitivity
    of the action to the energy (dA/dE via a central difference).
    """
    tp = turning_points(V, E_exact)
    act = action_integral(V, E_exact, tp)
    gamma = act.value / np.pi - N - 0.5
    err = act.error / np.pi
    if energy_err > 0:
        dE = max(energy_err, 1e-9 * max(1.0, abs(E_exact)))
        try:
            a_hi = action_integral(V, E_exact + dE, turning_points(V, E_exact + dE))
            a_lo = action_integral(V, E_exact - dE, turning_points(V, E_exact - dE))
            sens = abs(a_hi.value - a_lo.value) / (2 * dE)
        except ValueError:
            sens = 1.0
        err += sens * energy_err / np.pi
    return GammaEntry(N, E_exact, gamma, tp, act, err)


def gamma_table(
    V: Potential,
    n_max: int,
    tol: float = 1e-10,
    solver=solve_potential,
    sector: Optional[str] = None,
    spectrum: Optional[Spectrum] = None,
) -> GammaTable:
    """Solve the spectrum up to n_max and evaluate gamma per level."""
    if spectrum is None:
        spectrum = solver(V, levels=n_max + 1, tol=tol)
    entries = tuple(
        wkb_gamma(V, N, spectrum.energies[N], float(spectrum.errors[N]))
        for N in range(n_max + 1)
    )
    return GammaTable(V, entries, sector)


@dataclass(frozen=True)
class SusyGammaPair:
    """gamma tables for the partner pair V_B = a^2 x^6 - 3 a x^2, V_F = ... + 3 a x^2."""

    coupling: float
    bosonic: GammaTable
    fermionic: GammaTable

    def energy_pairing(self) -> np.ndarray:
        """|E_B^(N+1) - E_F^(N)| for N = 0 .. n_max - 1."""
        eb = self.bosonic.energies()
        ef = self.fermionic.energies()
        m = min(len(eb) - 1, len(ef))
        return np.abs(eb[1 : m + 1] - ef[:m])

    def gamma_offset(self) -> np.ndarray:
        """gamma_B(N+1) - gamma_F(N)."""
        gb = self.bosonic.gammas()
        gf = self.fermionic.gammas()
        m = min(len(gb) - 1, len(gf))
        return gb[1 : m + 1] - gf[:m]

    def gamma_same_level(self) -> np.ndarray:
        """gamma_B(N) - gamma_F(N)."""
        gb = self.bosonic.gammas()
        gf = self.fermionic.gammas()
        m = min(len(gb), len(gf))
        return gb[:m] - gf[:m]


def susy_gamma_pair(a: float, n_max: int, tol: float = 1e-10) -> SusyGammaPair:
    """Both sector tables for w = a x^3 (bosonic table includes level n_max + 1)."""
    if a <= 0:
        raise ValueError("coupling a must be positive")
    w = Superpotential((0.0, 0.0, 0.0, a))
    vb, vf = partner_potentials(w)
    tb = gamma_table(vb, n_max + 1, tol=tol, sector="B")
    tf = gamma_table(vf, n_max, tol=tol, sector="F")
    return SusyGammaPair(a, tb, tf)


@dataclass(frozen=True)
class InvarianceReport:
    couplings: tuple
    tables: tuple
    max_deviation: float
    violations: tuple  # (a_i, a_j, N, deviation, budget) beyond 10x error budget


def coupling_invariance(
    a_list: Sequence[float], n_max: int, tol: float = 1e-10, sector: str = "B"
) -> InvarianceReport:
    """Check that gamma(N) for V = a^2 x^6 -+ 3 a x^2 does not depend on a.

    The reduction x -> a**(-1/4) y removes the coupling exactly, so tables
    at different a must agree entry-wise within their error budgets.
    """
    if any(a <= 0 for a in a_list):
        raise ValueError("couplings must be positive")
    sign = -3.0 if sector == "B" else 3.0
    tables = []
    for a in a_list:
        V = Potential.from_coeffs([0, 0, sign * a, 0, 0, 0, a * a])
        tables.append(gamma_table(V, n_max, tol=tol, sector=sector))
    max_dev = 0.0
    violations = []
    for i in range(len(tables)):
        for j in range(i + 1, len(tables)):
            gi, gj = tables[i].gammas(), tables[j].gammas()
            ei, ej = tables[i].errors(), tables[j].errors()
            dev = np.abs(gi - gj)
            max_dev = max(max_dev, float(np.max(dev))) if len(dev) else max_dev
            budget = 10.0 * (ei + ej)
            for N in np.nonzero(dev > budget)[0]:
                violations.append(
                    (a_list[i], a_list[j], int(N), float(dev[N]), float(budget[N]))
                )
    return InvarianceReport(tuple(a_list), tuple(tables), max_dev, tuple(violations))
