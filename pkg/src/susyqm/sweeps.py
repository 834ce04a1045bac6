"""Coupling sweeps through a = 0: limits, transition classification, fits.

A family fixes w(x; a, b) = a*p(x) + b*q(x) and a sector; sweeping a
through zero probes how the level energies behave at the origin of the
coupling.  The taxonomy follows the phase-transition analogy: a jump in
E is first order, a jump or divergence in dE/da with continuous E is
second order, and an essential (faster than any power) vanishing of the
energy difference with all derivatives continuous is infinite order.
"""
from __future__ import annotations

import enum
import os
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .potentials import Potential
from .superpotential import (
    Superpotential,
    SusyClass,
    classify_susy,
    partner_potentials,
)
from .solver import (
    ConvergenceError,
    NonConfiningError,
    Spectrum,
    solve_potential,
)

__all__ = [
    "Sector",
    "FamilySpec",
    "SEXTIC",
    "QUARTIC",
    "HARMONIC",
    "family_by_name",
    "SweepSample",
    "SweepResult",
    "DerivativeEstimate",
    "ZeroLimits",
    "TransitionKind",
    "TransitionClass",
    "UnresolvedClassificationError",
    "FitResult",
    "FitError",
    "sweep",
    "limits_at_zero",
    "classify",
    "fit_power_law",
    "fit_instanton",
    "check_degeneracy",
    "DegeneracyReport",
    "clear_solve_cache",
]


class Sector(enum.Enum):
    BOSONIC = "B"
    FERMIONIC = "F"


@dataclass(frozen=True)
class FamilySpec:
    """w(x; a, b) = a * p(x) + b * q(x) with a fixed b and sector."""

    name: str
    p: Superpotential
    q: Superpotential
    b: float = 0.0
    sector: Sector = Sector.BOSONIC
    box: Optional[float] = None  # optional hard wall |x| <= box

    def __post_init__(self):
        if self.p.is_zero:
            raise ValueError("family base polynomial p must be nonzero")

    def superpotential_at(self, a: float) -> Superpotential:
        return self.p.scaled(a) + self.q.scaled(self.b)

    def potential_at(self, a: float) -> Potential:
        vb, vf = partner_potentials(self.superpotential_at(a))
        V = vb if self.sector is Sector.BOSONIC else vf
        return V.with_wall(self.box) if self.box is not None else V

    @property
    def scaling_power(self) -> float:
        """Energy scale exponent: E ~ |a|**(2/(deg p + 1)) at b = 0."""
        return 2.0 / (self.p.degree + 1)

    def with_b(self, b: float) -> "FamilySpec":
        return FamilySpec(self.name, self.p, self.q, b, self.sector, self.box)


def SEXTIC(b: float = 0.0, sector: Sector = Sector.BOSONIC, box: Optional[float] = None):
    """w = a x^3 + b x (quasi-exactly-solvable sextic pair)."""
    return FamilySpec("sextic", Superpotential((0, 0, 0, 1)), Superpotential((0, 1)), b, sector, box)


def QUARTIC(b: float = 0.0, sector: Sector = Sector.BOSONIC, box: Optional[float] = None):
    """w = a x^2 + b x (SUSY-broken quartic pair)."""
    return FamilySpec("quartic", Superpotential((0, 0, 1)), Superpotential((0, 1)), b, sector, box)


def HARMONIC(b: float = 0.0, sector: Sector = Sector.BOSONIC, box: Optional[float] = None):
    """w = a x (harmonic pair; b is unused since q = 0)."""
    return FamilySpec("harmonic", Superpotential((0, 1)), Superpotential(()), 0.0, sector, box)


_FAMILY_BUILDERS = {"sextic": SEXTIC, "quartic": QUARTIC, "harmonic": HARMONIC}


def family_by_name(
    name: str, b: float = 0.0, sector: Sector = Sector.BOSONIC, box: Optional[float] = None
) -> FamilySpec:
    try:
        builder = _FAMILY_BUILDERS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(_FAMILY_BUILDERS)}")
    return builder(b=b, sector=sector, box=box)


# ---------------------------------------------------------------------------
# cached level solves (classification re-runs hit the same potentials)

_SOLVE_CACHE: dict = {}


def clear_solve_cache() -> None:
    _SOLVE_CACHE.clear()


def _level_energy(V: Potential, N: int, tol: float) -> tuple:
    """(E_N, err_N) with caching keyed on the canonical potential."""
    Vc = V.canonical()
    key = (Vc.terms, Vc.constant, Vc.wall, N + 1, float(tol))
    hit = _SOLVE_CACHE.get(key)
    if hit is None:
        spec = solve_potential(Vc, levels=N + 1, tol=tol)
        hit = (float(spec.energies[N]), float(spec.errors[N]))
        _SOLVE_CACHE[key] = hit
    return hit


# ---------------------------------------------------------------------------
# sweeping


@dataclass(frozen=True)
class SweepSample:
    a: float
    energy: float
    err: float
    error: Optional[str] = None  # solver failure annotation


@dataclass(frozen=True)
class SweepResult:
    family: str
    level: int
    b: float
    sector: Sector
    samples: tuple

    def __post_init__(self):
        avals = [s.a for s in self.samples]
        if any(x >= y for x, y in zip(avals, avals[1:])):
            raise ValueError("samples must be strictly increasing in a")

    def ok_samples(self) -> tuple:
        return tuple(s for s in self.samples if s.error is None)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SUSYQM_WORKERS", "1")))
    except ValueError:
        return 1


def sweep(
    family: FamilySpec, N: int, a_samples: Sequence[float], tol: float = 1e-8
) -> SweepResult:
    """Level-N energy of the family's sector potential at each coupling."""
    avals = sorted(float(a) for a in a_samples)
    if any(a == 0.0 for a in avals):
        raise ValueError("a = 0 is not sweepable; use limits_at_zero for the origin")

    def one(a: float) -> SweepSample:
        try:
            e, err = _level_energy(family.potential_at(a), N, tol)
            return SweepSample(a, e, err)
        except (ConvergenceError, NonConfiningError, ValueError) as exc:
            return SweepSample(a, math.nan, math.nan, error=str(exc))

    nw = _workers()
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            samples = tuple(pool.map(one, avals))
    else:
        samples = tuple(one(a) for a in avals)
    for s in samples:
        if s.error is None and s.err > tol:
            raise ConvergenceError(f"sample a={s.a} converged only to {s.err:.2e} > tol")
    return SweepResult(family.name, N, family.b, family.sector, samples)


# ---------------------------------------------------------------------------
# sequence extrapolation


def _shanks(seq: Sequence[float], noise: float) -> tuple:
    """Iterated Aitken limit of a convergent sequence, with error estimate.

    Exact for geometric error decay, which covers both the smooth O(eps)
    approaches and the power-law |a|**p ones on a halved eps ladder.
    """
    s = [float(v) for v in seq]
    if len(s) < 2:
        return s[-1], math.inf
    best = s[-1]
    err = abs(s[-1] - s[-2])
    if err <= noise:
        return best, max(err, noise)
    for _ in range(3):
        if len(s) < 3:
            break
        t = []
        for k in range(len(s) - 2):
            d1 = s[k + 1] - s[k]
            d2 = s[k + 2] - s[k + 1]
            den = d2 - d1
            if abs(den) < 1e-14 * (abs(d1) + abs(d2)) + 1e-300:
                t.append(s[k + 2])
            else:
                t.append(s[k + 2] - d2 * d2 / den)
        change = abs(t[-1] - best)
        if change > max(abs(err), noise) * 4 and abs(err) <= 10 * noise:
            break  # transformation is amplifying noise; keep the stable value
        best = t[-1]
        err = change
        s = t
        if err <= noise:
            break
    return best, max(err, noise)


class DerivativeKind(enum.Enum):
    CONVERGED = "converged"
    DIVERGENT = "divergent"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class DerivativeEstimate:
    kind: DerivativeKind
    value: Optional[float] = None  # converged limit
    growth_exponent: Optional[float] = None  # |d| ~ eps**(-g) when divergent
    err: Optional[float] = None

    def describe(self) -> str:
        if self.kind is DerivativeKind.CONVERGED:
            return f"{self.value:.6g} (+- {self.err:.1e})"
        if self.kind is DerivativeKind.DIVERGENT:
            return f"divergent ~ |a|^-{self.growth_exponent:.3g}"
        return "unresolved"


def _derivative_estimate(
    quotients: Sequence[float], noise: Sequence[float], conv_tol: float
) -> DerivativeEstimate:
    d = np.asarray(quotients, dtype=float)
    nz = np.asarray(noise, dtype=float)
    sig = np.abs(d) > 10.0 * nz
    if not np.any(sig):
        # all quotients at the solver noise floor: flat side, derivative 0
        return DerivativeEstimate(DerivativeKind.CONVERGED, 0.0, None, float(np.max(nz)))

    # divergence: sustained growth of |d| over the deepest halvings
    tail = d[-4:]
    if len(tail) >= 3 and np.all(np.abs(tail) > 10.0 * nz[-len(tail):]):
        growth = np.log2(np.abs(tail[1:]) / np.abs(tail[:-1]))
        if np.all(growth > 0.12) and float(np.median(growth)) >= 0.2:
            return DerivativeEstimate(
                DerivativeKind.DIVERGENT, None, float(np.median(growth)), None
            )

    base_noise = float(np.max(nz))
    # already settled?
    changes = np.abs(np.diff(d[-4:]))
    if len(changes) and np.max(changes) < max(conv_tol, 4 * base_noise):
        val = float(np.mean(d[-2:]))
        return DerivativeEstimate(
            DerivativeKind.CONVERGED, val, None, float(np.max(changes)) + base_noise
        )
    val, err = _shanks(list(d), base_noise)
    if err < max(conv_tol, 8 * base_noise):
        return DerivativeEstimate(DerivativeKind.CONVERGED, float(val), None, float(err))
    return DerivativeEstimate(DerivativeKind.UNRESOLVED)


# ---------------------------------------------------------------------------
# one-sided limits


@dataclass(frozen=True)
class ZeroLimits:
    """One-sided data of E_N(a) at a = 0."""

    e_minus: float
    e_minus_err: float
    e_plus: float
    e_plus_err: float
    d_minus: DerivativeEstimate
    d_plus: DerivativeEstimate
    e_at_zero: Optional[float]
    samples_minus: tuple  # (a, E) with a < 0, increasing
    samples_plus: tuple  # (a, E) with a > 0, decreasing |a| ... increasing a


def limits_at_zero(
    family: FamilySpec,
    N: int,
    eps0: float = 0.1,
    halvings: int = 8,
    solver_tol: float = 1e-8,
    conv_tol: float = 2e-3,
) -> ZeroLimits:
    """Extrapolated one-sided limits of E and dE/da over eps_k = eps0/2^k."""
    eps = eps0 * 0.5 ** np.arange(halvings + 1)

    def side(sign: float):
        es = []
        for e_k in eps:
            val, _err = _level_energy(family.potential_at(sign * e_k), N, solver_tol)
            es.append(val)
        es = np.asarray(es)
        limit, lerr = _shanks(list(es), noise=4 * solver_tol)
        # difference quotients between consecutive eps samples (in a)
        da = sign * np.diff(eps)
        d = np.diff(es) / da
        qnoise = 2.0 * solver_tol / np.abs(da)
        dest = _derivative_estimate(list(d), list(qnoise), conv_tol)
        return limit, lerr, dest, tuple(zip(sign * eps, es))

    em, em_err, dm, sm = side(-1.0)
    ep, ep_err, dp, sp = side(+1.0)

    V0 = family.potential_at(0.0)
    try:
        e0, _ = _level_energy(V0, N, solver_tol)
    except (NonConfiningError, ConvergenceError):
        e0 = None

    return ZeroLimits(
        em, em_err, ep, ep_err, dm, dp, e0,
        tuple(sorted(sm)), tuple(sorted(sp)),
    )


# ---------------------------------------------------------------------------
# fits


class FitError(ValueError):
    """Fit window unusable (too few samples, non-positive energies, ...)."""


@dataclass(frozen=True)
class FitResult:
    model: str  # "power" | "instanton"
    beta: float
    p: float
    alpha: Optional[float]
    q: Optional[float]
    residual: float  # RMS in log space
    window: tuple  # (a_min, a_max) of the fitted samples
    correlation: float
    curvature: float = 0.0  # quadratic coefficient of the log-residual trend

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not np.isfinite(self.residual):
            raise ValueError("residual must be finite")


def _extract_ae(samples) -> tuple:
    out = []
    for s in samples:
        if isinstance(s, SweepSample):
            if s.error is not None:
                continue
            out.append((s.a, s.energy))
        else:
            out.append((float(s[0]), float(s[1])))
    return tuple(out)


def fit_power_law(samples, p: Optional[float] = None) -> FitResult:
    """Least-squares fit of E = beta * |a|**p in log-log space.

    Pass p to freeze the exponent and fit only the prefactor.
    """
    ae = _extract_ae(samples)
    if len(ae) < 4:
        raise FitError("power-law fit needs at least 4 samples")
    signs = {a > 0 for a, _ in ae}
    if len(signs) != 1 or any(a == 0 for a, _ in ae):
        raise FitError("samples must lie on one side of a = 0")
    if any(e <= 0 for _, e in ae):
        raise FitError("power-law fit requires positive energies")
    la = np.log([abs(a) for a, _ in ae])
    le = np.log([e for _, e in ae])
    if p is None:
        pfit, logb = np.polyfit(la, le, 1)
    else:
        pfit = float(p)
        logb = float(np.mean(le - pfit * la))
    resid = le - (logb + pfit * la)
    corr = float(np.corrcoef(la, le)[0, 1]) if len(ae) > 2 else 1.0
    window = (min(a for a, _ in ae), max(a for a, _ in ae))
    return FitResult(
        "power", float(np.exp(logb)), float(pfit), None, None,
        float(np.sqrt(np.mean(resid**2))), window, corr,
    )


def fit_instanton(samples, b: float, p: float, q: float) -> FitResult:
    """Linear fit of log E - p log|a| against t = b/|a|**q.

    Returns beta = exp(intercept) and alpha = -slope.  The curvature field
    carries the quadratic coefficient of the residual trend; when it
    dominates the fit the assumed single-exponential law is inadequate
    (subleading corrections or a steeper essential decay).
    """
    if b <= 0:
        raise FitError("instanton fit requires b > 0")
    ae = _extract_ae(samples)
    if len(ae) < 4:
        raise FitError("instanton fit window too narrow: need at least 4 samples")
    if any(e <= 0 for _, e in ae):
        raise FitError("instanton fit requires positive energies")
    t = np.array([b / abs(a) ** q for a, _ in ae])
    if t.max() - t.min() < 0.5:
        raise FitError("instanton fit window too narrow in the exponent variable")
    y = np.array([math.log(e) - p * math.log(abs(a)) for a, e in ae])
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (intercept + slope * t)
    rms = float(np.sqrt(np.mean(resid**2)))
    corr = float(np.corrcoef(t, y)[0, 1])
    curvature = float(np.polyfit(t, y, 2)[0]) if len(ae) >= 5 else 0.0
    window = (min(a for a, _ in ae), max(a for a, _ in ae))
    return FitResult(
        "instanton", float(np.exp(intercept)), float(p), float(-slope), float(q),
        rms, window, corr, curvature,
    )


# ---------------------------------------------------------------------------
# classification


class TransitionKind(enum.Enum):
    ANALYTIC = "Analytic"
    FIRST_ORDER = "FirstOrder"
    SECOND_ORDER = "SecondOrder"
    INFINITE_ORDER = "InfiniteOrder"


class UnresolvedClassificationError(RuntimeError):
    """Numerical evidence does not single out a transition type."""

    def __init__(self, message, evidence=None):
        super().__init__(message)
        self.evidence = evidence


@dataclass(frozen=True)
class InstantonEvidence:
    side: str  # "a<0" | "a>0"
    q_effective: float
    alpha: float
    correlation: float
    beta: float
    window: tuple
    n_samples: int


@dataclass(frozen=True)
class TransitionClass:
    kind: TransitionKind
    limits: ZeroLimits
    jump: float
    derivative_gap: Optional[float]
    instanton: Optional[InstantonEvidence]
    thresholds: dict = field(default_factory=dict)


def _instanton_probe(
    family: FamilySpec,
    N: int,
    side: float,
    corr_threshold: float,
    solver_tol: float,
    window: tuple,
    n_probe: int = 12,
) -> Optional[InstantonEvidence]:
    """Test one side for essential decay: log E linear in b/|a|**q_eff.

    The family exponent q = 2/(deg p + 1) sets the natural scaling
    variable; the probe also tries its low multiples (2q, 3q), since the
    tunneling action of a two-term superpotential is a power of the
    reduced coupling b/|a|**q rather than the first power itself.
    """
    b = family.b
    if b <= 0 or family.q.is_zero:
        return None
    q = family.scaling_power
    floor = max(20.0 * solver_tol, 1e-12)

    def collect(lo: float, hi: float) -> list:
        out = []
        for aa in np.geomspace(lo, hi, n_probe):
            try:
                e, _ = _level_energy(family.potential_at(side * aa), N, solver_tol)
            except (ConvergenceError, NonConfiningError):
                continue
            if e > floor:
                out.append((side * aa, e))
        return out

    pts = collect(window[0], window[1])
    if 2 <= len(pts) < 6:
        # energies fell below the solver floor on part of the window;
        # densify over the range that is actually resolvable
        lo = min(abs(a) for a, _ in pts)
        pts = collect(lo, window[1])
    if len(pts) < 6:
        return None
    best = None
    for mult in (1.0, 2.0, 3.0):
        qe = q * mult
        t = np.array([b / abs(a) ** qe for a, _ in pts])
        y = np.array([math.log(e) - q * math.log(abs(a)) for a, e in pts])
        if np.ptp(y) < 1.0:
            continue  # no actual decay to fit
        corr = abs(float(np.corrcoef(t, y)[0, 1]))
        slope, intercept = np.polyfit(t, y, 1)
        alpha = -float(slope)
        if alpha <= 0:
            continue
        if best is None or corr > best[0]:
            best = (corr, qe, alpha, float(np.exp(intercept)))
    if best is None or best[0] < corr_threshold:
        return None
    corr, qe, alpha, beta = best
    amin = min(abs(a) for a, _ in pts)
    amax = max(abs(a) for a, _ in pts)
    return InstantonEvidence(
        "a<0" if side < 0 else "a>0", qe, alpha, corr, beta, (amin, amax), len(pts)
    )


def classify(
    family: FamilySpec,
    N: int = 0,
    eps0: float = 0.1,
    halvings: int = 8,
    tol_jump: float = 1e-3,
    tol_deriv: float = 1e-2,
    corr_threshold: float = 0.999,
    solver_tol: float = 1e-8,
    probe_window: tuple = (0.04, 0.4),
) -> TransitionClass:
    """Classify the a = 0 behavior of the level-N energy.

    Order of evidence: an energy jump is first order; resolved or
    divergent one-sided derivatives that differ are second order; an
    essential decay of a strictly positive side (log-linear in the scaled
    coupling with correlation above threshold) with continuous energy is
    infinite order; equal resolved derivatives with no essential decay is
    analytic.  Anything else raises UnresolvedClassificationError.
    """
    lim = limits_at_zero(
        family, N, eps0=eps0, halvings=halvings,
        solver_tol=solver_tol, conv_tol=tol_deriv / 5.0,
    )
    thresholds = {
        "eps0": eps0, "halvings": halvings, "tol_jump": tol_jump,
        "tol_deriv": tol_deriv, "corr_threshold": corr_threshold,
        "solver_tol": solver_tol,
    }

    vals = [lim.e_minus, lim.e_plus]
    if lim.e_at_zero is not None:
        vals.append(lim.e_at_zero)
    jump = max(abs(x - y) for x in vals for y in vals)
    if jump > tol_jump:
        return TransitionClass(TransitionKind.FIRST_ORDER, lim, jump, None, None, thresholds)

    dm, dp = lim.d_minus, lim.d_plus
    divergent = (dm.kind is DerivativeKind.DIVERGENT) or (dp.kind is DerivativeKind.DIVERGENT)
    both_ok = dm.kind is DerivativeKind.CONVERGED and dp.kind is DerivativeKind.CONVERGED
    gap = abs(dm.value - dp.value) if both_ok else None
    if divergent or (both_ok and gap > tol_deriv):
        return TransitionClass(TransitionKind.SECOND_ORDER, lim, jump, gap, None, thresholds)

    # essential decay probe (both sides); requires b > 0 by construction
    evidence = None
    for side in (-1.0, +1.0):
        ev = _instanton_probe(family, N, side, corr_threshold, solver_tol, probe_window)
        if ev is not None and (evidence is None or ev.correlation > evidence.correlation):
            evidence = ev
    if evidence is not None:
        return TransitionClass(TransitionKind.INFINITE_ORDER, lim, jump, gap, evidence, thresholds)

    if both_ok and gap <= tol_deriv:
        return TransitionClass(TransitionKind.ANALYTIC, lim, jump, gap, None, thresholds)

    raise UnresolvedClassificationError(
        "transition type could not be resolved: "
        f"jump={jump:.3g}, D-={dm.describe()}, D+={dp.describe()}, no essential decay detected",
        evidence=lim,
    )


# ---------------------------------------------------------------------------
# degeneracy checks


@dataclass(frozen=True)
class DegeneracyReport:
    susy_class: SusyClass
    pairs: tuple  # (N, E_first, E_second, deviation)
    ground_energy: Optional[float]
    max_deviation: float
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def check_degeneracy(w: Superpotential, K: int, tol: float = 1e-6) -> DegeneracyReport:
    """Verify the partner-spectrum relations implied by the SUSY class.

    Exact SUSY: the sector with the zero mode starts at 0 and the other
    sector's levels match it shifted by one.  Broken SUSY with even w:
    the two sectors are parity mirrors, so all levels coincide.
    """
    cls = classify_susy(w)
    vb, vf = partner_potentials(w)
    solver_tol = min(tol / 10.0, 1e-8)
    pairs = []
    violations = []
    ground = None

    if cls in (SusyClass.EXACT_BOSONIC, SusyClass.EXACT_FERMIONIC):
        zero_side, other = (vb, vf) if cls is SusyClass.EXACT_BOSONIC else (vf, vb)
        sz = solve_potential(zero_side, levels=K + 1, tol=solver_tol)
        so = solve_potential(other, levels=K, tol=solver_tol)
        ground = float(sz.energies[0])
        if abs(ground) > tol:
            violations.append(("E0", ground))
        for n in range(K):
            a, bb = float(sz.energies[n + 1]), float(so.energies[n])
            dev = abs(a - bb)
            pairs.append((n, a, bb, dev))
            if dev > tol:
                violations.append((n, dev))
    else:
        even_w = all(c == 0.0 for k, c in enumerate(w.coeffs) if k % 2 == 1)
        sb = solve_potential(vb, levels=K, tol=solver_tol)
        sf = solve_potential(vf, levels=K, tol=solver_tol)
        for n in range(K):
            a, bb = float(sb.energies[n]), float(sf.energies[n])
            dev = abs(a - bb)
            pairs.append((n, a, bb, dev))
            if even_w and dev > tol:
                violations.append((n, dev))
        if even_w and float(sb.energies[0]) <= tol:
            violations.append(("E0_positive", float(sb.energies[0])))

    max_dev = max((p[3] for p in pairs), default=0.0)
    return DegeneracyReport(cls, tuple(pairs), ground, max_dev, tuple(violations))
