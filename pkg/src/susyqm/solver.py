"""Finite-difference Schrodinger solver with Richardson extrapolation.

Convention: H = -d^2/dx^2 + V(x) on a Dirichlet box (atomic units,
mass 1/2).  Getting this factor wrong is the classic failure mode, so it
is pinned here once: V = x^2 must give E_N = 2N + 1.

The second-order central-difference eigenvalues carry a smooth O(h^2)
error expansion, which the solver removes by re-solving on halved grids
and extrapolating Romberg-style.  The reported err_N is the last change
of the extrapolated value, an a-posteriori estimate of what remains.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .potentials import Potential

__all__ = [
    "Grid",
    "TridiagonalOperator",
    "Spectrum",
    "EigenState",
    "SolveRequest",
    "ConvergenceError",
    "NonConfiningError",
    "auto_box",
    "build_hamiltonian",
    "lowest_eigenvalues",
    "solve",
    "solve_potential",
    "eigenstate",
    "expectation",
    "pt_coefficients",
]

MAX_GRID_POINTS = 4_000_000


class ConvergenceError(RuntimeError):
    """Eigenvalue refinement failed to reach the requested tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class NonConfiningError(ValueError):
    """Potential does not bind states and no hard wall was given."""


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid x_i = x_min + i*h, i = 1..n (Dirichlet ends)."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.x_min >= self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.n < 3:
            raise ValueError("need at least 3 interior points")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n + 1)

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(1, self.n + 1)

    def refined(self) -> "Grid":
        """Grid with exactly halved spacing (n -> 2n + 1)."""
        return Grid(self.x_min, self.x_max, 2 * self.n + 1)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal H: diag = 2/h^2 + V(x_i), offdiag = -1/h^2."""

    diag: np.ndarray
    offdiag: float
    grid: Grid

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        d.flags.writeable = False
        object.__setattr__(self, "diag", d)

    @property
    def n(self) -> int:
        return len(self.diag)


@dataclass(frozen=True)
class Spectrum:
    """Ordered eigenvalues with a-posteriori error estimates."""

    energies: np.ndarray
    errors: np.ndarray
    grid: Grid
    history: tuple = ()  # ((h, raw energies), ...) refinement diagnostics

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        r = np.asarray(self.errors, dtype=float)
        if np.any(np.diff(e) <= 0):
            raise ValueError("eigenvalues must be strictly increasing")
        if np.any(r < 0):
            raise ValueError("error estimates must be non-negative")
        e.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "errors", r)

    def __len__(self) -> int:
        return len(self.energies)

    def __getitem__(self, n: int) -> float:
        return float(self.energies[n])


@dataclass(frozen=True)
class EigenState:
    """Normalized grid-sampled eigenfunction."""

    energy: float
    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        h = self.grid.h
        norm = h * np.sum(s * s)  # trapezoid; the Dirichlet ends are zero
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: integral = {norm!r}")
        amax = np.max(np.abs(s))
        edge = max(abs(s[0]), abs(s[-1]))
        if edge > 1e-6 * amax:
            raise ValueError(
                "state does not vanish at the box edge "
                f"(|psi|_edge/|psi|_max = {edge / amax:.2e}); enlarge the box"
            )
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True)
class SolveRequest:
    potential: Potential
    levels: int = 1
    tol: float = 1e-9
    box: Optional[float] = None  # half-width override
    grid: Optional[Grid] = None  # coarsest-grid override

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


# ---------------------------------------------------------------------------
# box sizing


def _turning_bracket(V: Potential, E: float) -> tuple:
    """Outermost interval where V <= E (coarse, for box estimates only)."""
    if V.wall is not None:
        return (-V.wall, V.wall)
    c = V.poly_coeffs()
    if c is not None and len(c) > 1:
        cc = c.copy()
        cc[0] -= E
        roots = np.polynomial.polynomial.polyroots(cc)
        real = sorted(r.real for r in roots if abs(r.imag) < 1e-6 * (1 + abs(r)))
        if real:
            return (real[0], real[-1])
    xm, _ = V.global_min()
    span = 2.0
    while V(xm - span) < E or V(xm + span) < E:
        span *= 2.0
        if span > 1e6:
            break
    return (xm - span, xm + span)


def _crude_level_estimate(V: Potential, K: int) -> float:
    """Leading-order Bohr-Sommerfeld estimate of the K-th level (rough)."""
    if V.wall is not None:
        _, vmin = V.global_min()
        return vmin + (np.pi * (K + 1) / (2 * V.wall)) ** 2
    _, vmin = V.global_min()
    target = np.pi * (K + 0.5)

    def act(E):
        lo, hi = _turning_bracket(V, E)
        xs = np.linspace(lo, hi, 257)
        f = np.maximum(E - V(xs), 0.0)
        return np.trapezoid(np.sqrt(f), xs)

    E = vmin + 1.0
    for _ in range(200):
        if act(E) >= target:
            return E
        E = vmin + 2.0 * (E - vmin)
    return E


def auto_box(
    V: Potential,
    levels: int,
    tol: float = 1e-9,
    margin_energy: float = 25.0,
    check_stability: bool = True,
) -> float:
    """Half-width L with V(+-L) >= E_hat + margin, then doubled to stability.

    E_hat is a crude Bohr-Sommerfeld estimate of the highest requested
    level.  The doubling test compares the lowest eigenvalues at L and 2L
    on a common coarse spacing and stops once they move by < tol/10.
    """
    if V.wall is not None:
        return V.wall
    if not V.confining:
        raise NonConfiningError(
            "potential is not confining and has no hard wall; spectrum is not discrete"
        )
    e_hat = _crude_level_estimate(V, levels)
    lo, hi = _turning_bracket(V, e_hat + margin_energy)
    L = _pad_for_decay(V, max(abs(lo), abs(hi)), e_hat)
    if not check_stability:
        return L

    _, vmin = V.global_min(span=L)
    h0 = _initial_spacing(e_hat, vmin, 2 * L)
    # compare L against 2L at identical spacing so discretization bias cancels
    n = max(int(round(2 * L / h0)) - 1, 2 * levels + 40)
    if n % 2 == 0:
        n += 1
    prev = _raw_lowest(V, Grid(-L, L, n), levels)
    for _ in range(6):
        g2 = Grid(-2 * L, 2 * L, 2 * n + 1)
        cur = _raw_lowest(V, g2, levels)
        noise = 32 * np.finfo(float).eps * _norm_scale(V, g2)
        if np.max(np.abs(cur - prev)) < max(tol / 10.0, noise):
            return L
        L *= 2.0
        n = 2 * n + 1
        prev = cur
    return L


def _pad_for_decay(V: Potential, x_wall: float, e_top: float, S: float = 18.0) -> float:
    """Extend the box until the WKB decay integral past the wall reaches S.

    exp(-S) bounds the relative edge amplitude of every bound state below
    e_top, so S = 18 comfortably meets the 1e-6 edge-smallness invariant.
    """
    L = x_wall
    acc = 0.0
    step = max(0.02, x_wall / 200.0)
    while acc < S:
        kappa = np.sqrt(max(min(V(L), 1e12) - e_top, 0.0))
        acc += step * kappa
        L += step
        if L > x_wall + 60.0:
            break
    return L


def _norm_scale(V: Potential, g: Grid) -> float:
    return float(2.0 / g.h**2 + np.max(np.abs(V(g.points))))


def _initial_spacing(e_top: float, v_min: float, span: float) -> float:
    wavelength = 2.0 * np.pi / np.sqrt(max(e_top - v_min, 1.0))
    return min(wavelength / 16.0, span / 240.0)


def _grid_from_spacing(lo: float, hi: float, h: float, K: int) -> Grid:
    n = int(round((hi - lo) / h)) - 1
    n = max(n, 2 * K + 40, 201)
    if n % 2 == 0:
        n += 1  # keep the midpoint (x = 0 on symmetric boxes) on the grid
    if n > MAX_GRID_POINTS:
        raise ConvergenceError(f"grid of {n} points exceeds the cap {MAX_GRID_POINTS}")
    return Grid(lo, hi, n)


def _raw_lowest(V: Potential, g: Grid, K: int, refine: int = 1) -> np.ndarray:
    vals = np.asarray(lowest_eigenvalues(build_hamiltonian(V, g), K))
    for _ in range(refine):
        g = g.refined()
        finer = np.asarray(lowest_eigenvalues(build_hamiltonian(V, g), K))
        vals = (4.0 * finer - vals) / 3.0
    return vals


# ---------------------------------------------------------------------------
# discretization and eigenvalues


def build_hamiltonian(V: Potential, g: Grid) -> TridiagonalOperator:
    """Central-difference discretization of -d^2/dx^2 + V on g."""
    h = g.h
    diag = 2.0 / h**2 + V(g.points)
    return TridiagonalOperator(diag, -1.0 / h**2, g)


def lowest_eigenvalues(T: TridiagonalOperator, K: int) -> np.ndarray:
    """K smallest eigenvalues of the symmetric tridiagonal operator.

    LAPACK's bisection path (Sturm sequence counts plus inverse iteration)
    keeps the cost linear in the matrix size for small K; near-degenerate
    values come back ordered, ties resolved by index.
    """
    if K > T.n:
        raise ValueError(f"requested {K} eigenvalues from a {T.n}-point operator")
    off = np.full(T.n - 1, T.offdiag)
    return eigh_tridiagonal(
        T.diag, off, eigvals_only=True, select="i", select_range=(0, K - 1)
    )


def solve(req: SolveRequest) -> Spectrum:
    """Converged spectrum of the requested potential.

    Halves the grid spacing and extrapolates until successive extrapolated
    eigenvalues move by less than tol; raises ConvergenceError (with the
    refinement history attached) if the grid cap is hit first.
    """
    V = req.potential
    K = req.levels
    if req.grid is not None:
        g = req.grid
    else:
        L = req.box if req.box is not None else auto_box(V, K, req.tol)
        if V.wall is not None:
            L = min(L, V.wall)
        _, vmin = V.global_min(span=L)
        e_hat = _crude_level_estimate(V, K)
        g = _grid_from_spacing(-L, L, _initial_spacing(e_hat, vmin, 2 * L), K)

    history = []
    tableau = []  # Romberg rows: tableau[k][m], m-th extrapolation column
    best_prev = None
    errs = None
    for _level in range(8):
        if g.n > MAX_GRID_POINTS:
            break
        raw = np.asarray(lowest_eigenvalues(build_hamiltonian(V, g), K))
        history.append((g.h, raw))
        row = [raw]
        if tableau:
            prev_row = tableau[-1]
            for m in range(1, len(prev_row) + 1):
                fac = 4.0**m
                row.append((fac * row[m - 1] - prev_row[m - 1]) / (fac - 1.0))
        tableau.append(row)
        best = row[-1]
        if best_prev is not None:
            errs = np.abs(best - best_prev)
            # eigenvalues cannot be resolved below the rounding floor set by
            # the operator norm (kinetic scale 2/h^2 plus the edge potential)
            floor = 32 * np.finfo(float).eps * _norm_scale(V, g)
            if np.max(errs) < max(req.tol, 3 * floor):
                return Spectrum(best, np.maximum(errs, floor), g, tuple(history))
        best_prev = best
        g = g.refined()

    raise ConvergenceError(
        f"eigenvalues did not converge to tol={req.tol} within the grid cap "
        f"(last change {np.max(errs) if errs is not None else np.inf:.3e})",
        history=history,
    )


def solve_potential(
    V: Potential, levels: int = 1, tol: float = 1e-9, box: Optional[float] = None
) -> Spectrum:
    """Convenience wrapper around solve(SolveRequest(...))."""
    return solve(SolveRequest(V, levels=levels, tol=tol, box=box))


# ---------------------------------------------------------------------------
# eigenstates and matrix elements


def eigenstate(T: TridiagonalOperator, E: float, max_iter: int = 12) -> EigenState:
    """Inverse iteration at a converged eigenvalue E of T."""
    n = T.n
    h = T.grid.h
    scale = float(np.max(np.abs(T.diag)))
    shift = E + 1e-13 * scale  # avoid an exactly singular shift
    ab = np.zeros((3, n))
    ab[0, 1:] = T.offdiag
    ab[1, :] = T.diag - shift
    ab[2, :-1] = T.offdiag
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    ray = None
    for _ in range(max_iter):
        v = solve_banded((1, 1), ab, v)
        v /= np.linalg.norm(v)
        prev, ray = ray, float(
            v @ (T.diag * v) + 2.0 * T.offdiag * np.sum(v[:-1] * v[1:])
        )
        if prev is not None and abs(ray - prev) < 1e-13 * max(1.0, abs(ray)):
            break
    if prev is not None and abs(ray - prev) > 1e-8 * max(1.0, abs(ray)):
        raise ConvergenceError("inverse iteration stagnated")
    if abs(ray - E) > 1e-6 * max(1.0, abs(E)):
        raise ConvergenceError(
            f"inverse iteration converged to {ray!r}, not the requested {E!r}"
        )
    v = v / np.sqrt(h * np.sum(v * v))
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return EigenState(float(ray), T.grid, v)


def expectation(state: EigenState, O: Potential) -> float:
    """<psi| O(x) |psi> by the composite rule on the state's grid."""
    x = state.grid.points
    return float(state.grid.h * np.sum(state.samples**2 * O(x)))


def _pt_on_grid(V0, W1, W2, n_states, g: Grid):
    T = build_hamiltonian(V0, g)
    off = np.full(T.n - 1, T.offdiag)
    w, v = eigh_tridiagonal(T.diag, off, select="i", select_range=(0, n_states))
    v = v / np.sqrt(g.h)  # continuum normalization
    x = g.points
    psi0 = v[:, 0]
    e0 = float(w[0])
    gaps = e0 - w[1:]
    if np.any(np.abs(gaps) < 1e-12 * max(1.0, abs(e0))):
        raise ValueError("degenerate unperturbed level encountered in the PT sum")
    w1x = W1(x)
    e1 = g.h * float(np.sum(psi0**2 * w1x))
    me = g.h * (v[:, 1:].T @ (w1x * psi0))
    e2 = g.h * float(np.sum(psi0**2 * W2(x))) + float(np.sum(me**2 / gaps))
    return e0, e1, e2


def pt_coefficients(
    V0: Potential, W1: Potential, W2: Potential, n_states: int = 200
) -> tuple:
    """Rayleigh-Schrodinger coefficients (e0, e1, e2) for V0 + a W1 + a^2 W2.

    e2 uses the sum-over-states form truncated at n_states.  The
    coefficients are evaluated on two grids and Richardson-extrapolated to
    remove the O(h^2) discretization bias.
    """
    if not V0.confining:
        raise NonConfiningError("unperturbed potential must be confining")
    L = auto_box(V0, n_states + 1, tol=1e-8, check_stability=False)
    e_top = _crude_level_estimate(V0, n_states + 1)
    _, vmin = V0.global_min(span=L)
    g = _grid_from_spacing(-L, L, _initial_spacing(e_top, vmin, 2 * L), n_states + 1)
    a = _pt_on_grid(V0, W1, W2, n_states, g)
    b = _pt_on_grid(V0, W1, W2, n_states, g.refined())
    return tuple((4.0 * bb - aa) / 3.0 for aa, bb in zip(a, b))
