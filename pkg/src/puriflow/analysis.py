"""Post-processing: surface-of-section analysis, largest-Lyapunov
estimates, and observable time series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import DistinguishedAlgebra, HermitianOperator, OperatorLike
from .reduced import energy_shell_grid, make_field, rk4_step


def observable_series(states_or_densities: np.ndarray, op: OperatorLike) -> np.ndarray:
    """Per-sample expectation of an observable along a trajectory.

    Accepts an (n, N) array of pure-state amplitudes or an (n, N, N) array
    of density matrices; pure and density inputs agree when the densities
    are the states' projectors.
    """
    m = op.matrix if isinstance(op, HermitianOperator) else np.asarray(op, dtype=complex)
    arr = np.asarray(states_or_densities)
    if arr.ndim == 2:
        if arr.shape[1] != m.shape[0]:
            raise ValueError("state and operator dimensions differ")
        mc = arr @ m.T
        nrm = np.einsum("ti,ti->t", arr.conj(), arr).real
        return np.einsum("ti,ti->t", arr.conj(), mc).real / nrm
    if arr.ndim == 3:
        if arr.shape[1] != m.shape[0]:
            raise ValueError("density and operator dimensions differ")
        return np.einsum("tij,ji->t", arr, m).real
    raise ValueError(f"expected states (n,N) or densities (n,N,N), got shape {arr.shape}")


def fluctuation_series(states_or_densities: np.ndarray,
                       algebra: DistinguishedAlgebra) -> np.ndarray:
    """Invariant fluctuation per sample, for pure or mixed trajectories.

    Mixed-state samples use total dispersion sum_l Tr[rho L^2] - Tr[rho L]^2.
    """
    arr = np.asarray(states_or_densities)
    stack = algebra.stack()
    if arr.ndim == 2:
        lc = np.einsum("lij,tj->tli", stack, arr)
        nrm = np.einsum("ti,ti->t", arr.conj(), arr).real
        means = np.einsum("tli,ti->tl", lc, arr.conj()).real / nrm[:, None]
        seconds = np.einsum("tli,tli->tl", lc.conj(), lc).real / nrm[:, None]
        return np.sum(seconds - means ** 2, axis=1)
    if arr.ndim == 3:
        squares = algebra.squares_sum()
        total = np.einsum("tij,ji->t", arr, squares).real
        means = np.einsum("tij,lji->tl", arr, stack).real
        return total - np.sum(means ** 2, axis=1)
    raise ValueError(f"expected states (n,N) or densities (n,N,N), got {arr.shape}")


@dataclass(frozen=True)
class SectionPoint:
    """One refined crossing of the surface q2 = 0 with p2 > 0."""

    q1: float
    p1: float
    crossing_time: float


def _refine_crossing(field, y_before, t_before: float, dt: float,
                     tol: float = 1e-9, max_iter: int = 80
                     ) -> Tuple[Tuple[float, float, float, float], float]:
    """Bisect the substep length until |q2| <= tol at the crossing.

    Each candidate is reached by one RK4 substep from the stored
    pre-crossing state, so the refinement is consistent with the flow.
    """
    lo, hi = 0.0, dt
    y_hi = rk4_step(field, y_before, dt)
    y_mid, tau = y_hi, dt
    for _ in range(max_iter):
        tau = 0.5 * (lo + hi)
        y_mid = rk4_step(field, y_before, tau)
        if abs(y_mid[1]) <= tol:
            break
        if (y_mid[1] < 0.0) == (y_before[1] < 0.0):
            lo = tau
        else:
            hi = tau
    return y_mid, t_before + tau


def section_of_orbit(y0, variant: str, mu: float, omega: float, t_max: float,
                     dt: float = 2e-3, tol: float = 1e-9,
                     field: Optional[Callable] = None) -> List[SectionPoint]:
    """Crossings q2 = 0, p2 > 0 of a single orbit.

    ``field`` overrides the built-in variant field (used for reversal
    checks); it must map a 4-tuple to a 4-tuple.
    """
    if field is None:
        field = make_field(variant, mu, omega)
    y = tuple(float(v) for v in np.asarray(y0, dtype=float))
    points = []
    n_steps = int(round(t_max / dt))
    # a start exactly on the section counts as a crossing
    if abs(y[1]) <= tol and y[3] > 0.0:
        points.append(SectionPoint(y[0], y[2], 0.0))
    for k in range(n_steps):
        y_next = rk4_step(field, y, dt)
        q2a, q2b = y[1], y_next[1]
        # strict sign on the entry side so a grid point landing exactly on
        # the section is credited to one interval only
        if (q2a > 0.0 and q2b <= 0.0) or (q2a < 0.0 and q2b >= 0.0):
            y_cross, t_cross = _refine_crossing(field, y, k * dt, dt, tol)
            if y_cross[3] > 0.0 and abs(y_cross[1]) <= tol:
                points.append(SectionPoint(y_cross[0], y_cross[2], t_cross))
        y = y_next
    if not np.all(np.isfinite(y)):
        raise ValueError("orbit became non-finite during section sweep")
    return points


def poincare_section(variant: str, mu: float, omega: float, energy: float,
                     n_orbits: int, t_max: float, dt: float = 2e-3
                     ) -> List[SectionPoint]:
    """Section points from a grid of initial conditions on one energy shell.

    Initial conditions are sampled on the section itself (q2 = 0, p2 > 0
    solved from the energy); shells with no admissible point raise.
    """
    side = max(3, int(np.ceil(np.sqrt(n_orbits))))
    candidates = energy_shell_grid(variant, mu, omega, energy,
                                   n_q1=side, n_p1=side)
    points: List[SectionPoint] = []
    for y0 in candidates[:n_orbits]:
        points.extend(section_of_orbit(y0, variant, mu, omega, t_max, dt))
    return points


def box_occupancy(points: Sequence[SectionPoint], grid: int = 50,
                  bounds: Optional[Tuple[float, float, float, float]] = None) -> int:
    """Number of occupied cells of a grid x grid partition of the plane.

    ``bounds`` is (q1_min, q1_max, p1_min, p1_max); by default the points'
    own bounding box.  A curve-like point set occupies O(grid) cells, an
    area-filling one O(grid^2).
    """
    if not points:
        return 0
    q = np.array([p.q1 for p in points])
    p = np.array([p.p1 for p in points])
    if bounds is None:
        bounds = (q.min(), q.max(), p.min(), p.max())
    q0, q1, p0, p1 = bounds
    dq = max(q1 - q0, 1e-12)
    dp = max(p1 - p0, 1e-12)
    iq = np.clip(((q - q0) / dq * grid).astype(int), 0, grid - 1)
    ip = np.clip(((p - p0) / dp * grid).astype(int), 0, grid - 1)
    return int(np.unique(iq * grid + ip).size)


def largest_lyapunov(field: Callable, y0, t_total: float, renorm_dt: float = 1.0,
                     dt: float = 2e-3, d0: float = 1e-8,
                     seed: int = 20) -> Tuple[float, float]:
    """Two-orbit largest-Lyapunov estimate with periodic renormalization.

    A shadow orbit offset by d0 is co-evolved; every ``renorm_dt`` the log
    separation growth is banked and the offset rescaled back to d0.
    Returns (estimate, standard error over renormalization intervals).
    """
    if renorm_dt <= dt:
        raise ValueError("renorm_dt must exceed the integration step")
    y = tuple(float(v) for v in np.asarray(y0, dtype=float))
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(len(y))
    direction /= np.linalg.norm(direction)
    shadow = tuple(y[i] + d0 * direction[i] for i in range(len(y)))

    steps_per_interval = int(round(renorm_dt / dt))
    n_intervals = int(round(t_total / renorm_dt))
    logs = np.empty(n_intervals)
    for interval in range(n_intervals):
        for _ in range(steps_per_interval):
            y = rk4_step(field, y, dt)
            shadow = rk4_step(field, shadow, dt)
        diff = np.subtract(shadow, y)
        dist = float(np.linalg.norm(diff))
        if not np.isfinite(dist) or dist == 0.0:
            raise ValueError("degenerate separation in Lyapunov sweep")
        logs[interval] = np.log(dist / d0)
        shadow = tuple(y[i] + (d0 / dist) * diff[i] for i in range(len(y)))
    rates = logs / renorm_dt
    estimate = float(np.mean(rates))
    stderr = float(np.std(rates, ddof=1) / np.sqrt(n_intervals)) if n_intervals > 1 else 0.0
    return estimate, stderr
