"""Closed-form constrained flows of the qubit pair in product-state charts.

On the product manifold each qubit is a projective coordinate
w_i = (q_i + i p_i)/sqrt(2); the pair state is

    psi(q, p) ~ (1, w_2, w_1, w_1 w_2)   (computational ordering),

so the product condition c_1 c_4 = c_2 c_3 holds identically and the
dependent pair coordinates sqrt(2) q_3 = q_1 q_2 - p_1 p_2,
sqrt(2) p_3 = p_1 q_2 + p_2 q_1 are reconstructed rather than evolved.

Two Hamiltonian variants are supported, both with z fields of strength
omega and coupling mu:

* "s"  - z-z coupling.  The constrained flow preserves both mode radii
         (each Bloch vector precesses with a constant z component), so the
         dynamics is integrable and regular.
* "ns" - x-x coupling.  The flow couples the charts nonlinearly and is
         the chaotic representative.

The rational vector fields below are exactly the variational (mean-field)
projections of the Schroedinger flow onto the product manifold; tests
check them against that projection computed numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .core import PureState

VARIANTS = ("s", "ns")


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"unknown reduced-system variant {variant!r}; use 's' or 'ns'")


@dataclass(frozen=True)
class ReducedTwoQubitState:
    """Chart point of the product manifold plus its couplings."""

    q1: float
    q2: float
    p1: float
    p2: float
    mu: float
    omega: float = 1.0
    variant: str = "ns"

    def __post_init__(self):
        _check_variant(self.variant)

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.p1, self.p2])

    def pair_coordinates(self) -> Tuple[float, float]:
        """Dependent coordinates (q3, p3), exact by construction."""
        q3 = (self.q1 * self.q2 - self.p1 * self.p2) / np.sqrt(2)
        p3 = (self.p1 * self.q2 + self.p2 * self.q1) / np.sqrt(2)
        return q3, p3


def reduced_field(y, variant: str, mu: float, omega: float = 1.0) -> np.ndarray:
    """Right-hand side (dq1, dq2, dp1, dp2) of the reduced constrained flow."""
    f = make_field(variant, mu, omega)
    return np.array(f(tuple(np.asarray(y, dtype=float))))


def make_field(variant: str, mu: float, omega: float = 1.0
               ) -> Callable[[Tuple[float, float, float, float]], Tuple[float, float, float, float]]:
    """Scalar-tuple field closure (fast enough for long orbit integrations)."""
    _check_variant(variant)
    tw = 2.0 * omega

    if variant == "ns":
        def field(y):
            q1, q2, p1, p2 = y
            d1 = 2.0 + p1 * p1 + q1 * q1
            d2 = 2.0 + p2 * p2 + q2 * q2
            fourmu = 4.0 * mu * q1 * q2
            return (-fourmu * p1 / d2 - tw * p1,
                    -fourmu * p2 / d1 - tw * p2,
                    2.0 * mu * q2 * (q1 * q1 - p1 * p1 - 2.0) / d2 + tw * q1,
                    2.0 * mu * q1 * (q2 * q2 - p2 * p2 - 2.0) / d1 + tw * q2)
        return field

    def field(y):
        q1, q2, p1, p2 = y
        r1 = p1 * p1 + q1 * q1
        r2 = p2 * p2 + q2 * q2
        g1 = tw - 2.0 * mu * (r2 - 2.0) / (2.0 + r2)   # effective rate for mode 1
        g2 = tw - 2.0 * mu * (r1 - 2.0) / (2.0 + r1)
        return (-g1 * p1, -g2 * p2, g1 * q1, g2 * q2)
    return field


def chart_state(y) -> PureState:
    """Normalized product state of a chart point."""
    q1, q2, p1, p2 = np.asarray(y, dtype=float)
    w1 = (q1 + 1j * p1) / np.sqrt(2)
    w2 = (q2 + 1j * p2) / np.sqrt(2)
    single1 = np.array([1.0, w1]) / np.sqrt(1 + abs(w1) ** 2)
    single2 = np.array([1.0, w2]) / np.sqrt(1 + abs(w2) ** 2)
    return PureState(np.kron(single1, single2))


def bloch_components(y) -> Tuple[float, float, float, float]:
    """(s1, s2, x1, x2): z and x Bloch components of the two factors."""
    q1, q2, p1, p2 = np.asarray(y, dtype=float)
    d1 = 2.0 + p1 * p1 + q1 * q1
    d2 = 2.0 + p2 * p2 + q2 * q2
    s1 = (2.0 - p1 * p1 - q1 * q1) / d1
    s2 = (2.0 - p2 * p2 - q2 * q2) / d2
    x1 = 2.0 * np.sqrt(2) * q1 / d1
    x2 = 2.0 * np.sqrt(2) * q2 / d2
    return s1, s2, x1, x2


def chart_energy(y, variant: str, mu: float, omega: float = 1.0) -> float:
    """Product-state energy of a chart point (conserved along the flow)."""
    _check_variant(variant)
    s1, s2, x1, x2 = bloch_components(y)
    coupling = s1 * s2 if variant == "s" else x1 * x2
    return float(omega * (s1 + s2) + mu * coupling)


def energy_shell_point(variant: str, mu: float, omega: float, energy: float,
                       q1: float, p1: float, p2_max: float = 40.0
                       ) -> Optional[np.ndarray]:
    """Solve for p2 > 0 on the section q2 = 0 at the requested energy.

    Returns the chart point [q1, 0, p1, p2] or None when the shell misses
    this (q1, p1) column.
    """
    def f(p2):
        return chart_energy((q1, 0.0, p1, p2), variant, mu, omega) - energy

    grid = np.linspace(1e-9, p2_max, 200)
    vals = np.array([f(p) for p in grid])
    sign_change = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if sign_change.size == 0:
        return None
    a, b = grid[sign_change[0]], grid[sign_change[0] + 1]
    p2 = brentq(f, a, b, xtol=1e-13, rtol=1e-15)
    return np.array([q1, 0.0, p1, p2])


def energy_shell_grid(variant: str, mu: float, omega: float, energy: float,
                      n_q1: int = 6, n_p1: int = 6, q1_range: float = 1.5,
                      p1_range: float = 1.5) -> List[np.ndarray]:
    """Grid of section initial conditions on one energy shell.

    (q1, p1) are sampled on a regular interior grid with q2 = 0, and
    p2 > 0 solved by one-dimensional root finding; columns with no real
    solution are skipped.
    """
    points = []
    # skip the grid frame: admissible columns live in a bounded disk
    q1s = np.linspace(-q1_range, q1_range, n_q1 + 2)[1:-1]
    p1s = np.linspace(-p1_range, p1_range, n_p1 + 2)[1:-1]
    for q1 in q1s:
        for p1 in p1s:
            y = energy_shell_point(variant, mu, omega, energy, q1, p1)
            if y is not None:
                points.append(y)
    if not points:
        raise ValueError(f"no admissible initial condition on the shell "
                         f"energy={energy} for variant {variant!r}")
    return points


def rk4_step(field, y: Tuple[float, float, float, float], dt: float
             ) -> Tuple[float, float, float, float]:
    """One scalar-tuple RK4 step (kept allocation-free for orbit loops)."""
    a1, a2, a3, a4 = field(y)
    h = 0.5 * dt
    y2 = (y[0] + h * a1, y[1] + h * a2, y[2] + h * a3, y[3] + h * a4)
    b1, b2, b3, b4 = field(y2)
    y3 = (y[0] + h * b1, y[1] + h * b2, y[2] + h * b3, y[3] + h * b4)
    c1, c2, c3, c4 = field(y3)
    y4 = (y[0] + dt * c1, y[1] + dt * c2, y[2] + dt * c3, y[3] + dt * c4)
    d1, d2, d3, d4 = field(y4)
    s = dt / 6.0
    return (y[0] + s * (a1 + 2 * (b1 + c1) + d1),
            y[1] + s * (a2 + 2 * (b2 + c2) + d2),
            y[2] + s * (a3 + 2 * (b3 + c3) + d3),
            y[3] + s * (a4 + 2 * (b4 + c4) + d4))


def integrate_reduced(y0, variant: str, mu: float, omega: float, dt: float,
                      t_final: float, sample_stride: int = 1
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """RK4 orbit of a reduced flow, sampled every ``sample_stride`` steps."""
    if dt <= 0 or t_final <= dt:
        raise ValueError("need dt > 0 and t_final > dt")
    field = make_field(variant, mu, omega)
    y = tuple(float(v) for v in np.asarray(y0, dtype=float))
    n_steps = int(round(t_final / dt))
    times = [0.0]
    samples = [y]
    for k in range(1, n_steps + 1):
        y = rk4_step(field, y, dt)
        if k % sample_stride == 0 or k == n_steps:
            times.append(k * dt)
            samples.append(y)
    ys = np.array(samples)
    if not np.all(np.isfinite(ys)):
        raise ValueError("reduced orbit became non-finite")
    return np.array(times), ys
