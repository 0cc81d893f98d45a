"""Purity-constrained nonlinear flows and their integrators.

The full flow removes from the Hamiltonian vector field its component along
the constraint gradient,

    dx/dt = omega grad H - lambda grad Phi,
    lambda = {Phi, H} / |grad Phi|^2,

which conserves Phi exactly in continuous time.  On the coherent manifold
itself grad Phi vanishes (the constraint surface is the extremum set), so
the multiplier degenerates to 0/0 there; the field evaluation then drops
the constraint force, which is exact whenever the numerator vanishes with
the gradient (the only case coherent inputs can produce).

The weak-coupling ("simplified") flow replaces the multiplier term by a
variance-decreasing drift,

    dpsi/dt = -i H psi - gamma sum_l (L_l - <L_l>)^2 psi,

projected to preserve the norm.  With this sign the total dispersion of the
generator set is nonincreasing (its time derivative is -2 gamma Var of the
squared deviation operator when H = 0), which drives states onto the
coherent manifold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .core import (DistinguishedAlgebra, HermitianOperator, OperatorLike,
                   PureState)
from .geometry import (SQRT2, complex_amplitudes, constraint_value_gradient_c,
                       hamiltonian_field_c, real_gradient)


class MultiplierSingularError(Exception):
    """The multiplier denominator |grad Phi|^2 fell below the singular floor.

    Carries both the numerator {Phi, H} and the denominator so callers can
    distinguish a consistent critical point (numerator ~ 0, drop the
    constraint force) from an inconsistent one.
    """

    def __init__(self, numerator: float, denominator: float):
        self.numerator = numerator
        self.denominator = denominator
        super().__init__(
            f"constraint gradient is singular: {{Phi,H}}={numerator:.3e}, "
            f"|grad Phi|^2={denominator:.3e}")


class InconsistentConstraintError(RuntimeError):
    """Singular constraint gradient with a non-negligible numerator."""


class IntegrationError(RuntimeError):
    """Non-finite state encountered during time stepping."""


@dataclass
class ConstrainedFlowSpec:
    """Everything needed to evaluate a constrained flow.

    mode "full" uses the exact multiplier; mode "simplified" uses the
    variance drift scaled by ``gamma`` (gamma is ignored in full mode, where
    the multiplier is determined, not tuned).
    """

    hamiltonian: OperatorLike
    algebra: DistinguishedAlgebra
    constraint_form: str = "purity"
    mode: str = "full"
    gamma: float = 0.0
    singular_floor: float = 1e-12

    def __post_init__(self):
        h = self.hamiltonian
        self.hamiltonian = h if isinstance(h, HermitianOperator) else HermitianOperator(h)
        if self.hamiltonian.dim != self.algebra.dim:
            raise ValueError("Hamiltonian and algebra dimensions differ")
        if self.mode not in ("full", "simplified"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.constraint_form not in ("purity", "fluctuation"):
            raise ValueError(f"unknown constraint form {self.constraint_form!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


class _FlowKernel:
    """Flat-stacked operator caches for the hot integration loop.

    The generator stack is kept as an (m*N, N) matrix so one gemv yields
    all L_l psi products; scalar reductions go through np.vdot.
    """

    def __init__(self, spec: ConstrainedFlowSpec):
        self.spec = spec
        self.h = spec.hamiltonian.matrix
        stack = spec.algebra.stack()
        self.m, self.n = stack.shape[0], stack.shape[1]
        self.flat = np.ascontiguousarray(stack.reshape(self.m * self.n, self.n))
        self.squares = spec.algebra.squares_sum()
        self.form = spec.constraint_form
        if self.form == "purity":
            self.offset = spec.algebra.purity_max
            if self.offset is None:
                raise ValueError(f"algebra {spec.algebra.label!r} has no purity bound; "
                                 "use the fluctuation form")
        else:
            self.offset = spec.algebra.fluctuation_min
            if self.offset is None:
                raise ValueError(f"algebra {spec.algebra.label!r} has no fluctuation bound")

    def _means(self, c, nrm):
        lc = (self.flat @ c).reshape(self.m, self.n)
        means = (lc @ c.conj()).real / nrm
        return lc, means

    def phi(self, c: np.ndarray) -> float:
        """Constraint value (Rayleigh convention, any normalization)."""
        nrm = np.vdot(c, c).real
        lc, means = self._means(c, nrm)
        purity = float(means @ means)
        if self.form == "purity":
            return purity - self.offset
        seconds = float(np.vdot(lc, lc).real) / nrm
        return seconds - purity - self.offset

    def phi_and_grad(self, c: np.ndarray) -> Tuple[float, np.ndarray]:
        """Constraint value and complexified gradient."""
        nrm = np.vdot(c, c).real
        lc, means = self._means(c, nrm)
        purity = float(means @ means)
        grad_p = (2.0 * SQRT2 / nrm) * ((means @ lc) - purity * c)
        if self.form == "purity":
            return purity - self.offset, grad_p
        sq_c = self.squares @ c
        sq_mean = np.vdot(c, sq_c).real / nrm
        grad_sq = (SQRT2 / nrm) * (sq_c - sq_mean * c)
        return float(sq_mean - purity - self.offset), grad_sq - grad_p

    def hamiltonian_field(self, c: np.ndarray, nrm: float) -> np.ndarray:
        hc = self.h @ c
        mean = np.vdot(c, hc).real / nrm
        return (-1j * SQRT2 / nrm) * (hc - mean * c)

    def parts(self, c: np.ndarray):
        nrm = np.vdot(c, c).real
        ham_field = self.hamiltonian_field(c, nrm)
        phi, grad_phi = self.phi_and_grad(c)
        numerator = float(np.vdot(grad_phi, ham_field).real)
        denominator = float(np.vdot(grad_phi, grad_phi).real)
        return numerator, denominator, grad_phi, ham_field

    def field(self, c: np.ndarray) -> np.ndarray:
        num, den, grad_phi, ham_field = self.parts(c)
        if den <= self.spec.singular_floor:
            _require_consistent_numerator(num, den, ham_field)
            return ham_field
        return ham_field - (num / den) * grad_phi

    def state_derivative(self, c: np.ndarray) -> np.ndarray:
        """dc/dt: the (dq + i dp) carrier converts to amplitudes via 1/sqrt2."""
        return self.field(c) * (1.0 / SQRT2)

    def project_step(self, c: np.ndarray, trigger: float = 1e-9,
                     max_iter: int = 32) -> Tuple[np.ndarray, float]:
        """Newton return map toward Phi = 0, applied while |Phi| > trigger.

        Phi has a double root along its gradient near the coherent
        manifold, so one Newton step contracts |Phi| by about a factor 4;
        the common case is zero or one iteration per call.  Returns the
        (possibly projected) state and its constraint value.
        """
        phi, grad = self.phi_and_grad(c)
        for _ in range(max_iter):
            if abs(phi) <= trigger:
                break
            den = np.vdot(grad, grad).real
            if den <= self.spec.singular_floor:
                break
            c = c - (phi / den) / SQRT2 * grad
            c = c / np.sqrt(np.vdot(c, c).real)
            phi, grad = self.phi_and_grad(c)
        return c, phi


def _require_consistent_numerator(num: float, den: float, ham_field: np.ndarray):
    """Reject a singular denominator with an impossible numerator.

    The numerator is a projection of the Hamiltonian field onto the
    constraint gradient, so |num| <= sqrt(den) * |field| always holds for
    well-formed inputs; a violation means the numerator and gradient were
    computed from inconsistent states.  Within the bound the constraint
    force is dropped (the critical-point fallback covers both the trivial
    single-qubit case and transient stage evaluations right on the
    coherent manifold).
    """
    scale = float(np.vdot(ham_field, ham_field).real) ** 0.5
    bound = 10.0 * np.sqrt(max(den, 0.0)) * max(scale, 1.0) + 1e-15
    if abs(num) > bound:
        raise InconsistentConstraintError(
            f"singular constraint gradient with numerator {num:.3e} "
            f"(bound {bound:.3e})")


def _multiplier_parts(c: np.ndarray, spec: ConstrainedFlowSpec
                      ) -> Tuple[float, float, np.ndarray, np.ndarray]:
    """(numerator, denominator, grad Phi, hamiltonian field), complexified.

    Uses the shared geometry kernels on arbitrary (not necessarily unit
    norm) amplitudes; the fast unit-norm path lives in _FlowKernel.
    """
    ham_field = hamiltonian_field_c(c, spec.hamiltonian.matrix)
    _, grad_phi = constraint_value_gradient_c(c, spec.algebra, spec.constraint_form)
    # real-vector dot products via the complex carriers
    numerator = float(np.vdot(grad_phi, ham_field).real)
    denominator = float(np.vdot(grad_phi, grad_phi).real)
    return numerator, denominator, grad_phi, ham_field


def lagrange_multiplier(x: np.ndarray, spec: ConstrainedFlowSpec) -> float:
    """lambda = {Phi, H} / |grad Phi|^2 at a canonical point.

    Raises MultiplierSingularError when the denominator is at or below the
    spec's singular floor (critical point of Phi, e.g. anywhere for a
    single qubit with the full Pauli set).
    """
    c = complex_amplitudes(x)
    num, den, _, _ = _multiplier_parts(c, spec)
    if den <= spec.singular_floor:
        raise MultiplierSingularError(num, den)
    return num / den


def constrained_field(x: np.ndarray, spec: ConstrainedFlowSpec) -> np.ndarray:
    """Right-hand side of the full constrained flow at a canonical point.

    At critical points of Phi the constraint force is dropped when the
    numerator vanishes as well (consistent trivial constraint); otherwise
    the constraint cannot be enforced and an error is raised.
    """
    c = complex_amplitudes(x)
    field_c = _constrained_field_c(c, spec)
    return real_gradient(field_c)


def _constrained_field_c(c: np.ndarray, spec: ConstrainedFlowSpec) -> np.ndarray:
    num, den, grad_phi, ham_field = _multiplier_parts(c, spec)
    if den <= spec.singular_floor:
        _require_consistent_numerator(num, den, ham_field)
        return ham_field
    return ham_field - (num / den) * grad_phi


def simplified_field(state: Union[PureState, np.ndarray],
                     spec: ConstrainedFlowSpec) -> np.ndarray:
    """Complex state derivative of the weak-coupling flow.

    The raw drift -i H psi - gamma sum_l (L_l - <L_l>)^2 psi shrinks the
    norm at rate gamma * Delta; the radial component is removed so the
    returned derivative is norm-preserving.
    """
    c = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    if c.size != spec.algebra.dim:
        raise ValueError("state and algebra dimensions differ")
    return _simplified_kernel(spec).derivative(c)


class _simplified_kernel:
    """Precomputed operator stacks for the weak-coupling drift."""

    def __init__(self, spec: ConstrainedFlowSpec):
        self.h = spec.hamiltonian.matrix
        stack = spec.algebra.stack()
        self.m, self.n = stack.shape[0], stack.shape[1]
        self.flat = np.ascontiguousarray(stack.reshape(self.m * self.n, self.n))
        self.squares = spec.algebra.squares_sum()
        self.gamma = spec.gamma

    def derivative(self, c: np.ndarray) -> np.ndarray:
        nrm = np.vdot(c, c).real
        hc = self.h @ c
        lc = (self.flat @ c).reshape(self.m, self.n)
        means = (lc @ c.conj()).real / nrm
        purity = float(means @ means)
        sq_c = self.squares @ c
        dev2_c = sq_c - 2.0 * (means @ lc) + purity * c
        fluctuation = np.vdot(c, sq_c).real / nrm - purity
        raw = -1j * hc - self.gamma * dev2_c
        # radial part of the drift is -gamma * fluctuation * psi
        return raw + self.gamma * fluctuation * c


@dataclass
class WcaEntry:
    """Least-squares eigenoperator fit for one coupling operator."""

    fitted_eigenvalue: complex
    residual: float
    relative_residual: float


@dataclass
class WcaReport:
    """Outcome of the weak-coupling condition check [H, L] = lambda L."""

    entries: List[WcaEntry]
    tolerance: float

    @property
    def satisfied(self) -> bool:
        return all(e.relative_residual < self.tolerance for e in self.entries)


def wca_check(hamiltonian: OperatorLike,
              operators: Union[DistinguishedAlgebra, Sequence],
              tol: float = 1e-8) -> WcaReport:
    """Check whether each coupling operator is an eigenoperator of ad_H.

    For each L the scalar lambda minimizing ||[H, L] - lambda L||_F is
    fitted (lambda may be complex; ladder combinations of Hermitian
    generators have real eigenvalues, Hermitian ones only imaginary or
    zero).  Residuals are reported relative to ||L||_F.
    """
    h = hamiltonian.matrix if isinstance(hamiltonian, HermitianOperator) \
        else np.asarray(hamiltonian, dtype=complex)
    if isinstance(operators, DistinguishedAlgebra):
        mats = [g.matrix for g in operators.generators]
    else:
        mats = [op.matrix if isinstance(op, HermitianOperator)
                else np.asarray(op, dtype=complex) for op in operators]
    entries = []
    for m in mats:
        comm = h @ m - m @ h
        norm_sq = np.vdot(m, m).real
        lam = complex(np.vdot(m, comm) / norm_sq)
        residual = float(np.linalg.norm(comm - lam * m))
        entries.append(WcaEntry(lam, residual, residual / np.sqrt(norm_sq)))
    return WcaReport(entries, tol)


@dataclass
class Trajectory:
    """Sampled constrained-flow history with per-sample diagnostics."""

    times: np.ndarray
    states: np.ndarray          # (n_samples, N) complex amplitudes
    phi: np.ndarray
    purity: np.ndarray
    fluctuation: np.ndarray
    energy: np.ndarray
    max_abs_phi: float

    def state(self, k: int) -> PureState:
        return PureState(self.states[k])


def _rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_flow(spec: ConstrainedFlowSpec, initial: PureState, dt: float,
                   t_final: float, projection: bool = False,
                   sample_stride: int = 1) -> Trajectory:
    """Fixed-step RK4 integration of a constrained flow.

    The state is renormalized after every step.  With ``projection`` on, a
    Newton return map pulls the state back to Phi = 0 whenever |Phi|
    exceeds 1e-9.  Diagnostics (Phi, purity, fluctuation, energy) are
    recorded every ``sample_stride`` steps; |Phi| is tracked every step and
    its maximum reported on the trajectory.
    """
    if dt <= 0 or t_final <= dt:
        raise ValueError("need dt > 0 and t_final > dt")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")

    n_steps = int(round(t_final / dt))
    c = initial.amplitudes.copy()

    track_phi = (spec.constraint_form == "fluctuation"
                 and spec.algebra.fluctuation_min is not None) or \
                (spec.constraint_form == "purity"
                 and spec.algebra.purity_max is not None)

    if spec.mode == "simplified":
        rhs = _simplified_kernel(spec).derivative
        flow_kernel = _FlowKernel(spec) if track_phi else None
    else:
        flow_kernel = _FlowKernel(spec)
        rhs = flow_kernel.state_derivative

    times, states = [], []
    phis, purities, fluctuations, energies = [], [], [], []
    max_abs_phi = 0.0

    def record(t, c):
        times.append(t)
        states.append(c.copy())
        phi, purity, fluct, energy = _diagnostics(c, spec, track_phi)
        phis.append(phi)
        purities.append(purity)
        fluctuations.append(fluct)
        energies.append(energy)
        return phi

    phi0 = record(0.0, c)
    max_abs_phi = abs(phi0) if track_phi else 0.0

    for k in range(1, n_steps + 1):
        c = _rk4_step(rhs, c, dt)
        nrm_sq = np.vdot(c, c).real
        if not np.isfinite(nrm_sq):
            raise IntegrationError(f"state became non-finite at t={k * dt:.6g}")
        c = c / np.sqrt(nrm_sq)
        if track_phi:
            if projection:
                c, phi = flow_kernel.project_step(c)
            else:
                phi = flow_kernel.phi(c)
            if abs(phi) > max_abs_phi:
                max_abs_phi = abs(phi)
        if k % sample_stride == 0 or k == n_steps:
            record(k * dt, c)

    return Trajectory(times=np.array(times), states=np.array(states),
                      phi=np.array(phis), purity=np.array(purities),
                      fluctuation=np.array(fluctuations),
                      energy=np.array(energies), max_abs_phi=max_abs_phi)


def _diagnostics(c, spec, track_phi):
    stack = spec.algebra.stack()
    nrm = np.vdot(c, c).real
    lc = stack @ c
    means = np.einsum("i,li->l", c.conj(), lc).real / nrm
    seconds = np.einsum("li,li->l", lc.conj(), lc).real / nrm
    purity = float(np.dot(means, means))
    fluct = float(np.sum(seconds - means ** 2))
    energy = np.vdot(c, spec.hamiltonian.matrix @ c).real / nrm
    if not track_phi:
        phi = np.nan
    elif spec.constraint_form == "purity":
        phi = purity - spec.algebra.purity_max
    else:
        phi = fluct - spec.algebra.fluctuation_min
    return phi, purity, fluct, float(energy)
