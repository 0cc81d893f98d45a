"""Real-canonical picture of pure-state dynamics.

A state with amplitudes c_i maps to the real vector x = (q, p) with
q_i = sqrt(2) Re c_i and p_i = sqrt(2) Im c_i, so a normalized state has
|x|^2 = 2.  In complex form the standard symplectic structure is simply
multiplication by -i, which the kernels below exploit: for a real function
F(x) the gradient is carried as the complex vector G = grad_q F + i grad_p F
and omega * grad F corresponds to -i G.

All expectation values are Rayleigh quotients, so their gradients are
orthogonal to x (degree-0 homogeneity) and the flows built from them stay
on the sphere of normalized states.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .core import (DistinguishedAlgebra, HermitianOperator, OperatorLike,
                   PureState, invariant_fluctuation)

SQRT2 = np.sqrt(2.0)


def to_canonical(state: PureState) -> np.ndarray:
    """Real 2N coordinate vector (q, p) of a state."""
    c = state.amplitudes
    return np.concatenate([SQRT2 * c.real, SQRT2 * c.imag])


def from_canonical(x: np.ndarray) -> PureState:
    """Inverse of `to_canonical` (normalizes; rejects the zero vector)."""
    return PureState(complex_amplitudes(x))


def complex_amplitudes(x: np.ndarray) -> np.ndarray:
    """Unnormalized amplitudes c = (q + i p)/sqrt(2) of a canonical point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size % 2 != 0:
        raise ValueError(f"canonical point must be a flat 2N vector, got shape {x.shape}")
    n = x.size // 2
    return (x[:n] + 1j * x[n:]) / SQRT2


def real_gradient(g: np.ndarray) -> np.ndarray:
    """Unpack a complexified gradient G = grad_q + i grad_p into a 2N vector."""
    return np.concatenate([g.real, g.imag])


class SymplecticForm:
    """Standard block form [[0, 1], [-1, 0]] on R^(2N)."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.n = n

    def matrix(self) -> np.ndarray:
        n = self.n
        eye = np.eye(n)
        return np.block([[np.zeros((n, n)), eye], [-eye, np.zeros((n, n))]])

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.size != 2 * self.n:
            raise ValueError("length mismatch with the form dimension")
        return np.concatenate([v[self.n:], -v[:self.n]])


def symplectic_apply(v: np.ndarray) -> np.ndarray:
    """omega applied to a 2N vector: (q, p) -> (p, -q)."""
    v = np.asarray(v, dtype=float)
    n = v.size // 2
    return np.concatenate([v[n:], -v[:n]])


# ---------------------------------------------------------------------------
# complexified kernels shared with the constrained-flow module
# ---------------------------------------------------------------------------

def _expectation_c(c: np.ndarray, m: np.ndarray) -> Tuple[float, np.ndarray, float]:
    """(Rayleigh mean, m @ c, squared norm of c)."""
    mc = m @ c
    nrm = np.vdot(c, c).real
    return np.vdot(c, mc).real / nrm, mc, nrm


def expectation_gradient_c(c: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Complexified gradient of the Rayleigh expectation of m at point c."""
    mean, mc, nrm = _expectation_c(c, m)
    return SQRT2 * (mc - mean * c) / nrm


def hamiltonian_field_c(c: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Complexified symplectic gradient -i G_H of the Rayleigh energy."""
    return -1j * expectation_gradient_c(c, h)


def constraint_value_gradient_c(c: np.ndarray, algebra: DistinguishedAlgebra,
                                form: str = "purity") -> Tuple[float, np.ndarray]:
    """Constraint scalar and complexified gradient at amplitudes c.

    form "purity":      Phi = P - purity_max       (<= 0 everywhere)
    form "fluctuation": Phi = Delta - fluctuation_min (>= 0 everywhere)
    """
    stack = algebra.stack()
    nrm = np.vdot(c, c).real
    lc = stack @ c
    means = np.einsum("i,li->l", c.conj(), lc).real / nrm
    if form == "purity":
        if algebra.purity_max is None:
            raise ValueError(f"algebra {algebra.label!r} has no purity bound; "
                             "use the fluctuation form")
        phi = float(np.dot(means, means)) - algebra.purity_max
        # grad P = sum_l 2 <L_l> grad <L_l>
        weighted = np.einsum("l,li->i", 2 * means, lc) - 2 * np.dot(means, means) * c
        grad = SQRT2 * weighted / nrm
    elif form == "fluctuation":
        if algebra.fluctuation_min is None:
            raise ValueError(f"algebra {algebra.label!r} has no fluctuation bound")
        seconds = np.einsum("li,li->l", lc.conj(), lc).real / nrm
        phi = float(np.sum(seconds - means ** 2)) - algebra.fluctuation_min
        sq_mean, sq_c, _ = _expectation_c(c, algebra.squares_sum())
        grad_sq = SQRT2 * (sq_c - sq_mean * c) / nrm
        weighted = np.einsum("l,li->i", 2 * means, lc) - 2 * np.dot(means, means) * c
        grad = grad_sq - SQRT2 * weighted / nrm
    else:
        raise ValueError(f"unknown constraint form {form!r}")
    return phi, grad


# ---------------------------------------------------------------------------
# public real-vector interface
# ---------------------------------------------------------------------------

def _operator_matrix(op: OperatorLike) -> np.ndarray:
    return op.matrix if isinstance(op, HermitianOperator) else np.asarray(op, dtype=complex)


def expectation_value(x: np.ndarray, op: OperatorLike) -> float:
    """Rayleigh expectation as a function on canonical points."""
    c = complex_amplitudes(x)
    mean, _, _ = _expectation_c(c, _operator_matrix(op))
    return float(mean)


def expectation_gradient(x: np.ndarray, op: OperatorLike) -> np.ndarray:
    """Gradient of the Rayleigh expectation; orthogonal to x by homogeneity."""
    c = complex_amplitudes(x)
    if np.vdot(c, c).real == 0.0:
        raise ValueError("gradient undefined at the zero point")
    return real_gradient(expectation_gradient_c(c, _operator_matrix(op)))


def hamiltonian_vector_field(x: np.ndarray, hamiltonian: OperatorLike) -> np.ndarray:
    """Symplectic gradient omega grad <H>.

    For a normalized point this is the Schroedinger field with the dynamical
    phase removed: it pushes forward to -i(H - <H>) psi.
    """
    c = complex_amplitudes(x)
    if np.vdot(c, c).real == 0.0:
        raise ValueError("field undefined at the zero point")
    return real_gradient(hamiltonian_field_c(c, _operator_matrix(hamiltonian)))


def purity_constraint(x: np.ndarray, algebra: DistinguishedAlgebra,
                      form: str = "purity") -> Tuple[float, np.ndarray]:
    """Constraint scalar Phi and its gradient at a canonical point."""
    c = complex_amplitudes(x)
    phi, grad_c = constraint_value_gradient_c(c, algebra, form=form)
    return phi, real_gradient(grad_c)


def poisson_bracket(grad_f: np.ndarray, grad_g: np.ndarray) -> float:
    """omega^{ij} (grad F)_i (grad G)_j for two real 2N gradients."""
    grad_f = np.asarray(grad_f, dtype=float)
    grad_g = np.asarray(grad_g, dtype=float)
    if grad_f.shape != grad_g.shape:
        raise ValueError("gradient length mismatch")
    n = grad_f.size // 2
    return float(np.dot(grad_f[:n], grad_g[n:]) - np.dot(grad_f[n:], grad_g[:n]))


def gradient_norm_vs_fluctuation(x: np.ndarray, algebra: DistinguishedAlgebra
                                 ) -> Tuple[float, float]:
    """Diagnostic pair (|grad Phi|^2, 4 Delta) at a canonical point.

    The two agree only in special scale conventions; flow denominators are
    always computed from the gradient directly, never from the fluctuation.
    """
    phi, grad = purity_constraint(x, algebra)
    state = from_canonical(x)
    return float(np.dot(grad, grad)), 4.0 * invariant_fluctuation(state, algebra)


def finite_difference_gradient(func, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function on R^(2N)."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (func(xp) - func(xm)) / (2 * step)
    return grad
