"""Finite-dimensional states, operators and coarse-graining measures.

A coarse-graining is specified by an ordered set of Hermitian generators
("distinguished observables").  Two scalar measures quantify how close a
pure state is to the coherent manifold of that set:

* generalized purity   ``P = sum_l <L_l>**2``
* invariant fluctuation ``Delta = sum_l (<L_l**2> - <L_l>**2)``

Both are maximal/minimal exactly on the generalized coherent states.  All
expectation values are Rayleigh quotients (``<psi|L|psi> / <psi|psi>``),
so every measure is invariant under rescaling of the amplitudes; this
convention is load-bearing for the constrained dynamics built on top.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

HERMITICITY_TOL = 1e-12
DENSITY_TOL = 1e-10

OperatorLike = Union["HermitianOperator", np.ndarray]


def _as_complex_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _require_hermitian(m: np.ndarray, tol: float, what: str) -> np.ndarray:
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise ValueError(f"{what} is not Hermitian (max deviation {dev:.3e})")
    return m


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over a finite Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size < 2:
            raise ValueError("state dimension must be at least 2")
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("state amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        object.__setattr__(self, "amplitudes", amps / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis_state(cls, dim: int, index: int) -> "PureState":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "PureState":
        return cls(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix (Hamiltonians, observables, noise generators)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix)
        _require_hermitian(m, HERMITICITY_TOL, "operator")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace Hermitian matrix.

    Positivity is deliberately not enforced: the coarse-graining projection
    (`g_reduced_state`) can produce indefinite matrices and is exposed as a
    diagnostic.  Master-equation outputs are positivity-checked by the
    integrator instead.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix)
        _require_hermitian(m, DENSITY_TOL, "density matrix")
        tr = np.trace(m)
        if abs(tr - 1.0) > DENSITY_TOL:
            raise ValueError(f"density matrix trace is {tr}, expected 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_state(cls, state: PureState) -> "DensityMatrix":
        return cls(state.projector())


@dataclass
class DistinguishedAlgebra:
    """Ordered Hermitian generators plus optional purity/fluctuation bounds.

    ``purity_max`` is the maximum of the generalized purity over pure states
    and ``fluctuation_min`` the corresponding minimum of the invariant
    fluctuation; either may be unset when unknown (or, for the quadrature
    set, genuinely unbounded).
    """

    generators: Sequence[HermitianOperator]
    label: str = ""
    purity_max: Optional[float] = None
    fluctuation_min: Optional[float] = None
    _stack: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        gens = [g if isinstance(g, HermitianOperator) else HermitianOperator(g)
                for g in self.generators]
        if not gens:
            raise ValueError("algebra needs at least one generator")
        dims = {g.dim for g in gens}
        if len(dims) != 1:
            raise ValueError(f"generators have mixed dimensions: {sorted(dims)}")
        self.generators = tuple(gens)

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    @property
    def size(self) -> int:
        return len(self.generators)

    def stack(self) -> np.ndarray:
        """Generators as one (m, N, N) array; cached."""
        if self._stack is None:
            self._stack = np.stack([g.matrix for g in self.generators])
        return self._stack

    def squares_sum(self) -> np.ndarray:
        """sum_l L_l @ L_l, the (possibly Casimir) quadratic element."""
        stack = self.stack()
        return np.einsum("lij,ljk->ik", stack, stack)


def _operator_matrix(op: OperatorLike) -> np.ndarray:
    if isinstance(op, HermitianOperator):
        return op.matrix
    return _require_hermitian(_as_complex_matrix(op), HERMITICITY_TOL, "operator")


def _check_dims(state_dim: int, op_dim: int):
    if state_dim != op_dim:
        raise ValueError(f"dimension mismatch: state is {state_dim}, operator is {op_dim}")


def expectation(state: PureState, op: OperatorLike) -> float:
    """Rayleigh-quotient expectation value ``<psi|L|psi> / <psi|psi>``.

    The imaginary residue must be at numerical-noise level (the operator is
    Hermitian); it is asserted small and discarded.
    """
    m = _operator_matrix(op)
    _check_dims(state.dim, m.shape[0])
    c = state.amplitudes
    val = np.vdot(c, m @ c) / np.vdot(c, c).real
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise AssertionError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def variance(state: PureState, op: OperatorLike) -> float:
    """``<L^2> - <L>^2``, clamped to be nonnegative."""
    m = _operator_matrix(op)
    _check_dims(state.dim, m.shape[0])
    c = state.amplitudes
    mc = m @ c
    nrm = np.vdot(c, c).real
    mean = np.vdot(c, mc).real / nrm
    second = np.vdot(mc, mc).real / nrm
    var = second - mean * mean
    if var < -1e-12:
        raise AssertionError(f"variance evaluated to {var:.3e} < 0")
    return max(var, 0.0)


def generalized_purity(state: PureState, algebra: DistinguishedAlgebra) -> float:
    """Sum of squared generator expectations."""
    _check_dims(state.dim, algebra.dim)
    c = state.amplitudes
    nrm = np.vdot(c, c).real
    means = np.einsum("i,lij,j->l", c.conj(), algebra.stack(), c).real / nrm
    return float(np.dot(means, means))


def invariant_fluctuation(state: PureState, algebra: DistinguishedAlgebra) -> float:
    """Total dispersion of the generator set on the state."""
    _check_dims(state.dim, algebra.dim)
    c = state.amplitudes
    nrm = np.vdot(c, c).real
    lc = algebra.stack() @ c
    means = np.einsum("i,li->l", c.conj(), lc).real / nrm
    seconds = np.einsum("li,li->l", lc.conj(), lc).real / nrm
    return float(np.sum(seconds - means * means))


def purity_bounds(kind: str, j: Optional[float] = None,
                  bounds: Optional[tuple] = None) -> tuple:
    """Known (fluctuation_min, purity_max) pairs for the built-in algebra kinds.

    Kinds: ``"su2"`` (spin-j generator scale; needs ``j``), ``"qubit_pauli"``
    (single qubit, Pauli scale), ``"two_qubit_local"`` (Pauli scale),
    ``"quadrature"`` (two-mode q/p set; purity is unbounded so only the
    fluctuation bound is returned), ``"custom"`` (pass ``bounds`` through).
    """
    if kind == "su2":
        if j is None:
            raise ValueError("su2 bounds need the spin value j")
        if j <= 0 or round(2 * j) != 2 * j:
            raise ValueError(f"j must be a positive half-integer, got {j}")
        return (float(j), float(j) ** 2)
    if kind == "qubit_pauli":
        return (2.0, 1.0)
    if kind == "two_qubit_local":
        return (4.0, 2.0)
    if kind == "quadrature":
        return (2.0, None)
    if kind == "custom":
        if bounds is None:
            raise ValueError("custom kind needs explicit bounds")
        return tuple(bounds)
    raise ValueError(f"unknown algebra kind {kind!r} and no user bounds supplied")


def _hs_orthonormal_span(algebra: DistinguishedAlgebra) -> np.ndarray:
    """Orthonormal basis (Hilbert-Schmidt) of span{identity, L_1..L_m}.

    Returns a (k, N, N) array with Tr[B_a^dag B_b] = delta_ab; the span is
    closed under conjugate transpose, so projecting a Hermitian matrix
    onto it stays Hermitian even though individual B_a need not be.
    """
    n = algebra.dim
    mats = [np.eye(n, dtype=complex)] + [g.matrix for g in algebra.generators]
    vecs = np.stack([m.reshape(-1) for m in mats])
    # QR on the matrix of row vectors; rank-deficient directions are dropped.
    q, r = np.linalg.qr(vecs.conj().T)
    keep = np.abs(np.diag(r)) > 1e-12
    basis = q.conj().T[keep]
    return basis.reshape(-1, n, n)


def g_reduced_state(rho: DensityMatrix, algebra: DistinguishedAlgebra) -> DensityMatrix:
    """Orthogonal (Hilbert-Schmidt) projection of rho onto span{1, L_1..L_m}.

    The result reproduces all generator expectations and the trace of the
    input; it may be indefinite and is intended as a diagnostic only.
    """
    _check_dims(rho.dim, algebra.dim)
    basis = _hs_orthonormal_span(algebra)
    coeffs = np.einsum("aij,ij->a", basis.conj(), rho.matrix)
    projected = np.einsum("a,aij->ij", coeffs, basis)
    # The projection of a Hermitian matrix onto a Hermitian span is Hermitian
    # up to roundoff; symmetrize before revalidating.
    projected = 0.5 * (projected + projected.conj().T)
    return DensityMatrix(projected)


def hs_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Hilbert-Schmidt (Frobenius) distance between two density matrices."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.linalg.norm(a.matrix - b.matrix))
