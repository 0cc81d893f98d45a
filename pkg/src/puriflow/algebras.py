"""Operator families: spin matrices, local qubit sets, two-mode Fock space,
the two-mode boson realization of su(2), and the model Hamiltonians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import DistinguishedAlgebra, HermitianOperator, PureState, purity_bounds


def pauli_matrices():
    """(sigma_x, sigma_y, sigma_z) with eigenvalues +-1."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz


def su2_generators(dim: int):
    """Angular momentum matrices [Jx, Jy, Jz] for spin j = (dim-1)/2.

    Jz is diagonal with entries j, j-1, ..., -j.
    """
    if dim < 2:
        raise ValueError("spin representation needs dim >= 2")
    j = (dim - 1) / 2
    m = j - np.arange(dim)
    jz = np.diag(m.astype(complex))
    # raising operator in the descending-m basis sits above the diagonal
    amp = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jp = np.zeros((dim, dim), dtype=complex)
    jp[np.arange(dim - 1), np.arange(1, dim)] = amp
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    return [HermitianOperator(jx), HermitianOperator(jy), HermitianOperator(jz)]


def su2_algebra(dim: int) -> DistinguishedAlgebra:
    """Spin-j distinguished set {Jx, Jy, Jz} with its coherent-state bounds."""
    j = (dim - 1) / 2
    fmin, pmax = purity_bounds("su2", j=j)
    return DistinguishedAlgebra(su2_generators(dim), label=f"su2 j={j}",
                                purity_max=pmax, fluctuation_min=fmin)


def su2_coherent_state(dim: int, theta: float, phi: float) -> PureState:
    """Highest-weight state rotated to polar direction (theta, phi)."""
    jx, jy, jz = (g.matrix for g in su2_generators(dim))
    top = np.zeros(dim, dtype=complex)
    top[0] = 1.0
    rot = expm(-1j * phi * jz) @ expm(-1j * theta * jy)
    return PureState(rot @ top)


def qubit_algebra() -> DistinguishedAlgebra:
    """Single-qubit Pauli set; every pure state is coherent for it."""
    fmin, pmax = purity_bounds("qubit_pauli")
    gens = [HermitianOperator(s) for s in pauli_matrices()]
    return DistinguishedAlgebra(gens, label="qubit pauli",
                                purity_max=pmax, fluctuation_min=fmin)


def two_qubit_local_algebra() -> DistinguishedAlgebra:
    """Local observables of a qubit pair: sigma^1_{x,y,z} x 1 and 1 x sigma^2_{x,y,z}.

    Basis ordering is computational: |00>, |01>, |10>, |11> with the first
    qubit on the left Kronecker factor.
    """
    eye = np.eye(2, dtype=complex)
    gens = [np.kron(s, eye) for s in pauli_matrices()]
    gens += [np.kron(eye, s) for s in pauli_matrices()]
    fmin, pmax = purity_bounds("two_qubit_local")
    return DistinguishedAlgebra([HermitianOperator(g) for g in gens],
                                label="two-qubit local",
                                purity_max=pmax, fluctuation_min=fmin)


@dataclass(frozen=True)
class FockSpace:
    """Two bosonic modes, each truncated at occupation ``cutoff``."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")

    @property
    def dim_per_mode(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return self.dim_per_mode ** 2

    def index(self, n1: int, n2: int) -> int:
        d = self.dim_per_mode
        if not (0 <= n1 < d and 0 <= n2 < d):
            raise ValueError(f"occupation ({n1},{n2}) outside cutoff {self.cutoff}")
        return n1 * d + n2

    def number_state(self, n1: int, n2: int) -> PureState:
        amps = np.zeros(self.dim, dtype=complex)
        amps[self.index(n1, n2)] = 1.0
        return PureState(amps)


def _annihilator(d: int) -> np.ndarray:
    a = np.zeros((d, d), dtype=complex)
    n = np.arange(1, d)
    a[n - 1, n] = np.sqrt(n)
    return a


@dataclass(frozen=True)
class FockOperators:
    """Mode operators on the truncated two-mode space (plain arrays)."""

    a1: np.ndarray
    a2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    n1: np.ndarray
    n2: np.ndarray


def fock_operators(space: FockSpace) -> FockOperators:
    """Annihilators, quadratures q = (a^+ + a)/sqrt2, p = i(a^+ - a)/sqrt2,
    and number operators for both modes."""
    d = space.dim_per_mode
    a = _annihilator(d)
    eye = np.eye(d, dtype=complex)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    # number operators as exact integer diagonals so the sector block
    # structure is exact, not roundoff-level
    counts = np.diag(np.arange(d, dtype=complex))
    ops = {"n1": np.kron(counts, eye), "n2": np.kron(eye, counts)}
    for name, aj in (("1", a1), ("2", a2)):
        ops["q" + name] = (aj.conj().T + aj) / np.sqrt(2)
        ops["p" + name] = 1j * (aj.conj().T - aj) / np.sqrt(2)
    return FockOperators(a1=a1, a2=a2, **ops)


def quadrature_algebra(space: FockSpace) -> DistinguishedAlgebra:
    """Distinguished set {q1, q2, p1, p2}; only the fluctuation bound exists."""
    ops = fock_operators(space)
    gens = [HermitianOperator(m) for m in (ops.q1, ops.q2, ops.p1, ops.p2)]
    fmin, pmax = purity_bounds("quadrature")
    return DistinguishedAlgebra(gens, label="two-mode quadratures",
                                purity_max=pmax, fluctuation_min=fmin)


def schwinger_generators(space: FockSpace):
    """Two-mode boson realization of su(2):

    Jx = (a1^+ a2 + a2^+ a1)/2, Jy = i(a1^+ a2 - a2^+ a1)/2,
    Jz = (a2^+ a2 - a1^+ a1)/2.

    The commutation relations hold exactly on states below the cutoff;
    every fixed total-number sector carries spin j = N/2.
    """
    ops = fock_operators(space)
    kp = ops.a1.conj().T @ ops.a2
    jx = 0.5 * (kp + kp.conj().T)
    jy = 0.5j * (kp - kp.conj().T)
    jz = 0.5 * (ops.n2 - ops.n1)
    return [HermitianOperator(jx), HermitianOperator(jy), HermitianOperator(jz)]


def schwinger_algebra(space: FockSpace) -> DistinguishedAlgebra:
    """Schwinger su(2) set on the full truncated space.

    No global bounds are attached: the coherent-state bounds depend on the
    number sector (spin j = N/2), so scenario code supplies them.
    """
    return DistinguishedAlgebra(schwinger_generators(space), label="schwinger su2")


@dataclass(frozen=True)
class SectorEmbedding:
    """Fixed total-particle-number sector of a two-mode Fock space.

    Sector basis is ordered by descending Jz eigenvalue m = (n2 - n1)/2,
    matching the ordering of `su2_generators(total_number + 1)`.
    """

    space: FockSpace
    total_number: int

    def __post_init__(self):
        if not (0 <= self.total_number <= 2 * self.space.cutoff):
            raise ValueError("sector does not fit inside the cutoff")

    @property
    def dim(self) -> int:
        return self.total_number + 1

    def indices(self) -> np.ndarray:
        n = self.total_number
        cut = self.space.cutoff
        idx = []
        for n2 in range(min(n, cut), -1, -1):  # descending m = (n2-n1)/2
            n1 = n - n2
            if n1 > cut:
                continue
            idx.append(self.space.index(n1, n2))
        return np.array(idx, dtype=int)

    def embed(self, sector_vec: np.ndarray) -> np.ndarray:
        full = np.zeros(self.space.dim, dtype=complex)
        full[self.indices()] = sector_vec
        return full

    def embed_state(self, state: PureState) -> PureState:
        return PureState(self.embed(state.amplitudes))

    def restrict(self, op: np.ndarray) -> np.ndarray:
        idx = self.indices()
        return np.asarray(op, dtype=complex)[np.ix_(idx, idx)]

    def off_sector_norm(self, op: np.ndarray) -> float:
        """Largest matrix element coupling the sector to its complement."""
        idx = self.indices()
        mask = np.zeros(self.space.dim, dtype=bool)
        mask[idx] = True
        block = np.asarray(op)[np.ix_(mask, ~mask)]
        return float(np.max(np.abs(block))) if block.size else 0.0


def bose_hubbard_hamiltonian(space: FockSpace, eps1: float, eps2: float,
                             alpha: float, mu: float) -> HermitianOperator:
    """Two-mode Bose-Hubbard Hamiltonian

    H = eps1 n1 + eps2 n2 + alpha (a1^+ a2 + a2^+ a1)
        + mu (a1^+ a1^+ a1 a1 + a2^+ a2^+ a2 a2).

    Commutes with n1 + n2 exactly (block diagonal over number sectors).
    """
    ops = fock_operators(space)
    hop = ops.a1.conj().T @ ops.a2
    h = (eps1 * ops.n1 + eps2 * ops.n2
         + alpha * (hop + hop.conj().T)
         + mu * (ops.n1 @ (ops.n1 - np.eye(space.dim))
                 + ops.n2 @ (ops.n2 - np.eye(space.dim))))
    return HermitianOperator(h)


def two_qubit_hamiltonian(kind: str, mu: float, omega: float = 1.0) -> HermitianOperator:
    """Qubit-pair Hamiltonians: z fields plus a zz ("s") or xx ("ns") coupling."""
    sx, _, sz = pauli_matrices()
    eye = np.eye(2, dtype=complex)
    zfields = omega * (np.kron(sz, eye) + np.kron(eye, sz))
    if kind == "s":
        return HermitianOperator(zfields + mu * np.kron(sz, sz))
    if kind == "ns":
        return HermitianOperator(zfields + mu * np.kron(sx, sx))
    raise ValueError(f"unknown two-qubit Hamiltonian kind {kind!r}")


def spin1_hamiltonian(mu: float) -> HermitianOperator:
    """Spin-1 model H = Jz - 2 Jx + mu Jz^2; mu != 0 breaks coherent-state
    invariance of the Schroedinger flow."""
    jx, _, jz = (g.matrix for g in su2_generators(3))
    return HermitianOperator(jz - 2 * jx + mu * (jz @ jz))


def spin_form_hamiltonian(dim: int, alpha: float, eps: float, mu: float) -> HermitianOperator:
    """Spin form H = -2 alpha Jx + 2 eps Jz + mu Jz^2 on a (2j+1)-level system.

    Provided for comparison; the exact fixed-number restriction of the
    Bose-Hubbard Hamiltonian is 2 alpha Jx + eps Jz + 2 mu Jz^2 plus a
    multiple of the identity, which differs from this form (see tests).
    """
    jx, _, jz = (g.matrix for g in su2_generators(dim))
    return HermitianOperator(-2 * alpha * jx + 2 * eps * jz + mu * (jz @ jz))


def model_hamiltonian(kind: str, **params) -> HermitianOperator:
    """Dispatcher over the named model Hamiltonians."""
    builders = {
        "two_qubit_s": lambda: two_qubit_hamiltonian("s", **params),
        "two_qubit_ns": lambda: two_qubit_hamiltonian("ns", **params),
        "spin1_nonlinear": lambda: spin1_hamiltonian(**params),
        "spin_form": lambda: spin_form_hamiltonian(**params),
        "bose_hubbard": lambda: bose_hubbard_hamiltonian(**params),
    }
    if kind not in builders:
        raise ValueError(f"unknown Hamiltonian kind {kind!r}; "
                         f"known: {sorted(builders)}")
    return builders[kind]()
