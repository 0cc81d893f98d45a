"""Open-system ground truth: master-equation integration and diffusive
pure-state unraveling with complex Wiener noise.

Rate convention: a single global rate ``gamma`` multiplies every coupling
operator as sqrt(gamma) * L_l, so the master-equation dissipator, the
unraveling drift and the noise amplitudes all scale consistently with one
knob.  Coupling operators are restricted to Hermitian ones here (they
model simultaneous weak measurement of the distinguished observables).

Determinism contract: path k of an ensemble draws its noise from a
dedicated generator seeded with ``base_seed XOR k`` (PCG64), and the
ensemble mean is accumulated in path-index order, so identical seeds give
bit-identical results regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .constrained import IntegrationError, _rk4_step
from .core import (DensityMatrix, DistinguishedAlgebra, HermitianOperator,
                   OperatorLike, PureState)

WORKERS_ENV = "PURIFLOW_WORKERS"


@dataclass
class LindbladSpec:
    """Hamiltonian plus Hermitian coupling operators and a global rate."""

    hamiltonian: OperatorLike
    lindblads: Sequence[OperatorLike]
    gamma: float = 1.0

    def __post_init__(self):
        h = self.hamiltonian
        self.hamiltonian = h if isinstance(h, HermitianOperator) else HermitianOperator(h)
        ops = [op if isinstance(op, HermitianOperator) else HermitianOperator(op)
               for op in self.lindblads]
        if not ops:
            raise ValueError("need at least one coupling operator")
        dims = {self.hamiltonian.dim} | {op.dim for op in ops}
        if len(dims) != 1:
            raise ValueError(f"mixed dimensions: {sorted(dims)}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        self.lindblads = tuple(ops)

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def stack(self) -> np.ndarray:
        return np.stack([op.matrix for op in self.lindblads])


def lindblad_rhs(rho: Union[DensityMatrix, np.ndarray], spec: LindbladSpec) -> np.ndarray:
    """Master-equation right-hand side for Hermitian coupling operators:

    drho/dt = -i[H, rho] + gamma sum_l (L_l rho L_l - (L_l^2 rho + rho L_l^2)/2).

    The result is traceless and Hermitian.
    """
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if r.shape != (spec.dim, spec.dim):
        raise ValueError(f"density shape {r.shape} does not match dimension {spec.dim}")
    h = spec.hamiltonian.matrix
    out = -1j * (h @ r - r @ h)
    if spec.gamma > 0:
        stack = spec.stack()
        sandwich = np.einsum("lij,jk,lkm->im", stack, r, stack, optimize=True)
        squares = np.einsum("lij,ljk->ik", stack, stack)
        out = out + spec.gamma * (sandwich - 0.5 * (squares @ r + r @ squares))
    return out


@dataclass
class DensityTrajectory:
    """Sampled master-equation history."""

    times: np.ndarray
    densities: np.ndarray        # (n_samples, N, N)

    def density(self, k: int) -> DensityMatrix:
        return DensityMatrix(self.densities[k])


class _LindbladKernel:
    def __init__(self, spec: LindbladSpec):
        self.h = spec.hamiltonian.matrix
        self.gamma = spec.gamma
        self.stack = spec.stack()
        self.squares_half = 0.5 * np.einsum("lij,ljk->ik", self.stack, self.stack)

    def rhs(self, r: np.ndarray) -> np.ndarray:
        out = -1j * (self.h @ r - r @ self.h)
        if self.gamma > 0:
            sandwich = np.tensordot(
                np.matmul(self.stack, r), self.stack, axes=([0, 2], [0, 1]))
            out = out + self.gamma * (
                sandwich - (self.squares_half @ r + r @ self.squares_half))
        return out


def integrate_lindblad(rho0: Union[DensityMatrix, PureState, np.ndarray],
                       spec: LindbladSpec, dt: float, t_final: float,
                       sample_stride: int = 1,
                       check_positivity: bool = True) -> DensityTrajectory:
    """Fixed-step RK4 master-equation integration.

    Each recorded sample is validated: Hermiticity and unit trace to 1e-9,
    and (optionally) minimum eigenvalue >= -1e-8.
    """
    if isinstance(rho0, PureState):
        r = rho0.projector()
    elif isinstance(rho0, DensityMatrix):
        r = rho0.matrix.copy()
    else:
        r = np.asarray(rho0, dtype=complex).copy()
    if dt <= 0 or t_final <= dt:
        raise ValueError("need dt > 0 and t_final > dt")
    kernel = _LindbladKernel(spec)
    n_steps = int(round(t_final / dt))
    times = [0.0]
    samples = [r.copy()]
    for k in range(1, n_steps + 1):
        r = _rk4_step(kernel.rhs, r, dt)
        if k % sample_stride == 0 or k == n_steps:
            if not np.all(np.isfinite(r)):
                raise IntegrationError(f"density became non-finite at t={k * dt:.6g}")
            _validate_density(r, k * dt, check_positivity)
            times.append(k * dt)
            samples.append(r.copy())
    return DensityTrajectory(times=np.array(times), densities=np.array(samples))


def _validate_density(r: np.ndarray, t: float, check_positivity: bool):
    herm_dev = np.max(np.abs(r - r.conj().T))
    trace_dev = abs(np.trace(r).real - 1.0)
    if herm_dev > 1e-9 or trace_dev > 1e-9:
        raise IntegrationError(
            f"density invariants violated at t={t:.6g}: "
            f"hermiticity {herm_dev:.2e}, trace {trace_dev:.2e}")
    if check_positivity:
        min_eig = float(np.linalg.eigvalsh(r)[0])
        if min_eig < -1e-8:
            raise IntegrationError(
                f"density lost positivity at t={t:.6g}: min eigenvalue {min_eig:.2e}")


def sample_wiener(rng: np.random.Generator, m: int, dt: float) -> np.ndarray:
    """One vector of m complex Wiener increments over a step dt.

    Components are (g1 + i g2) sqrt(dt/2) with independent standard
    normals, so E[dW dW] = 0 and E[dW conj(dW)] = dt.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g = rng.standard_normal((2, m))
    return (g[0] + 1j * g[1]) * np.sqrt(dt / 2.0)


class _QsdKernel:
    """Stacked-operator caches for the diffusive unraveling step."""

    def __init__(self, spec: LindbladSpec):
        self.h = spec.hamiltonian.matrix
        stack = spec.stack()
        self.m, self.n = stack.shape[0], stack.shape[1]
        self.flat = np.ascontiguousarray(stack.reshape(self.m * self.n, self.n))
        self.squares_sum = np.einsum("lij,ljk->ik", stack, stack)
        self.gamma = spec.gamma
        self.sqrt_gamma = np.sqrt(spec.gamma)

    def step(self, c: np.ndarray, dw: np.ndarray, dt: float) -> np.ndarray:
        """One Euler-Maruyama step followed by renormalization."""
        lc = (self.flat @ c).reshape(self.m, self.n)
        means = (lc @ c.conj()).real
        drift = -1j * (self.h @ c) + self.gamma * (
            2.0 * (means @ lc) - self.squares_sum @ c - float(means @ means) * c)
        noise = self.sqrt_gamma * ((dw @ lc) - complex(dw @ means) * c)
        c = c + drift * dt + noise
        return c / np.linalg.norm(c)


def qsd_step(state: Union[PureState, np.ndarray], spec: LindbladSpec,
             dw: np.ndarray, dt: float) -> PureState:
    """Single diffusive-unraveling step (normalized output).

    Ito step of d psi = [-i H + gamma sum_l (2 <L_l> L_l - L_l^2 - <L_l>^2)] psi dt
    + sqrt(gamma) sum_l (L_l - <L_l>) psi dW_l, then renormalize.
    """
    c = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    if c.size != spec.dim:
        raise ValueError("state and operator dimensions differ")
    dw = np.asarray(dw, dtype=complex)
    if dw.size != len(spec.lindblads):
        raise ValueError("need one Wiener increment per coupling operator")
    return PureState(_QsdKernel(spec).step(c.copy(), dw, dt))


@dataclass
class QsdPath:
    """One unraveling path sampled on a uniform grid.

    ``fluctuations`` and ``purities`` hold per-sample invariant fluctuation
    and generalized purity for each requested diagnostic algebra.
    """

    times: np.ndarray
    states: np.ndarray           # (n_samples, N)
    seed: int
    fluctuations: Dict[str, np.ndarray] = field(default_factory=dict)
    purities: Dict[str, np.ndarray] = field(default_factory=dict)


def run_qsd_path(psi0: PureState, spec: LindbladSpec, dt: float, t_final: float,
                 seed: int, sample_stride: int = 1,
                 diagnostics: Optional[Dict[str, DistinguishedAlgebra]] = None
                 ) -> QsdPath:
    """Integrate one unraveling path with a dedicated seeded generator.

    ``diagnostics`` maps labels to algebras for which the invariant
    fluctuation is recorded at every sample time.
    """
    if dt <= 0 or t_final <= dt:
        raise ValueError("need dt > 0 and t_final > dt")
    rng = np.random.default_rng(seed)
    kernel = _QsdKernel(spec)
    diag_algs = diagnostics or {}
    n_steps = int(round(t_final / dt))
    c = psi0.amplitudes.copy()
    times = [0.0]
    samples = [c.copy()]
    # one block draw equals n_steps sequential draws from the same stream
    gauss = rng.standard_normal((n_steps, 2, kernel.m))
    increments = (gauss[:, 0, :] + 1j * gauss[:, 1, :]) * np.sqrt(dt / 2.0)
    for k in range(1, n_steps + 1):
        c = kernel.step(c, increments[k - 1], dt)
        if k % sample_stride == 0 or k == n_steps:
            if not np.all(np.isfinite(c)):
                raise IntegrationError(f"path became non-finite at t={k * dt:.6g}")
            times.append(k * dt)
            samples.append(c.copy())
    states = np.array(samples)
    fluct, pur = {}, {}
    for name, alg in diag_algs.items():
        fluct[name], pur[name] = _measure_series(states, alg)
    return QsdPath(times=np.array(times), states=states, seed=seed,
                   fluctuations=fluct, purities=pur)


def _measure_series(states: np.ndarray, algebra: DistinguishedAlgebra
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """(invariant fluctuation, generalized purity) per sample."""
    stack = algebra.stack()
    lc = np.einsum("lij,tj->tli", stack, states)
    means = np.einsum("tli,ti->tl", lc, states.conj()).real
    seconds = np.einsum("tli,tli->tl", lc.conj(), lc).real
    return np.sum(seconds - means ** 2, axis=1), np.sum(means ** 2, axis=1)


@dataclass
class Ensemble:
    """Unraveling paths plus their running mean density.

    ``fluctuations`` and ``purities`` map diagnostic labels to
    (n_paths, n_samples) arrays of per-path measures.
    """

    times: np.ndarray
    mean_density: np.ndarray     # (n_samples, N, N)
    seeds: np.ndarray
    fluctuations: Dict[str, np.ndarray]
    purities: Dict[str, np.ndarray]
    mean_hs_purity: np.ndarray   # Tr[rho_bar(t)^2]

    @property
    def n_paths(self) -> int:
        return self.seeds.size

    def jackknife_se(self) -> np.ndarray:
        """Standard error of the mean density in Hilbert-Schmidt norm.

        For pure-state paths the jackknife sum collapses to
        sqrt((1 - Tr[rho_bar^2]) / (M - 1)) per sample time.
        """
        if self.n_paths < 2:
            raise ValueError("jackknife needs at least two paths")
        spread = np.clip(1.0 - self.mean_hs_purity, 0.0, None)
        return np.sqrt(spread / (self.n_paths - 1))

    def mean_density_matrix(self, k: int) -> DensityMatrix:
        return DensityMatrix(self.mean_density[k])


def _path_worker(args):
    psi0_amps, spec, dt, t_final, seed, sample_stride, diagnostics = args
    return run_qsd_path(PureState(psi0_amps), spec, dt, t_final, seed,
                        sample_stride, diagnostics)


def run_qsd_ensemble(psi0: PureState, spec: LindbladSpec, dt: float,
                     t_final: float, n_paths: int, base_seed: int,
                     sample_stride: int = 1,
                     diagnostics: Optional[Dict[str, DistinguishedAlgebra]] = None,
                     n_workers: Optional[int] = None) -> Ensemble:
    """Run an ensemble of unraveling paths and average their projectors.

    Path k is seeded with ``base_seed XOR k``.  ``n_workers`` defaults to
    the PURIFLOW_WORKERS environment variable (absent or 0 means run in
    process); parallel execution changes neither seeds nor the
    accumulation order.
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    seeds = np.array([int(np.uint64(base_seed) ^ np.uint64(k)) for k in range(n_paths)],
                     dtype=np.uint64)
    if n_workers is None:
        n_workers = int(os.environ.get(WORKERS_ENV, "0") or 0)

    mean = None
    fluct: Dict[str, list] = {}
    pur: Dict[str, list] = {}
    times = None

    def accumulate(path: QsdPath):
        nonlocal mean, times
        projectors = np.einsum("ti,tj->tij", path.states, path.states.conj())
        if mean is None:
            times = path.times
            mean = projectors
        else:
            mean = mean + projectors
        for name, series in path.fluctuations.items():
            fluct.setdefault(name, []).append(series)
        for name, series in path.purities.items():
            pur.setdefault(name, []).append(series)

    if n_workers and n_workers > 1 and n_paths > 1:
        chunk = [(psi0.amplitudes, spec, dt, t_final, int(s), sample_stride, diagnostics)
                 for s in seeds]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for path in pool.map(_path_worker, chunk, chunksize=4):
                accumulate(path)
    else:
        for s in seeds:
            accumulate(run_qsd_path(psi0, spec, dt, t_final, int(s),
                                    sample_stride, diagnostics))

    mean = mean / n_paths
    hs_purity = np.einsum("tij,tji->t", mean, mean).real
    return Ensemble(times=times, mean_density=mean, seeds=seeds,
                    fluctuations={k: np.array(v) for k, v in fluct.items()},
                    purities={k: np.array(v) for k, v in pur.items()},
                    mean_hs_purity=hs_purity)
