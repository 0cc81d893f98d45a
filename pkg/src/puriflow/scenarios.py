"""Named experiment scenarios shared by the command line and the tests.

Each runner consumes a ScenarioConfig and returns a ScenarioResult with a
CSV header, float rows, and a one-line terminal summary.  All randomness
flows from ``base_seed``, so identical configs reproduce byte-identical
output.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import analysis, reduced
from .algebras import (FockSpace, SectorEmbedding, bose_hubbard_hamiltonian,
                       quadrature_algebra, schwinger_algebra,
                       schwinger_generators, su2_algebra, su2_coherent_state,
                       su2_generators, two_qubit_local_algebra)
from .constrained import ConstrainedFlowSpec, integrate_flow
from .core import DistinguishedAlgebra, PureState, generalized_purity
from .geometry import (expectation_gradient, expectation_value,
                       finite_difference_gradient, purity_constraint)
from .opensystem import (LindbladSpec, integrate_lindblad, run_qsd_ensemble,
                         sample_wiener)


@dataclass
class ScenarioConfig:
    """Validated bag of scenario parameters (defaults per scenario table)."""

    name: str
    mu: float = 0.1
    omega: float = 1.0
    alpha: float = 1.0
    eps: float = 0.0
    gamma: float = 0.9
    energy: float = 1.5
    system: str = "ns"
    lindblads: str = "J"
    cutoff: int = 8
    number: int = 4
    theta: float = 2 * math.pi / 5
    phi: float = math.pi / 3
    dt: float = 1e-3
    t_final: float = 10.0
    sample_stride: int = 100
    n_paths: int = 1
    base_seed: int = 7
    n_orbits: int = 9
    n_points: int = 100
    projection: bool = False
    out: str = ""

    def validate(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; "
                             f"known: {sorted(SCENARIOS)}")
        for field in ("mu", "omega", "alpha", "eps", "gamma", "energy",
                      "theta", "phi", "dt", "t_final"):
            v = getattr(self, field)
            if not math.isfinite(float(v)):
                raise ValueError(f"parameter {field} must be finite, got {v}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final <= self.dt:
            raise ValueError("t_final must exceed dt")
        if self.system not in ("s", "ns"):
            raise ValueError("system must be 's' or 'ns'")
        if self.lindblads not in ("J", "quadrature"):
            raise ValueError("lindblads must be 'J' or 'quadrature'")
        if self.cutoff < 1 or self.number < 0 or self.n_paths < 1:
            raise ValueError("cutoff/number/n_paths out of range")
        if self.sample_stride < 1 or self.n_orbits < 1 or self.n_points < 1:
            raise ValueError("stride/orbit/point counts must be positive")


@dataclass
class ScenarioResult:
    header: List[str]
    rows: List[Sequence[float]]
    summary: str


def sector_coherent_state(space: FockSpace, number: int, theta: float,
                          phi: float) -> PureState:
    """Spin-coherent state of the fixed-number sector, embedded in Fock space."""
    emb = SectorEmbedding(space, number)
    return emb.embed_state(su2_coherent_state(number + 1, theta, phi))


def bose_hubbard_setup(cfg: ScenarioConfig):
    """(space, Hamiltonian, su2 algebra, quadrature algebra) for the two-mode model."""
    space = FockSpace(cfg.cutoff)
    h = bose_hubbard_hamiltonian(space, eps1=0.0, eps2=cfg.eps,
                                 alpha=cfg.alpha, mu=cfg.mu)
    return space, h, schwinger_algebra(space), quadrature_algebra(space)


def lindblad_setup(cfg: ScenarioConfig) -> Tuple[LindbladSpec, PureState, FockSpace,
                                                 DistinguishedAlgebra, DistinguishedAlgebra]:
    """Open-system spec and initial state for the two-mode scenarios.

    J coupling starts from the balanced number state of the sector;
    quadrature coupling starts from the sector spin-coherent state.
    """
    space, h, salg, qalg = bose_hubbard_setup(cfg)
    if cfg.lindblads == "J":
        ops = [g for g in salg.generators]
        half = cfg.number // 2
        psi0 = space.number_state(cfg.number - half, half)
    else:
        ops = [g for g in qalg.generators]
        psi0 = sector_coherent_state(space, cfg.number, cfg.theta, cfg.phi)
    return LindbladSpec(hamiltonian=h, lindblads=ops, gamma=cfg.gamma), psi0, space, salg, qalg


def _default_shell_point(cfg: ScenarioConfig) -> np.ndarray:
    y0 = reduced.energy_shell_point(cfg.system, cfg.mu, cfg.omega, cfg.energy,
                                    q1=0.5, p1=-0.25)
    if y0 is not None:
        return y0
    return reduced.energy_shell_grid(cfg.system, cfg.mu, cfg.omega, cfg.energy)[0]


def run_timeseries(cfg: ScenarioConfig) -> ScenarioResult:
    """Coordinate time series of a reduced-flow orbit on an energy shell."""
    y0 = _default_shell_point(cfg)
    times, ys = reduced.integrate_reduced(y0, cfg.system, cfg.mu, cfg.omega,
                                          cfg.dt, cfg.t_final, cfg.sample_stride)
    alg = two_qubit_local_algebra()
    rows = []
    for t, y in zip(times, ys):
        energy = reduced.chart_energy(y, cfg.system, cfg.mu, cfg.omega)
        phi = generalized_purity(reduced.chart_state(y), alg) - alg.purity_max
        rows.append((t, y[0], y[1], y[2], y[3], energy, phi))
    drift = max(abs(r[5] - cfg.energy) for r in rows)
    summary = (f"timeseries[{cfg.system}] mu={cfg.mu} energy={cfg.energy}: "
               f"{len(rows)} samples, max energy drift {drift:.3e}")
    return ScenarioResult(["t", "q1", "q2", "p1", "p2", "energy", "phi"],
                          rows, summary)


def run_poincare(cfg: ScenarioConfig) -> ScenarioResult:
    """Section crossings (q2 = 0, p2 > 0) from a grid of shell orbits."""
    points = analysis.poincare_section(cfg.system, cfg.mu, cfg.omega, cfg.energy,
                                       n_orbits=cfg.n_orbits, t_max=cfg.t_final,
                                       dt=cfg.dt)
    rows = [(p.q1, p.p1, p.crossing_time) for p in points]
    occ = analysis.box_occupancy(points)
    summary = (f"poincare[{cfg.system}] mu={cfg.mu} energy={cfg.energy}: "
               f"{len(rows)} crossings from {cfg.n_orbits} orbits, "
               f"box occupancy {occ}")
    return ScenarioResult(["q1", "p1", "crossing_time"], rows, summary)


def run_qsd_fluctuation(cfg: ScenarioConfig) -> ScenarioResult:
    """Per-path fluctuation curves of the diffusive unraveling."""
    spec, psi0, space, salg, qalg = lindblad_setup(cfg)
    ens = run_qsd_ensemble(psi0, spec, cfg.dt, cfg.t_final, cfg.n_paths,
                           cfg.base_seed, cfg.sample_stride,
                           diagnostics={"su2": salg, "h4": qalg})
    d_su2 = ens.fluctuations["su2"].mean(axis=0)
    d_h4 = ens.fluctuations["h4"].mean(axis=0)
    p_su2 = ens.purities["su2"].mean(axis=0)
    rows = list(zip(ens.times, d_su2, d_h4, p_su2))
    summary = (f"qsd-fluctuation[{cfg.lindblads}] gamma={cfg.gamma} "
               f"paths={cfg.n_paths}: delta_su2 {d_su2[0]:.3f}->{d_su2[-1]:.3f}, "
               f"delta_h4 {d_h4[0]:.3f}->{d_h4[-1]:.3f}")
    return ScenarioResult(["t", "delta_su2", "delta_h4", "purity_su2"],
                          rows, summary)


def run_lindblad_fluctuation(cfg: ScenarioConfig) -> ScenarioResult:
    """Fluctuation curves of the master-equation solution."""
    spec, psi0, space, salg, qalg = lindblad_setup(cfg)
    traj = integrate_lindblad(psi0, spec, cfg.dt, cfg.t_final, cfg.sample_stride)
    d_su2 = analysis.fluctuation_series(traj.densities, salg)
    d_h4 = analysis.fluctuation_series(traj.densities, qalg)
    rows = list(zip(traj.times, d_su2, d_h4))
    summary = (f"lindblad-fluctuation[{cfg.lindblads}] gamma={cfg.gamma}: "
               f"delta_su2 {d_su2[0]:.3f}->{d_su2[-1]:.3f}, "
               f"delta_h4 {d_h4[0]:.3f}->{d_h4[-1]:.3f}")
    return ScenarioResult(["t", "delta_su2", "delta_h4"], rows, summary)


def run_compare_pointer(cfg: ScenarioConfig) -> ScenarioResult:
    """Master-equation mean versus weak-coupling flow for the spin-1 sector."""
    space, h, _, _ = bose_hubbard_setup(cfg)
    emb = SectorEmbedding(space, 2)
    h_sector = emb.restrict(h.matrix)
    j_sector = [emb.restrict(g.matrix) for g in schwinger_generators(space)]
    jz = j_sector[2]
    psi0 = PureState.basis_state(3, 2)   # lowest-weight state m = -1

    lspec = LindbladSpec(hamiltonian=h_sector, lindblads=j_sector, gamma=cfg.gamma)
    dtraj = integrate_lindblad(psi0, lspec, cfg.dt, cfg.t_final, cfg.sample_stride)
    jz_lind = analysis.observable_series(dtraj.densities, jz)

    alg = DistinguishedAlgebra([g for g in j_sector], label="sector su2",
                               purity_max=1.0, fluctuation_min=1.0)
    cspec = ConstrainedFlowSpec(hamiltonian=h_sector, algebra=alg,
                                mode="simplified", gamma=cfg.gamma)
    ctraj = integrate_flow(cspec, psi0, cfg.dt, cfg.t_final,
                           sample_stride=cfg.sample_stride)
    jz_con = analysis.observable_series(ctraj.states, jz)

    rows = [(t, a, b, abs(a - b)) for t, a, b in zip(dtraj.times, jz_lind, jz_con)]
    sup = max(r[3] for r in rows)
    summary = (f"compare-pointer gamma={cfg.gamma} eps={cfg.eps}: "
               f"sup |Tr[rho Jz] - <Jz>| = {sup:.4f} over t<={cfg.t_final}")
    return ScenarioResult(["t", "jz_lindblad", "jz_constrained", "abs_diff"],
                          rows, summary)


def run_gradient_check(cfg: ScenarioConfig) -> ScenarioResult:
    """Finite-difference validation of analytic gradients per algebra."""
    rng = np.random.default_rng(cfg.base_seed)
    targets = {
        "qubit_pauli": (su2_algebra(2), None),
        "two_qubit_local": (two_qubit_local_algebra(), two_qubit_local_algebra()),
        "su2_j1": (su2_algebra(3), su2_algebra(3)),
        "su2_j2": (su2_algebra(5), su2_algebra(5)),
    }
    rows = []
    worst = 0.0
    for label, (alg, constraint_alg) in targets.items():
        op = alg.generators[0].matrix
        err_exp = 0.0
        err_phi = 0.0
        for _ in range(cfg.n_points):
            x = rng.standard_normal(2 * alg.dim)
            x *= np.sqrt(2.0) / np.linalg.norm(x)
            g = expectation_gradient(x, op)
            g_fd = finite_difference_gradient(lambda z: expectation_value(z, op), x)
            err_exp = max(err_exp, np.linalg.norm(g - g_fd)
                          / max(np.linalg.norm(g), 1e-9))
            if constraint_alg is not None:
                _, gp = purity_constraint(x, constraint_alg)
                gp_fd = finite_difference_gradient(
                    lambda z: purity_constraint(z, constraint_alg)[0], x)
                err_phi = max(err_phi, np.linalg.norm(gp - gp_fd)
                              / max(np.linalg.norm(gp), 1e-9))
        rows.append((label, err_exp, err_phi))
        worst = max(worst, err_exp, err_phi)
    ok = worst <= 1e-6
    summary = (f"gradient-check: {cfg.n_points} points/algebra, "
               f"worst relative error {worst:.2e} -> {'PASS' if ok else 'FAIL'}")
    return ScenarioResult(["algebra", "rel_err_expectation", "rel_err_constraint"],
                          rows, summary)


def run_constraint_drift(cfg: ScenarioConfig) -> ScenarioResult:
    """Constraint conservation of the full flow from a spin-coherent start."""
    jx, jy, jz = (g.matrix for g in su2_generators(3))
    h = jz - 2 * jx + cfg.mu * (jz @ jz)
    spec = ConstrainedFlowSpec(hamiltonian=h, algebra=su2_algebra(3))
    psi0 = su2_coherent_state(3, cfg.theta, cfg.phi)
    traj = integrate_flow(spec, psi0, cfg.dt, cfg.t_final,
                          projection=cfg.projection,
                          sample_stride=cfg.sample_stride)
    rows = list(zip(traj.times, traj.phi, traj.energy))
    summary = (f"constraint-drift mu={cfg.mu} projection="
               f"{'on' if cfg.projection else 'off'}: "
               f"max|Phi| = {traj.max_abs_phi:.3e}")
    return ScenarioResult(["t", "phi", "energy"], rows, summary)


def run_wiener_moments(cfg: ScenarioConfig) -> ScenarioResult:
    """Sample-moment checks of the complex Wiener increments."""
    rng = np.random.default_rng(cfg.base_seed)
    draws = cfg.n_points
    dt = cfg.dt
    samples = np.array([sample_wiener(rng, 1, dt)[0] for _ in range(draws)])
    mean_bound = 5 * math.sqrt(dt / draws)
    sq_bound = 5 * math.sqrt(dt / draws)
    abs_bound = 5 * dt / math.sqrt(draws)
    rows = [
        ("abs_mean", abs(samples.mean()), mean_bound),
        ("abs_mean_square", abs((samples ** 2).mean()), sq_bound),
        ("abs_sq_deviation", abs((np.abs(samples) ** 2).mean() - dt), abs_bound),
    ]
    ok = all(v <= b for _, v, b in rows)
    summary = (f"wiener-moments: {draws} draws at dt={dt} -> "
               f"{'PASS' if ok else 'FAIL'}")
    return ScenarioResult(["statistic", "value", "bound"], rows, summary)


def run_qsd_vs_lindblad(cfg: ScenarioConfig) -> ScenarioResult:
    """Ensemble mean versus master equation on the fixed-number sector."""
    space, h, salg, _ = bose_hubbard_setup(cfg)
    emb = SectorEmbedding(space, cfg.number)
    h_sector = emb.restrict(h.matrix)
    j_sector = [emb.restrict(g.matrix) for g in schwinger_generators(space)]
    spec = LindbladSpec(hamiltonian=h_sector, lindblads=j_sector, gamma=cfg.gamma)
    half = cfg.number // 2
    psi0 = PureState.basis_state(cfg.number + 1, cfg.number - half)
    ens = run_qsd_ensemble(psi0, spec, cfg.dt, cfg.t_final, cfg.n_paths,
                           cfg.base_seed, cfg.sample_stride)
    dtraj = integrate_lindblad(psi0, spec, cfg.dt, cfg.t_final, cfg.sample_stride)
    se = ens.jackknife_se()
    rows = []
    worst = 0.0
    for k, t in enumerate(ens.times):
        dist = float(np.linalg.norm(ens.mean_density[k] - dtraj.densities[k]))
        ratio = dist / se[k] if se[k] > 0 else 0.0
        worst = max(worst, ratio)
        rows.append((t, dist, se[k], ratio))
    ok = worst <= 3.0
    summary = (f"qsd-vs-lindblad: {cfg.n_paths} paths, max distance/SE = "
               f"{worst:.2f} -> {'PASS' if ok else 'FAIL'}")
    return ScenarioResult(["t", "hs_distance", "jackknife_se", "ratio"],
                          rows, summary)


SCENARIOS: Dict[str, Tuple[Callable[[ScenarioConfig], ScenarioResult], Dict]] = {
    "timeseries": (run_timeseries,
                   dict(mu=1.5, energy=1.5, system="ns", dt=1e-3,
                        t_final=200.0, sample_stride=10)),
    "poincare": (run_poincare,
                 dict(mu=1.1, energy=1.5, system="ns", dt=2e-3,
                      t_final=2000.0, n_orbits=9)),
    "qsd-fluctuation": (run_qsd_fluctuation,
                        dict(mu=0.1, alpha=1.0, eps=0.0, gamma=0.9, cutoff=8,
                             number=4, dt=1e-3, t_final=10.0,
                             sample_stride=100, n_paths=1, base_seed=7)),
    "lindblad-fluctuation": (run_lindblad_fluctuation,
                             dict(mu=0.1, alpha=1.0, eps=0.0, gamma=0.9,
                                  cutoff=8, number=4, dt=5e-3, t_final=10.0,
                                  sample_stride=20)),
    "compare-pointer": (run_compare_pointer,
                        dict(mu=0.1, alpha=1.0, eps=0.0, gamma=0.2, cutoff=8,
                             dt=1e-3, t_final=10.0, sample_stride=10)),
    "gradient-check": (run_gradient_check, dict(n_points=100, base_seed=7)),
    "constraint-drift": (run_constraint_drift,
                         dict(mu=0.5, theta=0.9, phi=0.4, dt=1e-3,
                              t_final=50.0, sample_stride=100)),
    "wiener-moments": (run_wiener_moments,
                       dict(dt=1e-3, base_seed=7, n_points=100000)),
    "qsd-vs-lindblad": (run_qsd_vs_lindblad,
                        dict(mu=0.1, alpha=1.0, eps=0.0, gamma=0.9, cutoff=8,
                             number=4, dt=1e-3, t_final=5.0,
                             sample_stride=100, n_paths=100, base_seed=2024)),
}


def make_config(name: str, overrides: Optional[Dict] = None) -> ScenarioConfig:
    """Scenario defaults merged with overrides, validated."""
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    values = dict(SCENARIOS[name][1])
    values.update(overrides or {})
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    bad = set(values) - known
    if bad:
        raise ValueError(f"unknown scenario parameters: {sorted(bad)}")
    cfg = ScenarioConfig(name=name, **values)
    cfg.validate()
    return cfg


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    cfg.validate()
    runner, _ = SCENARIOS[cfg.name]
    return runner(cfg)
