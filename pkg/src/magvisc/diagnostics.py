"""Energy ledger, Helmholtz energy, Gronwall bookkeeping for twin runs,
Prodi-Serrin monitoring and the pointwise cubic-term inequalities."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ops
from .grid import FieldState, GridSpec, SimParams, interior_cells

QUAD_NAMES = ("v2", "F2", "M2", "gradM2")
DISS_NAMES = ("nu_gradv2", "kappa_gradF2", "gradM2_dt", "lapM2_dt", "gl_dt")


# --------------------------------------------------------------------------
# discrete energy quantities

def _ip(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    return float(np.sum(a * b) * grid.cell_volume)


def kinetic_sq(state: FieldState) -> float:
    g = state.grid
    return sum(_ip(u, u, g) for u in state.velocity_unknowns())


def grad_v_sq(state: FieldState) -> float:
    """``-(L v, v)``: the discrete Dirichlet energy of the velocity."""
    g = state.grid
    return -sum(_ip(L, u, g) for L, u in zip(ops.laplacian(state.v, g), state.velocity_unknowns()))


def grad_F_sq(state: FieldState) -> float:
    return -_ip(ops.laplacian(state.F, state.grid), state.interior("F"), state.grid)


def grad_M_sq(state: FieldState) -> float:
    return -_ip(ops.laplacian(state.M, state.grid), state.interior("M"), state.grid)


def lap_M_sq(state: FieldState) -> float:
    L = ops.laplacian(state.M, state.grid)
    return _ip(L, L, state.grid)


def gl_work(state: FieldState, mu: float) -> float:
    """``(1/mu^2) ((|M|^2 - 1) M, M - Lap M)``."""
    M = state.interior("M")
    return _ip(ops.ginzburg_landau(M, mu), M - ops.laplacian(state.M, state.grid), state.grid)


def quadratic_terms(state: FieldState) -> np.ndarray:
    F, M = state.interior("F"), state.interior("M")
    g = state.grid
    return np.array([kinetic_sq(state), _ip(F, F, g), _ip(M, M, g), grad_M_sq(state)])


def dissipation_rates(state: FieldState, params: SimParams) -> np.ndarray:
    gl = gl_work(state, params.mu) if params.coupling.ginzburg_landau else 0.0
    return np.array([params.nu * grad_v_sq(state), params.kappa * grad_F_sq(state),
                     grad_M_sq(state), lap_M_sq(state), gl])


def helmholtz_energy(state: FieldState, params: SimParams) -> float:
    """psi = 1/2 |grad M|^2 - M.H + (|M|^2 - 1)^2 / (4 mu^2) + 1/2 |F|^2, integrated."""
    g = state.grid
    M, F = state.interior("M"), state.interior("F")
    penalty = np.sum((np.sum(M * M, axis=-1) - 1.0) ** 2) * g.cell_volume / (4 * params.mu ** 2)
    field_term = _ip(M, np.broadcast_to(np.asarray(params.h_ext), M.shape), g)
    return 0.5 * grad_M_sq(state) - field_term + float(penalty) + 0.5 * _ip(F, F, g)


def total_energy(state: FieldState, params: SimParams) -> float:
    """Kinetic energy plus Helmholtz energy."""
    return 0.5 * kinetic_sq(state) + helmholtz_energy(state, params)


# --------------------------------------------------------------------------
# ledger

@dataclass(frozen=True)
class EnergyLedger:
    """Running budget of the not-quite-energy inequality.

    ``lhs = sum(quad) + 2 * sum(dissipation)`` must stay below ``rhs``; the
    dissipation integrals use the right-endpoint rule, the quadrature under
    which the implicit step satisfies the discrete budget exactly.  External
    field work, when a field is applied, is added to ``rhs``.
    """

    t: float
    quad: np.ndarray
    dissipation: np.ndarray
    rhs: float
    helmholtz: float
    work: float = 0.0

    @property
    def lhs(self) -> float:
        return float(np.sum(self.quad) + 2.0 * np.sum(self.dissipation))

    @property
    def slack(self) -> float:
        return self.rhs + self.work - self.lhs

    def row(self) -> list[float]:
        return [self.t, *self.quad, *self.dissipation, self.slack, self.helmholtz]


LEDGER_COLUMNS = ["t", *QUAD_NAMES, *DISS_NAMES, "slack", "psi"]


def new_ledger(state: FieldState, params: SimParams) -> EnergyLedger:
    quad = quadratic_terms(state)
    return EnergyLedger(t=state.time, quad=quad, dissipation=np.zeros(5), rhs=float(np.sum(quad)),
                        helmholtz=helmholtz_energy(state, params))


def update_ledger(ledger: EnergyLedger, state: FieldState, params: SimParams, dt: float) -> EnergyLedger:
    """Advance the ledger to ``state`` (reached from the previous sample by a step ``dt``)."""
    diss = ledger.dissipation + dt * dissipation_rates(state, params)
    work = ledger.work
    if params.has_field:
        M = state.interior("M")
        H = np.broadcast_to(np.asarray(params.h_ext), M.shape)
        work += 2 * dt * _ip(H, M - ops.laplacian(state.M, state.grid), state.grid)
    return replace(ledger, t=state.time, quad=quadratic_terms(state), dissipation=diss,
                   helmholtz=helmholtz_energy(state, params), work=work)


# --------------------------------------------------------------------------
# twin runs and the Gronwall functional

@dataclass
class GronwallRecord:
    t: float
    f: float
    g: float
    h: float
    I: np.ndarray

    def row(self) -> list[float]:
        return [self.t, self.f, self.g, self.h, *self.I]


GRONWALL_COLUMNS = ["t", "f", "g", "h", *(f"I{i}" for i in range(1, 10))]


def _same_grid(s1: FieldState, s2: FieldState) -> GridSpec:
    if s1.grid != s2.grid:
        raise ValueError("states live on different grids")
    return s1.grid


def difference_state(s1: FieldState, s2: FieldState) -> FieldState:
    _same_grid(s1, s2)
    return FieldState(s1.grid, tuple(a - b for a, b in zip(s1.v, s2.v)), s1.p - s2.p,
                      s1.F - s2.F, s1.M - s2.M, s1.time)


def difference_functional(s1: FieldState, s2: FieldState) -> float:
    """f = 1/2 (|v|^2 + |F|^2 + |M|^2 + |grad M|^2) of the difference."""
    return 0.5 * float(np.sum(quadratic_terms(difference_state(s1, s2))))


def difference_dissipation(s1: FieldState, s2: FieldState, params: SimParams) -> float:
    """g = nu |grad v|^2 + kappa |grad F|^2 + |grad M|^2 + |Lap M|^2 of the difference."""
    d = difference_state(s1, s2)
    return (params.nu * grad_v_sq(d) + params.kappa * grad_F_sq(d) + grad_M_sq(d) + lap_M_sq(d))


def cross_terms(s1: FieldState, s2: FieldState, params: SimParams) -> np.ndarray:
    """The nine integrals I1..I9 of the difference identity

        f' + g + I1 + ... + I9 = 0,

    ordered as: transport of v, magnetic stress, elastic stress, transport
    of F, stretching of F, then transport and GL paired with M and with
    -Lap M.  Terms for switched-off couplings are zero.
    """
    grid = _same_grid(s1, s2)
    c = params.coupling
    d = difference_state(s1, s2)
    ip = lambda a, b: _ip(a, b, grid)
    vsum = lambda a, b: sum(_ip(x, y, grid) for x, y in zip(a, b))
    dv = d.velocity_unknowns()
    dF, dM = d.interior("F"), d.interior("M")
    lapdM = ops.laplacian(d.M, grid)
    scheme = params.advection_scheme
    I = np.zeros(9)
    if c.advection:
        n1, n2 = ops.momentum_advection(s1.v, grid, scheme), ops.momentum_advection(s2.v, grid, scheme)
        I[0] = vsum([a - b for a, b in zip(n1, n2)], dv)
        aF = ops.advect(s1.v, s1.F, grid, scheme) - ops.advect(s2.v, s2.F, grid, scheme)
        I[3] = ip(aF, dF)
        aM = ops.advect(s1.v, s1.M, grid, scheme) - ops.advect(s2.v, s2.M, grid, scheme)
        I[5] = ip(aM, dM)
        I[7] = -ip(aM, lapdM)
    if c.magnetic_stress:
        m1, m2 = ops.magnetic_force(s1.M, grid), ops.magnetic_force(s2.M, grid)
        I[1] = vsum([a - b for a, b in zip(m1, m2)], dv)
    if c.elastic_stress:
        e1, e2 = ops.elastic_stress_div(s1.F, grid), ops.elastic_stress_div(s2.F, grid)
        I[2] = -vsum([a - b for a, b in zip(e1, e2)], dv)
    if c.stretching:
        st = ops.velocity_gradient_times_F(s1.v, s1.F, grid) - ops.velocity_gradient_times_F(s2.v, s2.F, grid)
        I[4] = -ip(st, dF)
    if c.ginzburg_landau:
        gl = ops.ginzburg_landau(s1.interior("M"), params.mu) - ops.ginzburg_landau(s2.interior("M"), params.mu)
        I[6] = ip(gl, dM)
        I[8] = -ip(gl, lapdM)
    return I


def _cell_grad_norm_field(M: np.ndarray, grid: GridSpec) -> np.ndarray:
    J = ops._centered_grad(M, grid)
    return np.sqrt(np.sum(J ** 2, axis=(-2, -1)))


def gronwall_majorant(s1: FieldState, s2: FieldState, mode: int | str = 2, s: float = 4.0,
                      C: float = 1.0) -> float:
    """Majorant density h(t) of the Gronwall argument for the pair (s1, s2).

    ``mode=2`` sums the planar densities built from the first solution's
    dissipation norms; ``mode=3`` uses the Prodi-Serrin norms
    ``|.|_{L^s}^r`` of the second solution.  Both add
    ``1 + |M1|_8^4 + |M2|_8^4``.  The calibration constant ``C`` multiplies
    the whole sum.
    """
    from .norms import cell_velocity, prodi_serrin_pair, space_norm

    grid = _same_grid(s1, s2)
    M1, M2 = s1.interior("M"), s2.interior("M")
    base = 1.0 + space_norm(M1, grid, 8) ** 4 + space_norm(M2, grid, 8) ** 4
    mode = int(str(mode).rstrip("dD"))
    if mode == 2:
        h = (grad_v_sq(s1) + grad_F_sq(s1) + grad_M_sq(s1) + lap_M_sq(s2)
             + np.sqrt(kinetic_sq(s2) * max(grad_v_sq(s2), 0.0)))
    elif mode == 3:
        r = prodi_serrin_pair(s)
        h = sum(space_norm(x, grid, s) ** r for x in (
            cell_velocity(s2.v, grid), s2.interior("F"), M2, _cell_grad_norm_field(s2.M, grid)))
    else:
        raise ValueError("mode must be 2 or 3")
    return float(C * (h + base))


def gronwall_record(s1: FieldState, s2: FieldState, params: SimParams, mode=2, s: float = 4.0) -> GronwallRecord:
    return GronwallRecord(t=s1.time, f=difference_functional(s1, s2),
                          g=difference_dissipation(s1, s2, params),
                          h=gronwall_majorant(s1, s2, mode, s), I=cross_terms(s1, s2, params))


def identity_residual(records: list[GronwallRecord]) -> np.ndarray:
    """``f(t) - f(0) + int_0^t (g + sum I)``; right-endpoint rule, as the scheme."""
    t = np.array([r.t for r in records])
    rate = np.array([r.g + np.sum(r.I) for r in records])
    f = np.array([r.f for r in records])
    integral = np.concatenate([[0.0], np.cumsum(np.diff(t) * rate[1:])])
    return f - f[0] + integral


def fit_gronwall_constant(records: list[GronwallRecord]) -> dict:
    """Calibrate ``log f(t) - log f(0) <= C int_0^t h``.

    Returns the least-squares slope through the origin (``C_fit``) and the
    smallest constant bounding every sample (``C_bound``).
    """
    t = np.array([r.t for r in records])
    f = np.array([r.f for r in records])
    h = np.array([r.h for r in records])
    H = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (h[1:] + h[:-1]))])
    if f[0] <= 0 or np.any(f <= 0) or len(t) < 2:
        return {"C_fit": 0.0, "C_bound": 0.0}
    y = np.log(f / f[0])
    mask = H > 0
    c_fit = float(np.sum(H[mask] * y[mask]) / np.sum(H[mask] ** 2)) if mask.any() else 0.0
    c_bound = float(max(0.0, np.max(y[mask] / H[mask]))) if mask.any() else 0.0
    return {"C_fit": c_fit, "C_bound": c_bound}


@dataclass(frozen=True)
class PerturbationSpec:
    """Divergence-free, boundary-compatible perturbation of size ``amplitude``
    (max norm) applied to the listed fields."""

    amplitude: float
    fields: tuple[str, ...] = ("v", "F", "M")
    seed: int = 2024
    modes: int = 3


def perturb(state: FieldState, spec: PerturbationSpec, f_boundary: str = "zero") -> FieldState:
    from .grid import (apply_boundary_conditions, curl_velocity, _node_envelope, InitialConditionSpec,
                       make_state)

    bad = set(spec.fields) - {"v", "F", "M"}
    if bad:
        raise ValueError(f"unknown perturbed fields {sorted(bad)}")
    if spec.amplitude == 0:
        return state.copy()
    grid = state.grid
    shape = make_state(grid, InitialConditionSpec("random-smooth", {"seed": spec.seed, "modes": spec.modes,
                                                                    "amplitude": 1.0}))
    out = state.copy()
    inner = interior_cells(grid.dim)
    if "v" in spec.fields:
        scale = spec.amplitude / max(float(np.abs(vk).max()) for vk in shape.v)
        out = replace(out, v=tuple(a + scale * b for a, b in zip(out.v, shape.v)))
    if "F" in spec.fields:
        dF = shape.F[inner]
        out.F[inner] += spec.amplitude * dF / max(np.abs(dF).max(), 1e-300)
    if "M" in spec.fields:
        dM = shape.M[inner] - shape.M[inner].mean(axis=tuple(range(grid.dim)))
        out.M[inner] += spec.amplitude * dM / max(np.abs(dM).max(), 1e-300)
    return apply_boundary_conditions(out, f_boundary)


@dataclass
class TwinRun:
    delta: float
    records: list
    identical: bool
    ratio: float
    constants: dict
    states: list = field(default_factory=list)


@dataclass
class TwinExperiment:
    runs: list
    verdict: bool
    reasons: list = field(default_factory=list)

    @property
    def ratios(self) -> dict:
        return {r.delta: r.ratio for r in self.runs}


def _bit_identical(a: FieldState, b: FieldState) -> bool:
    arrays = lambda s: list(s.v) + [s.p, s.F, s.M]
    return all(np.array_equal(x, y) for x, y in zip(arrays(a), arrays(b)))


def twin_run(state: FieldState, params: SimParams, spec: PerturbationSpec, cadence: int = 5,
             mode=None, s: float = 4.0, keep_states: bool = False) -> TwinRun:
    """Advance ``state`` and its perturbation side by side, recording the
    difference functional, dissipation, majorant and cross terms.
    ``keep_states`` stores the unperturbed states at the sample times."""
    from .solver import advance, step_count

    mode = state.grid.dim if mode is None else mode
    a = state.copy()
    b = perturb(state, spec, params.f_boundary)
    records = [gronwall_record(a, b, params, mode, s)]
    identical = _bit_identical(a, b)
    states = [a] if keep_states else []
    n = step_count(params.t_end - state.time, params.dt)
    for k in range(1, n + 1):
        step_params = params if k < n else replace(params, dt=params.t_end - a.time)
        a, _ = advance(a, step_params)
        b, _ = advance(b, step_params)
        identical = identical and _bit_identical(a, b)
        if k % cadence == 0 or k == n:
            records.append(gronwall_record(a, b, params, mode, s))
            if keep_states:
                states.append(a)
    f0 = records[0].f
    ratio = records[-1].f / f0 if f0 > 0 else 0.0
    return TwinRun(spec.amplitude, records, identical, ratio, fit_gronwall_constant(records), states)


def run_twin_experiment(state: FieldState, params: SimParams,
                        deltas=(0.0, 1e-4, 1e-5, 1e-6), fields=("v", "F", "M"), seed: int = 2024,
                        cadence: int = 5, mode=None, s: float = 4.0, spread: float = 2.0,
                        keep_states: bool = False) -> TwinExperiment:
    """Twin runs over a sequence of perturbation sizes.

    PASS requires the unperturbed twin to stay bit-identical and the
    amplification ratios f(T)/f(0) of the nonzero perturbations to agree
    within a factor ``spread``.  ``keep_states`` keeps the unperturbed
    states of the first twin.
    """
    runs = [twin_run(state, params, PerturbationSpec(d, tuple(fields), seed), cadence, mode, s,
                     keep_states and i == 0) for i, d in enumerate(deltas)]
    reasons = []
    for r in runs:
        if r.delta == 0 and not r.identical:
            reasons.append("zero perturbation did not reproduce the trajectory bit for bit")
        if r.delta == 0 and any(rec.f != 0 for rec in r.records):
            reasons.append("zero perturbation produced a nonzero difference functional")
    ratios = [r.ratio for r in runs if r.delta != 0]
    if ratios:
        lo, hi = min(ratios), max(ratios)
        if not (np.isfinite(hi) and lo > 0 and hi <= spread * lo):
            reasons.append(f"amplification ratios {ratios} are not within a factor {spread}")
    return TwinExperiment(runs, not reasons, reasons)


# --------------------------------------------------------------------------
# Prodi-Serrin monitoring

@dataclass
class ProdiSerrinLog:
    s: float
    r: float
    times: np.ndarray
    norms: np.ndarray      # (samples, 3): |v|_s, |F|_s, |grad M|_s
    bochner: np.ndarray    # (samples, 3): running L^r(0, t) norms

    COLUMNS = ("t", "v_Ls", "F_Ls", "gradM_Ls", "v_LrLs", "F_LrLs", "gradM_LrLs")

    def rows(self):
        for t, a, b in zip(self.times, self.norms, self.bochner):
            yield [t, *a, *b]

    @property
    def final(self) -> np.ndarray:
        return self.bochner[-1]


def prodi_serrin_norms(state: FieldState, s: float) -> np.ndarray:
    from .norms import cell_velocity, space_norm

    g = state.grid
    return np.array([space_norm(cell_velocity(state.v, g), g, s), space_norm(state.interior("F"), g, s),
                     space_norm(_cell_grad_norm_field(state.M, g), g, s)])


def prodi_serrin_monitor(trajectory, s: float = 4.0) -> ProdiSerrinLog:
    """Space norms of v, F, grad M in L^s at each stored state and their
    running L^r-in-time norms with ``2/r + 3/s = 1``."""
    from .norms import BochnerSeries, bochner_norm, prodi_serrin_pair

    r = prodi_serrin_pair(s)
    states = getattr(trajectory, "states", trajectory)
    states = list(states)
    if not states:
        raise ValueError("empty trajectory")
    times = np.array([st.time for st in states])
    norms = np.array([prodi_serrin_norms(st, s) for st in states])
    running = np.zeros_like(norms)
    for i in range(1, len(states)):
        for j in range(3):
            running[i, j] = bochner_norm(BochnerSeries(times[: i + 1], norms[: i + 1, j], r, s))
    return ProdiSerrinLog(s, r, times, norms, running)


# --------------------------------------------------------------------------
# pointwise cubic inequalities

@dataclass
class CubicReport:
    n_samples: int
    monotone_violations: np.ndarray
    bound_violations: np.ndarray
    min_dot: float
    max_bound_ratio: float

    @property
    def passed(self) -> bool:
        return self.monotone_violations.size == 0 and self.bound_violations.size == 0


def cubic_monotonicity_check(a: np.ndarray, b: np.ndarray, rtol: float = 1e-12) -> CubicReport:
    """Check ``(|a|^2 a - |b|^2 b).(a - b) >= 0`` and
    ``||a|^2 a - |b|^2 b| <= 3/2 |a - b| (|a|^2 + |b|^2)`` for each pair of rows."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError("a and b must have the same shape")
    na, nb = np.sum(a * a, axis=-1), np.sum(b * b, axis=-1)
    diff = na[:, None] * a - nb[:, None] * b
    dab = a - b
    dot = np.sum(diff * dab, axis=-1)
    lhs = np.linalg.norm(diff, axis=-1)
    rhs = 1.5 * np.linalg.norm(dab, axis=-1) * (na + nb)
    scale = (na + nb) * np.sum(dab * dab, axis=-1)
    mono = np.flatnonzero(dot < -rtol * scale)
    bound = np.flatnonzero(lhs > rhs * (1 + rtol))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, 0.0)
    return CubicReport(len(a), mono, bound, float(dot.min()) if len(dot) else 0.0,
                       float(ratio.max()) if len(ratio) else 0.0)


# --------------------------------------------------------------------------
# stress identity audit

@dataclass
class StressIdentityReport:
    levels: np.ndarray
    residuals: np.ndarray
    orders: np.ndarray

    @property
    def min_order(self) -> float:
        return float(np.min(self.orders))


def _default_magnetisation(X, Y):
    return np.stack([np.cos(np.pi * X) * np.cos(2 * np.pi * Y), 0.5 * np.cos(np.pi * Y) + np.cos(np.pi * X) ** 2,
                     1 + 0.3 * np.cos(np.pi * X) * np.cos(np.pi * Y)], -1)


def stress_identity_residual(M_fn, n: int) -> float:
    """L2 norm over faces of ``div(grad^T M grad M) - (1/2 grad |grad M|^2 + grad^T M Lap M)``
    for a Neumann field sampled on an ``n x n`` grid, skipping the face layer
    next to the walls where the even reflection of the tensor is only first order."""
    from .grid import fill_neumann, pad_cells
    from .ops import magnetic_stress_div

    g = GridSpec(2, n)
    M = pad_cells(np.asarray(M_fn(*g.cell_coords()), dtype=float), 2)
    fill_neumann(M, 2)
    a = magnetic_stress_div(M, g, "divergence")
    b = magnetic_stress_div(M, g, "split")
    inner = (slice(1, -1), slice(1, -1))
    return float(np.sqrt(sum(np.sum((x - y)[inner] ** 2) for x, y in zip(a, b)) * g.cell_volume))


def stress_identity_audit(levels=(32, 64, 128), M_fn=None) -> StressIdentityReport:
    """Residual of the magnetic stress identity on refined grids and the
    observed orders between successive levels."""
    M_fn = M_fn or _default_magnetisation
    levels = np.asarray(levels)
    res = np.array([stress_identity_residual(M_fn, int(n)) for n in levels])
    return StressIdentityReport(levels, res, np.log(res[:-1] / res[1:]) / np.log(levels[1:] / levels[:-1]))
