"""Modal Galerkin model of the momentum equation on the periodic unit square.

The velocity is expanded in solenoidal Fourier modes; its coefficients obey

    dg_i/dt = -nu lambda_i g_i + sum_jk A^i_jk g_j g_k + D_i,

with the convection tensor ``A^i_jk = -int (xi_j . grad) xi_k . xi_i`` and the
stress forcing ``D_i = int (grad^T M grad M - F F^T) : grad xi_i``.  F and M
live on a periodic collocation grid with spectral derivatives and are
advanced by an implicit-diffusion step with the reconstructed velocity.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# basis

@dataclass(frozen=True)
class BasisSpec:
    modes: int
    kind: str = "fourier_periodic"

    def __post_init__(self):
        if self.kind != "fourier_periodic":
            raise ValueError("only the periodic Fourier basis is available")
        if self.modes < 1:
            raise ValueError("at least one mode is required")


def _wavevectors(count: int) -> list[tuple[int, int]]:
    """Half-plane wavevectors ordered by |k|^2, then lexicographically (descending k1)."""
    out, radius = [], 1
    while 2 * len(out) < count:
        ks = [(a, b) for a in range(0, radius + 1) for b in range(-radius, radius + 1)
              if (a > 0 or b > 0)]
        out = sorted(ks, key=lambda k: (k[0] ** 2 + k[1] ** 2, -k[0], -k[1]))
        radius += 1
        out = [k for k in out if k[0] ** 2 + k[1] ** 2 < radius ** 2]
    return out


@dataclass(frozen=True)
class FourierBasis:
    """``xi = sqrt(2) e_k cos(2 pi k.x)`` or ``sqrt(2) e_k sin(2 pi k.x)`` with
    ``e_k = (-k2, k1)/|k|``: orthonormal and exactly divergence-free."""

    k: np.ndarray        # (m, 2) integer wavevectors
    parity: np.ndarray   # (m,) 0 = cosine, 1 = sine
    pol: np.ndarray      # (m, 2) unit polarisation
    lam: np.ndarray      # (m,) Stokes eigenvalues 4 pi^2 |k|^2

    @property
    def m(self) -> int:
        return len(self.lam)

    @property
    def kmax(self) -> int:
        return int(np.abs(self.k).max())

    def _phase(self, X, Y):
        return TWO_PI * (self.k[:, 0, None, None] * X + self.k[:, 1, None, None] * Y)

    def values(self, X, Y) -> np.ndarray:
        """Shape ``(m, 2) + X.shape``."""
        th = self._phase(X, Y)
        s = np.where(self.parity[:, None, None] == 0, np.cos(th), np.sin(th))
        return np.sqrt(2.0) * self.pol[:, :, None, None] * s[:, None]

    def gradients(self, X, Y) -> np.ndarray:
        """``G[i, a, b] = d_b xi_i^a``, shape ``(m, 2, 2) + X.shape``."""
        th = self._phase(X, Y)
        ds = np.where(self.parity[:, None, None] == 0, -np.sin(th), np.cos(th))
        kk = TWO_PI * self.k.astype(float)
        return np.sqrt(2.0) * self.pol[:, :, None, None, None] * kk[:, None, :, None, None] * ds[:, None, None]

    def velocity(self, g: np.ndarray, X, Y) -> np.ndarray:
        return np.einsum("i,ia...->...a", g, self.values(X, Y))

    def velocity_gradient(self, g: np.ndarray, X, Y) -> np.ndarray:
        return np.einsum("i,iab...->...ab", g, self.gradients(X, Y))


def assemble_basis(spec: BasisSpec | int) -> FourierBasis:
    spec = BasisSpec(spec) if isinstance(spec, (int, np.integer)) else spec
    ks = _wavevectors(spec.modes)
    rows = [(k, p) for k in ks for p in (0, 1)][: spec.modes]
    k = np.array([r[0] for r in rows], dtype=int)
    parity = np.array([r[1] for r in rows], dtype=int)
    norm = np.sqrt(np.sum(k ** 2, axis=1))
    pol = np.stack([-k[:, 1], k[:, 0]], axis=1) / norm[:, None]
    return FourierBasis(k, parity, pol, TWO_PI ** 2 * norm ** 2)


def quadrature_grid(n: int):
    x = (np.arange(n) + 0.5) / n
    return np.meshgrid(x, x, indexing="ij")


def assemble_convection_tensor(basis: FourierBasis, n_quad: int | None = None) -> np.ndarray:
    """``A[i, j, k] = -int (xi_j . grad) xi_k . xi_i``.

    Products of three modes contain frequencies up to ``3 kmax`` per axis, so
    the uniform rule with more points than that is exact.
    """
    n = n_quad or max(8, 3 * basis.kmax + 2)
    if n <= 3 * basis.kmax:
        raise ValueError("quadrature grid too coarse to integrate mode triples exactly")
    X, Y = quadrature_grid(n)
    xi = basis.values(X, Y).reshape(basis.m, 2, -1)
    G = basis.gradients(X, Y).reshape(basis.m, 2, 2, -1)
    # (xi_j . grad) xi_k [a] = sum_b xi_j^b d_b xi_k^a
    conv = np.einsum("jbq,kabq->jkaq", xi, G)
    return -np.einsum("jkaq,iaq->ijk", conv, xi) / n ** 2


def convection(A: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("ijk,j,k->i", A, g, g)


def skew_defect(A: np.ndarray) -> float:
    """``max |A[i, j, k] + A[k, j, i]|``; zero for an exactly skew trilinear form."""
    return float(np.max(np.abs(A + A.transpose(2, 1, 0))))


# --------------------------------------------------------------------------
# periodic collocation fields

@dataclass(frozen=True)
class PeriodicGrid:
    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("need at least 4 points per axis")

    @property
    def coords(self):
        return quadrature_grid(self.n)

    @property
    def wavenumbers(self):
        k = TWO_PI * np.fft.fftfreq(self.n, d=1.0 / self.n)
        return np.meshgrid(k, k, indexing="ij")

    def derivative(self, q: np.ndarray, axis: int) -> np.ndarray:
        """Spectral derivative along ``axis`` (0 or 1) of a field with trailing components."""
        K = self.wavenumbers[axis]
        K = K.reshape(K.shape + (1,) * (q.ndim - 2))
        if self.n % 2 == 0:
            K = K.copy()
            nyq = self.n // 2
            sl = [slice(None)] * q.ndim
            sl[axis] = nyq
            K[tuple(sl)] = 0.0
        return np.real(np.fft.ifft2(1j * K * np.fft.fft2(q, axes=(0, 1)), axes=(0, 1)))

    def gradient(self, q: np.ndarray) -> np.ndarray:
        """Trailing derivative axis: ``(..., comps, 2)``."""
        return np.stack([self.derivative(q, 0), self.derivative(q, 1)], axis=-1)

    def laplacian(self, q: np.ndarray) -> np.ndarray:
        K0, K1 = self.wavenumbers
        sym = -(K0 ** 2 + K1 ** 2).reshape(K0.shape + (1,) * (q.ndim - 2))
        return np.real(np.fft.ifft2(sym * np.fft.fft2(q, axes=(0, 1)), axes=(0, 1)))

    def helmholtz(self, rhs: np.ndarray, a: float) -> np.ndarray:
        """Solve ``(I - a Lap) u = rhs``."""
        K0, K1 = self.wavenumbers
        sym = 1.0 + a * (K0 ** 2 + K1 ** 2)
        sym = sym.reshape(sym.shape + (1,) * (rhs.ndim - 2))
        return np.real(np.fft.ifft2(np.fft.fft2(rhs, axes=(0, 1)) / sym, axes=(0, 1)))

    def integrate(self, q: np.ndarray) -> float:
        return float(np.sum(q) / self.n ** 2)


def galerkin_forcing(basis: FourierBasis, F: np.ndarray, M: np.ndarray, grid: PeriodicGrid | None = None) -> np.ndarray:
    """``D_i = int (grad^T M grad M - F F^T) : grad xi_i`` by collocation quadrature."""
    n = F.shape[0]
    grid = grid or PeriodicGrid(n)
    if F.shape != (n, n, 2, 2) or M.shape != (n, n, 3):
        raise ValueError("F must be (n, n, 2, 2) and M (n, n, 3) on the same grid")
    J = grid.gradient(M)                                # [x, y, a, b] = d_b M_a
    T = np.einsum("xyai,xyaj->xyij", J, J) - np.einsum("xyik,xyjk->xyij", F, F)
    G = basis.gradients(*grid.coords)                   # [m, a, b, x, y]
    return np.einsum("xyab,mabxy->m", T, G) / n ** 2


# --------------------------------------------------------------------------
# time integration

@dataclass
class GalerkinState:
    basis: FourierBasis
    A: np.ndarray
    g: np.ndarray
    D: np.ndarray
    t: float = 0.0
    dissipation: float = 0.0     # running nu int sum lambda_i g_i^2

    @property
    def m(self) -> int:
        return self.basis.m

    @property
    def lam(self) -> np.ndarray:
        return self.basis.lam

    @property
    def modal_energy(self) -> float:
        return 0.5 * float(self.g @ self.g)


def modal_energy_drift(m: int, dt: float, steps: int, nu: float = 1.0, g0: np.ndarray | None = None,
                       A: np.ndarray | None = None) -> float:
    """Unforced modal run: ``max_n |E_n + int_0^t_n dissipation - E_0|``."""
    if g0 is None:
        g0 = default_initial_data(8, max(m, 1))[0]
    st = make_galerkin_state(m, g0, A)
    e0, worst = st.modal_energy, 0.0
    for _ in range(steps):
        st = integrate_modal(st, None, None, dt, nu)
        worst = max(worst, abs(st.modal_energy + st.dissipation - e0))
    return worst


def make_galerkin_state(m: int, g0: np.ndarray | None = None, A: np.ndarray | None = None) -> GalerkinState:
    basis = assemble_basis(m)
    A = assemble_convection_tensor(basis) if A is None else A
    g = np.zeros(m) if g0 is None else np.asarray(g0, dtype=float)[:m].copy()
    return GalerkinState(basis, A, g, np.zeros(m))


def integrate_modal(state: GalerkinState, F: np.ndarray | None, M: np.ndarray | None, dt: float,
                    nu: float = 1.0, D: np.ndarray | None = None) -> GalerkinState:
    """One classical RK4 step of the modal system with F and M frozen.

    The viscous dissipation ``nu sum lambda g^2`` is integrated as an extra
    component so that the modal energy balance can be checked to RK4 accuracy.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if D is None:
        D = np.zeros(state.m) if F is None else galerkin_forcing(state.basis, F, M)
    lam, A = state.lam, state.A

    def rhs(g):
        return -nu * lam * g + convection(A, g) + D, nu * float(lam @ (g * g))

    g = state.g
    k1, e1 = rhs(g)
    k2, e2 = rhs(g + 0.5 * dt * k1)
    k3, e3 = rhs(g + 0.5 * dt * k2)
    k4, e4 = rhs(g + dt * k3)
    g_new = g + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    diss = state.dissipation + dt / 6.0 * (e1 + 2 * e2 + 2 * e3 + e4)
    return replace(state, g=g_new, D=D, t=state.t + dt, dissipation=diss)


@dataclass(frozen=True)
class GalerkinParams:
    nu: float = 1.0
    kappa: float = 1.0
    mu: float = 1.0
    dt: float = 1e-3
    t_end: float = 0.05
    n_grid: int = 32

    def __post_init__(self):
        for name in ("nu", "kappa", "mu", "dt", "t_end"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _gl(M: np.ndarray, mu: float) -> np.ndarray:
    return (np.sum(M * M, axis=-1, keepdims=True) - 1.0) * M / mu ** 2


def step_fields(grid: PeriodicGrid, basis: FourierBasis, g: np.ndarray, F: np.ndarray, M: np.ndarray,
                prm: GalerkinParams, dt: float):
    """F and M advanced with the Galerkin velocity: diffusion implicit,
    transport, stretching and the GL term explicit."""
    X, Y = grid.coords
    v = basis.velocity(g, X, Y)
    Gv = basis.velocity_gradient(g, X, Y)
    adv = lambda q: np.einsum("xyb,xy...b->xy...", v, grid.gradient(q))
    rhs_F = F + dt * (-adv(F) + np.einsum("xyik,xykj->xyij", Gv, F))
    rhs_M = M + dt * (-adv(M) - _gl(M, prm.mu))
    return grid.helmholtz(rhs_F, dt * prm.kappa), grid.helmholtz(rhs_M, dt)


def coupled_energy(grid: PeriodicGrid, g, F, M, mu) -> float:
    """``|v|^2 + |F|^2 + |grad M|^2 + (|M|^2 - 1)^2 / (2 mu^2)``, integrated."""
    J = grid.gradient(M)
    return float(g @ g + grid.integrate(np.sum(F * F, axis=(-2, -1))) + grid.integrate(np.sum(J * J, axis=(-2, -1)))
                 + grid.integrate((np.sum(M * M, axis=-1) - 1.0) ** 2) / (2 * mu ** 2))


def coupled_dissipation(grid: PeriodicGrid, lam, g, F, M, prm: GalerkinParams) -> float:
    """``nu |grad v|^2 + kappa |grad F|^2 + |Lap M - GL(M)|^2``."""
    JF = grid.gradient(F)
    r = grid.laplacian(M) - _gl(M, prm.mu)
    return float(prm.nu * lam @ (g * g) + prm.kappa * grid.integrate(np.sum(JF * JF, axis=(-3, -2, -1)))
                 + grid.integrate(np.sum(r * r, axis=-1)))


@dataclass
class GalerkinTrajectory:
    m: int
    params: GalerkinParams
    times: np.ndarray
    coeffs: np.ndarray         # (samples, m)
    energy: np.ndarray         # coupled energy at each sample
    dissipation: np.ndarray    # running 2 * int dissipation
    modal_energy: np.ndarray
    F: np.ndarray = field(repr=False, default=None)
    M: np.ndarray = field(repr=False, default=None)


def default_initial_data(n: int, m_max: int = 32, amplitude: float = 1.0, seed: int = 7):
    """Smooth periodic data: modal velocity with decaying coefficients,
    trigonometric F and a perturbed unit magnetisation."""
    rng = np.random.default_rng(seed)
    basis = assemble_basis(m_max)
    signs = rng.choice([-1.0, 1.0], size=m_max)
    g0 = amplitude * signs * np.exp(-basis.lam / (TWO_PI ** 2 * 2.0))
    X, Y = quadrature_grid(n)
    s, c = np.sin(TWO_PI * X), np.cos(TWO_PI * Y)
    F0 = np.stack([np.stack([0.3 * s * c, 0.1 * c], -1), np.stack([-0.2 * s, 0.25 * s * c], -1)], -2)
    M0 = np.stack([0.2 * np.cos(TWO_PI * X), 0.2 * np.sin(TWO_PI * Y), np.ones_like(X)], -1)
    return g0, F0, M0


def run_galerkin(m: int, prm: GalerkinParams, g0=None, F0=None, M0=None, forcing: bool = True,
                 A: np.ndarray | None = None) -> GalerkinTrajectory:
    """Coupled integration: RK4 for the modes with (F, M) frozen over the
    step, then the (F, M) step with the updated velocity."""
    grid = PeriodicGrid(prm.n_grid)
    if g0 is None or F0 is None or M0 is None:
        dg, dF, dM = default_initial_data(prm.n_grid)
        g0 = dg if g0 is None else g0
        F0 = dF if F0 is None else F0
        M0 = dM if M0 is None else M0
    st = make_galerkin_state(m, g0, A)
    F, M = np.array(F0, dtype=float), np.array(M0, dtype=float)
    nsteps = max(1, int(round(prm.t_end / prm.dt)))
    times, coeffs, energy, diss, modal = [0.0], [st.g.copy()], [coupled_energy(grid, st.g, F, M, prm.mu)], [0.0], \
        [st.modal_energy]
    running = 0.0
    for n in range(1, nsteps + 1):
        D = galerkin_forcing(st.basis, F, M, grid) if forcing else np.zeros(m)
        st = integrate_modal(st, None, None, prm.dt, prm.nu, D=D)
        F, M = step_fields(grid, st.basis, st.g, F, M, prm, prm.dt)
        st = replace(st, t=n * prm.dt)
        running += 2 * prm.dt * coupled_dissipation(grid, st.lam, st.g, F, M, prm)
        times.append(st.t)
        coeffs.append(st.g.copy())
        energy.append(coupled_energy(grid, st.g, F, M, prm.mu))
        diss.append(running)
        modal.append(st.modal_energy)
    return GalerkinTrajectory(m, prm, np.array(times), np.array(coeffs), np.array(energy), np.array(diss),
                              np.array(modal), F, M)


@dataclass
class GalerkinEnergyReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: float
    max_violation: float

    COLUMNS = ("t", "modal_energy", "dissipation", "lhs", "rhs")


def galerkin_energy_check(traj: GalerkinTrajectory) -> GalerkinEnergyReport:
    """Energy at each sample plus twice the dissipation integrated up to it,
    against the initial energy; the violation is ``max(lhs - rhs, 0)``.
    Holding at every sample time is equivalent to the sup form."""
    lhs = traj.energy + traj.dissipation
    rhs = float(traj.energy[0])
    return GalerkinEnergyReport(traj.times, lhs, rhs, float(max(0.0, np.max(lhs - rhs))))


def galerkin_csv_rows(traj: GalerkinTrajectory, report: GalerkinEnergyReport):
    for t, e, d, l in zip(traj.times, traj.modal_energy, traj.dissipation, report.lhs):
        yield [t, e, d, l, report.rhs]


def modal_difference_norm(a: GalerkinTrajectory, b: GalerkinTrajectory) -> float:
    """``|v_a - v_b|`` in L^2(0, T; L^2) for nested bases (trapezoid in time)."""
    if not np.allclose(a.times, b.times):
        raise ValueError("trajectories must share their sample times")
    m = max(a.m, b.m)
    pa = np.zeros((len(a.times), m))
    pb = np.zeros_like(pa)
    pa[:, : a.m] = a.coeffs
    pb[:, : b.m] = b.coeffs
    sq = np.sum((pa - pb) ** 2, axis=1)
    return float(np.sqrt(np.trapezoid(sq, a.times)))


def m_convergence(ms=(4, 8, 16), prm: GalerkinParams | None = None) -> np.ndarray:
    """``|v_m - v_2m|_{L^2(Q_T)}`` for each m in ``ms``."""
    prm = prm or GalerkinParams()
    cache = {}

    def traj(m):
        if m not in cache:
            cache[m] = run_galerkin(m, prm)
        return cache[m]

    return np.array([modal_difference_norm(traj(m), traj(2 * m)) for m in ms])
