"""Time evolution by operator splitting of the two exact sub-flows.

The transport substep is solved along characteristics: every wavenumber
slice is shifted by v = hbar*k/m times the stage length and re-read through
per-element barycentric interpolation (semi-Lagrangian, no CFL bound, signed
stage lengths allowed).  The pseudo-differential substep is diagonal in the
wavenumber modes: alpha_nu picks up exp(tau * c_nu(x)).  Strang composition
gives order two; the triple-jump composition of three Strang steps with one
negative middle stage gives order four.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft

from .errors import CapacityError, DivergenceError, ParameterError
from .grid import (
    PhaseSpaceGrid,
    SpatialMesh,
    WavenumberMesh,
    WignerState,
    build_spatial_mesh,
    build_wavenumber_mesh,
)
from .kernels import (
    KernelTable,
    MultiDeltaPotential2D,
    PhysicalConstants,
    kernel_coefficients,
    poisson_kernel_coefficients,
)

__all__ = [
    "SplitScheme",
    "SimulationConfig",
    "advect",
    "apply_kernel",
    "step",
    "evolve",
    "evolve_4d",
]

_YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_YOSHIDA_W0 = 1.0 - 2.0 * _YOSHIDA_W1

# advection stage lengths beyond this are treated as misconfiguration
MAX_STAGE_FS = 10.0


@dataclass(frozen=True)
class SplitScheme:
    name: str
    stage_coefficients: tuple[float, ...]

    def __post_init__(self):
        if abs(sum(self.stage_coefficients) - 1.0) > 1e-15:
            raise ParameterError("stage coefficients must sum to 1")

    @classmethod
    def strang(cls) -> "SplitScheme":
        return cls("strang", (1.0,))

    @classmethod
    def yoshida4(cls) -> "SplitScheme":
        return cls("yoshida4", (_YOSHIDA_W1, _YOSHIDA_W0, _YOSHIDA_W1))

    @classmethod
    def named(cls, name: str) -> "SplitScheme":
        try:
            return {"strang": cls.strang, "yoshida4": cls.yoshida4}[name]()
        except KeyError:
            raise ParameterError(f"unknown scheme {name!r}") from None


# ----------------------------------------------------------------------
# semi-Lagrangian transport
# ----------------------------------------------------------------------

class _SweepPlan:
    """Shift of every wavenumber slice along one spatial mesh.

    Work layout is (Nk, M, Q, R): slice, node-in-element, element, slab.
    Equal-width elements make the interpolation matrices depend only on the
    fractional part of the shift, so each slice needs two M x M matrices:
    one for target nodes whose departure falls in the source element n away,
    one for the element n+1 away.

    On a symmetric wavenumber domain the node at k_min has no +k_max partner
    (it represents both ends of the periodic window), so transporting it with
    the one-sided velocity breaks the parity and quarter-turn equivariance of
    the discrete evolution.  That slice gets the symmetrized transport
    (f(x - v tau) + f(x + v tau))/2 instead; see edge_slice below.
    """

    def __init__(self, mesh: SpatialMesh, velocities: np.ndarray, tau: float,
                 edge_slice: int | None = None):
        M = mesh.points_per_element
        width = mesh.element_width
        velocities = np.asarray(velocities, float)
        self.edge = None
        if edge_slice is not None:
            # append a mirrored-velocity row; apply() averages it with the
            # one-sided row for the edge slice
            velocities = np.concatenate([velocities, [-velocities[edge_slice]]])
            self.edge = edge_slice
        shift = np.asarray(velocities, float) * tau
        n = np.floor(shift / width)
        frac = shift / width - n
        self.offset = n.astype(np.int64)
        self.num_elements = mesh.num_elements

        xi = (mesh.points_by_element[0] - mesh.element_boundaries[0]) / width  # in [0, 1]
        hi = xi[None, :] >= frac[:, None]  # (Nk, M) rows served by element e - n
        local_hi = xi[None, :] - frac[:, None]
        local_lo = local_hi + 1.0
        ref = 2.0 * xi - 1.0
        wbary = mesh.barycentric_weights

        def rows(local: np.ndarray) -> np.ndarray:
            # rows for the complementary split side fall outside [-1, 1] and
            # are masked away afterwards; their values may be non-finite
            r = 2.0 * local - 1.0
            diff = r[:, :, None] - ref[None, None, :]
            exact = diff == 0.0
            safe = np.where(exact, 1.0, diff)
            ratios = wbary[None, None, :] / safe
            with np.errstate(divide="ignore", invalid="ignore"):
                out = ratios / ratios.sum(axis=2, keepdims=True)
            out[~np.isfinite(out)] = 0.0
            hit = exact.any(axis=2)
            out[hit] = exact[hit]
            return out

        self.mat_hi = rows(local_hi) * hi[:, :, None]
        self.mat_lo = rows(local_lo) * (~hi)[:, :, None]
        self.hi_rows = hi

    def apply(self, work: np.ndarray, inflow: np.ndarray | None = None) -> np.ndarray:
        """work: (Nk, M, Q, R) -> shifted field.

        inflow, if given, holds the (Nk, R) values read by departure points
        outside the domain; otherwise those points read 0.
        """
        Nk = work.shape[0]
        out = _gather_apply(
            work, self.offset[:Nk], self.mat_hi[:Nk], self.mat_lo[:Nk],
            self.hi_rows[:Nk], inflow,
        )
        if self.edge is not None:
            e = self.edge
            mirrored = _gather_apply(
                work[e : e + 1], self.offset[-1:], self.mat_hi[-1:],
                self.mat_lo[-1:], self.hi_rows[-1:],
                None if inflow is None else inflow[e : e + 1],
            )
            out[e] += mirrored[0]
            out[e] *= 0.5
        return out


def _gather_apply(work, offset, mat_hi, mat_lo, hi_rows, inflow):
    Nk, M, Q, R = work.shape
    q = np.arange(Q)
    src_hi = q[None, :] - offset[:, None]
    src_lo = src_hi - 1
    ok_hi = (src_hi >= 0) & (src_hi < Q)
    ok_lo = (src_lo >= 0) & (src_lo < Q)
    # out-of-domain sources read the padded zero column
    padded = np.concatenate([np.zeros((Nk, M, 1, R)), work], axis=2)
    gh = np.take_along_axis(padded, np.where(ok_hi, src_hi + 1, 0)[:, None, :, None], axis=2)
    gl = np.take_along_axis(padded, np.where(ok_lo, src_lo + 1, 0)[:, None, :, None], axis=2)
    out = np.matmul(mat_hi, gh.reshape(Nk, M, Q * R)) + np.matmul(
        mat_lo, gl.reshape(Nk, M, Q * R)
    )
    out = out.reshape(Nk, M, Q, R)
    if inflow is not None:
        missing = hi_rows[:, :, None] & ~ok_hi[:, None, :] | (
            ~hi_rows[:, :, None] & ~ok_lo[:, None, :]
        )
        out += inflow[:, None, None, :] * missing[:, :, :, None]
    return out



def _edge_slice(km: WavenumberMesh) -> int | None:
    """Index of the unpaired k_min node on a symmetric wavenumber domain."""
    return 0 if km.k_min == -km.k_max else None


def _to_work_2d(values: np.ndarray, mesh: SpatialMesh) -> np.ndarray:
    # (nx, Nk) -> (Nk, M, Q)
    Q, M = mesh.num_elements, mesh.points_per_element
    return np.ascontiguousarray(values.T.reshape(-1, Q, M).transpose(0, 2, 1))


def _from_work_2d(work: np.ndarray) -> np.ndarray:
    Nk, M, Q = work.shape
    return np.ascontiguousarray(work.transpose(0, 2, 1).reshape(Nk, Q * M).T)


def advect(
    state: WignerState,
    consts: PhysicalConstants,
    tau: float,
    inflow: np.ndarray | None = None,
    symmetrized_edge: bool = False,
) -> WignerState:
    """Exact transport sub-flow over a signed stage length tau.

    Departure points outside the domain read 0 by default.  A prescribed
    inflow replaces that: shape (Nk,) in 2-D phase space, (Nk1, Nk2) in 4-D
    (a position-independent reservoir profile).  symmetrized_edge averages
    the two periodic-endpoint readings of the unpaired k_min slice, which
    makes the discrete evolution exactly parity- and quarter-turn
    equivariant at the cost of a first-order perturbation of that slice.
    """
    if abs(tau) > MAX_STAGE_FS:
        raise ParameterError(f"stage length {tau} fs exceeds the configured bound")
    edge = _edge_slice(state.grid.wavenumber[0]) if symmetrized_edge else None
    if state.grid.ndim_space == 1:
        mesh, km = state.grid.x, state.grid.k
        v = consts.hbar * km.collocation_k / consts.mass
        plan = _SweepPlan(mesh, v, tau, edge)
        work = _to_work_2d(state.values, mesh)[:, :, :, None]
        prof = None if inflow is None else np.asarray(inflow, float)[:, None]
        out = plan.apply(work, prof)[:, :, :, 0]
        return WignerState(state.grid, _from_work_2d(out), state.time)
    values = state.values
    for dim in (0, 1):
        values = _advect_dim_4d(values, state.grid, consts, tau, dim, inflow, symmetrized_edge)
    return WignerState(state.grid, values, state.time)


def _advect_dim_4d(values, grid, consts, tau, dim, inflow, symmetrized_edge=False):
    mesh = grid.spatial[dim]
    km = grid.wavenumber[dim]
    v = consts.hbar * km.collocation_k / consts.mass
    plan = _SweepPlan(mesh, v, tau, _edge_slice(km) if symmetrized_edge else None)
    Q, M = mesh.num_elements, mesh.points_per_element
    if dim == 0:
        # (x1, x2, k1, k2) -> (k1, m1, q1, x2*k2)
        nx2, Nk2 = values.shape[1], values.shape[3]
        work = values.transpose(2, 0, 1, 3).reshape(-1, Q, M, nx2 * Nk2)
        work = np.ascontiguousarray(work.transpose(0, 2, 1, 3))
        prof = None
        if inflow is not None:
            prof = np.broadcast_to(inflow[:, None, :], (km.num_points, nx2, Nk2))
            prof = prof.reshape(km.num_points, nx2 * Nk2)
        out = plan.apply(work, prof)
        out = out.transpose(0, 2, 1, 3).reshape(-1, Q * M, nx2, Nk2).transpose(1, 2, 0, 3)
        return np.ascontiguousarray(out)
    nx1, Nk1 = values.shape[0], values.shape[2]
    work = values.transpose(3, 1, 0, 2).reshape(-1, Q, M, nx1 * Nk1)
    work = np.ascontiguousarray(work.transpose(0, 2, 1, 3))
    prof = None
    if inflow is not None:
        prof = np.broadcast_to(inflow.T[:, None, :], (km.num_points, nx1, Nk1))
        prof = prof.reshape(km.num_points, nx1 * Nk1)
    out = plan.apply(work, prof)
    out = out.transpose(0, 2, 1, 3).reshape(-1, Q * M, nx1, Nk1).transpose(2, 1, 3, 0)
    return np.ascontiguousarray(out)


# ----------------------------------------------------------------------
# pseudo-differential substep
# ----------------------------------------------------------------------

def _half_spectrum_positions(km: WavenumberMesh) -> np.ndarray:
    # rfft bin nu lives at ascending-storage position nu + N/2 - 1
    N = km.num_points
    return np.arange(0, N // 2 + 1) + N // 2 - 1


def _multipliers_half_2d(table: KernelTable, tau: float) -> np.ndarray:
    km = table.grid.k
    pos = _half_spectrum_positions(km)
    phases = table.multipliers.imag[:, pos] * tau
    phases[:, -1] = 0.0  # Nyquist mode has no conjugate partner
    return np.exp(1j * phases)


def _multipliers_half_4d(table: KernelTable, tau: float) -> np.ndarray:
    k1, k2 = table.grid.wavenumber
    N1 = k1.num_points
    order1 = np.mod(np.fft.fftfreq(N1, 1.0 / N1).astype(int) + N1 // 2 - 1, N1)
    pos2 = _half_spectrum_positions(k2)
    phases = table.multipliers.imag[:, :, order1][:, :, :, pos2] * tau
    phases[:, :, N1 // 2, :] = 0.0  # both Nyquist planes stay inert
    phases[:, :, :, -1] = 0.0
    return np.exp(1j * phases)


def apply_kernel(state: WignerState, table: KernelTable, tau: float) -> WignerState:
    """Exact flow of the truncated pseudo-differential sub-equation."""
    if table.grid.cache_key() != state.grid.cache_key():
        raise ParameterError("kernel table was built on a different grid")
    if state.grid.ndim_space == 1:
        mult = _multipliers_half_2d(table, tau)
        spec = scipy.fft.rfft(state.values, axis=1)
        out = scipy.fft.irfft(spec * mult, n=state.grid.k.num_points, axis=1)
        return WignerState(state.grid, out, state.time)
    mult = _multipliers_half_4d(table, tau)
    spec = scipy.fft.rfft2(state.values, axes=(2, 3))
    out = scipy.fft.irfft2(
        spec * mult, s=(state.grid.wavenumber[0].num_points, state.grid.wavenumber[1].num_points),
        axes=(2, 3),
    )
    return WignerState(state.grid, out, state.time)


# ----------------------------------------------------------------------
# composed step and full evolution
# ----------------------------------------------------------------------

def _stage_sequence(scheme: SplitScheme, dt: float) -> list[tuple[str, float]]:
    """Fused A(t/2) B(t) A(t/2) chains; adjacent transports merge."""
    seq: list[tuple[str, float]] = []
    for w in scheme.stage_coefficients:
        seq += [("A", 0.5 * w * dt), ("B", w * dt), ("A", 0.5 * w * dt)]
    fused: list[tuple[str, float]] = []
    for kind, tau in seq:
        if fused and fused[-1][0] == kind:
            fused[-1] = (kind, fused[-1][1] + tau)
        else:
            fused.append((kind, tau))
    return fused


def step(
    state: WignerState,
    table: KernelTable,
    consts: PhysicalConstants,
    dt: float,
    scheme: SplitScheme,
    inflow: np.ndarray | None = None,
    symmetrized_edge: bool = False,
) -> WignerState:
    """One composed time step; advances state.time by dt."""
    out = state
    for kind, tau in _stage_sequence(scheme, dt):
        if kind == "A":
            out = advect(out, consts, tau, inflow, symmetrized_edge)
        else:
            out = apply_kernel(out, table, tau)
    return WignerState(out.grid, out.values, state.time + dt)


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed for one reproducible run."""

    x_lo: float
    x_hi: float
    num_elements: int
    points_per_element: int
    k_min: float
    k_max: float
    num_modes: int
    potential: object
    initial: object
    dt: float
    t_final: float
    consts: PhysicalConstants = PhysicalConstants()
    spatial_dims: int = 1
    snapshot_times: tuple[float, ...] = ()
    n_uniform: int = 600
    scheme: SplitScheme = field(default_factory=SplitScheme.yoshida4)
    kernel_route: str = "exact"  # or "poisson"
    poisson_delta_y: float | None = None
    poisson_offset: float = 0.0
    inflow: str = "zero"  # or "background"
    edge_transport: str = "one_sided"  # or "symmetrized"
    record_observables: bool = True
    threads: int = 0
    output_dir: str | None = None
    memory_budget_bytes: float = 8e9

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        if self.t_final < 0:
            raise ParameterError("t_final must be nonnegative")
        if self.t_final > 0 and self.t_final < self.dt:
            raise ParameterError("t_final must be at least one step")
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.t_final:
                raise ParameterError(f"snapshot time {t} outside [0, t_final]")
        if self.kernel_route not in ("exact", "poisson"):
            raise ParameterError(f"unknown kernel route {self.kernel_route!r}")
        if self.inflow not in ("zero", "background"):
            raise ParameterError(f"unknown inflow prescription {self.inflow!r}")
        if self.edge_transport not in ("one_sided", "symmetrized"):
            raise ParameterError(f"unknown edge transport {self.edge_transport!r}")
        if self.spatial_dims not in (1, 2):
            raise ParameterError("spatial_dims must be 1 or 2")

    def build_grid(self) -> PhaseSpaceGrid:
        xm = build_spatial_mesh(self.x_lo, self.x_hi, self.num_elements, self.points_per_element)
        km = build_wavenumber_mesh(self.k_min, self.k_max, self.num_modes)
        if self.spatial_dims == 1:
            return PhaseSpaceGrid.plane(xm, km)
        xm2 = build_spatial_mesh(self.x_lo, self.x_hi, self.num_elements, self.points_per_element)
        km2 = build_wavenumber_mesh(self.k_min, self.k_max, self.num_modes)
        return PhaseSpaceGrid.tensor4d(xm, xm2, km, km2)

    def build_table(self, grid: PhaseSpaceGrid) -> KernelTable:
        if self.kernel_route == "poisson":
            return poisson_kernel_coefficients(
                self.potential, grid, self.consts, self.poisson_delta_y, self.poisson_offset
            )
        return kernel_coefficients(self.potential, grid, self.consts)


class _Stepper2D:
    """Work-layout driver: keeps the field as (Nk, M, Q) between steps."""

    def __init__(self, grid, table, consts, dt, scheme, inflow_profile=None,
                 symmetrized_edge=False):
        mesh, km = grid.x, grid.k
        self.mesh, self.km = mesh, km
        v = consts.hbar * km.collocation_k / consts.mass
        self.stages = _stage_sequence(scheme, dt)
        self.plans = {}
        self.mults = {}
        pos = _half_spectrum_positions(km)
        Q, M = mesh.num_elements, mesh.points_per_element
        phases = table.multipliers.imag[:, pos].T.reshape(-1, Q, M).transpose(0, 2, 1)
        phases = np.ascontiguousarray(phases)
        phases[-1] = 0.0  # Nyquist
        edge = _edge_slice(km) if symmetrized_edge else None
        for kind, tau in self.stages:
            if kind == "A" and tau not in self.plans:
                self.plans[tau] = _SweepPlan(mesh, v, tau, edge)
            elif kind == "B" and tau not in self.mults:
                self.mults[tau] = np.exp(1j * tau * phases)
        self.inflow = inflow_profile

    def advance(self, work: np.ndarray) -> np.ndarray:
        for kind, tau in self.stages:
            if kind == "A":
                work = self.plans[tau].apply(work[:, :, :, None], self.inflow)[:, :, :, 0]
            else:
                spec = scipy.fft.rfft(work, axis=0)
                spec *= self.mults[tau]
                work = scipy.fft.irfft(spec, n=self.km.num_points, axis=0)
        return work


def _snapshot_steps(config: SimulationConfig, n_steps: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for t in config.snapshot_times:
        s = round(t / config.dt)
        if abs(s * config.dt - t) > 1e-9 + 1e-12 * abs(t) or s > n_steps:
            raise ParameterError(f"snapshot time {t} is not on the step lattice")
        out[int(s)] = t
    return out


def evolve(config: SimulationConfig):
    """Run a 2-D phase-space simulation; returns (snapshots, series)."""
    from .observables import ObservableSeries, UniformMeshQuadrature, _initial_state

    if config.spatial_dims != 1:
        raise ParameterError("evolve drives 2-D phase space; use evolve_4d")
    grid = config.build_grid()
    table = config.build_table(grid)
    consts = config.consts
    state0 = _initial_state(grid, config.initial)
    inflow_profile = state0.values.mean(axis=0) if config.inflow == "background" else None

    quad = UniformMeshQuadrature(grid, config.n_uniform)
    series = ObservableSeries()
    snapshots: list[WignerState] = []
    n_steps = 0 if config.t_final == 0 else int(round(config.t_final / config.dt))
    snap_at = _snapshot_steps(config, n_steps)

    mesh = grid.x
    work = _to_work_2d(state0.values, mesh)
    wcc = _cc_layout(mesh)

    def record(step_index: int, t: float, work_arr: np.ndarray):
        if not config.record_observables:
            return
        marg = work_arr.mean(axis=0)
        mass = grid.k.length * float((wcc * marg).sum())
        quad.append_row_from_work(series, t, mass, work_arr, consts)

    record(0, 0.0, work)
    if 0 in snap_at:
        snapshots.append(WignerState(grid, _from_work_2d(work), 0.0))
    if n_steps:
        stepper = _Stepper2D(grid, table, consts, config.dt, config.scheme, inflow_profile,
                             config.edge_transport == "symmetrized")
        for i in range(1, n_steps + 1):
            work = stepper.advance(work)
            if not np.isfinite(work).all():
                raise DivergenceError(f"non-finite field after step {i}")
            t = i * config.dt
            record(i, t, work)
            if i in snap_at:
                snapshots.append(WignerState(grid, _from_work_2d(work), t))
    if not snapshots:
        snapshots.append(WignerState(grid, _from_work_2d(work), n_steps * config.dt))
    return snapshots, series


def _cc_layout(mesh: SpatialMesh) -> np.ndarray:
    from .grid import clenshaw_curtis_weights

    w = clenshaw_curtis_weights(mesh.points_per_element) * 0.5 * mesh.element_width
    return np.repeat(w[:, None], mesh.num_elements, axis=1)


def evolve_4d(config: SimulationConfig):
    """Run a 4-D phase-space simulation; snapshots hold the spatial marginal."""
    from .observables import ObservableSeries, _initial_state, spatial_marginal_2d, total_mass

    if config.spatial_dims != 2:
        raise ParameterError("evolve_4d needs spatial_dims = 2")
    if not isinstance(config.potential, MultiDeltaPotential2D):
        raise ParameterError("the 4-D driver supports the multi-delta potential family")
    grid = config.build_grid()
    need = 8 * float(np.prod(grid.shape)) * 6.0  # field + spectra + table
    if need > config.memory_budget_bytes:
        raise CapacityError(
            f"estimated working set {need/1e9:.2f} GB exceeds the configured budget"
        )
    table = config.build_table(grid)
    consts = config.consts
    state = _initial_state(grid, config.initial)
    # reservoir inflow: the position-independent wavenumber profile of the
    # initial data feeds the inflow boundaries
    inflow = state.values[0, 0].copy() if config.inflow == "background" else None

    series = ObservableSeries()
    snapshots: list[tuple[float, np.ndarray]] = []
    n_steps = 0 if config.t_final == 0 else int(round(config.t_final / config.dt))
    snap_at = _snapshot_steps(config, n_steps)

    def record(t, st):
        if config.record_observables:
            series.append(t=t, total_mass=total_mass(st))

    record(0.0, state)
    if 0 in snap_at:
        snapshots.append((0.0, spatial_marginal_2d(state)))
    sym = config.edge_transport == "symmetrized"
    for i in range(1, n_steps + 1):
        state = step(state, table, consts, config.dt, config.scheme, inflow, sym)
        if not np.isfinite(state.values).all():
            raise DivergenceError(f"non-finite field after step {i}")
        record(state.time, state)
        if i in snap_at:
            snapshots.append((state.time, spatial_marginal_2d(state)))
    if not snapshots:
        snapshots.append((state.time, spatial_marginal_2d(state)))
    return snapshots, series
