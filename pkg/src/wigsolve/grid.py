"""Phase-space discretization.

Position space [X_L, X_R] is split into Q equal elements, each carrying the
same M Chebyshev-Gauss-Lobatto nodes; interpolation inside an element uses
the second barycentric formula.  Wavenumber space [k_min, k_max] carries N_k
uniform collocation nodes k_j = k_min + j*L_k/N_k dual to the Fourier modes
exp(2*pi*i*nu*(k - k_min)/L_k), nu = -N_k/2+1 .. N_k/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, DomainError

__all__ = [
    "SpatialMesh",
    "WavenumberMesh",
    "PhaseSpaceGrid",
    "WignerState",
    "build_spatial_mesh",
    "build_wavenumber_mesh",
    "barycentric_eval",
    "k_forward",
    "k_inverse",
    "uniform_mesh",
    "spatial_interp_matrix",
    "wavenumber_interp_matrix",
    "resample_uniform",
    "clenshaw_curtis_weights",
]


def _cgl_reference_nodes(M: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto nodes on [-1, 1], ascending, endpoints exact."""
    j = np.arange(M)
    nodes = -np.cos(j * np.pi / (M - 1))
    nodes[0] = -1.0
    nodes[-1] = 1.0
    if M % 2 == 1:
        nodes[M // 2] = 0.0
    return nodes


def _cgl_barycentric_weights(M: int) -> np.ndarray:
    # (-1)^j with halved endpoints; any common scale cancels in the formula
    w = np.ones(M)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class SpatialMesh:
    """Equal-width spectral elements with shared CGL nodes."""

    domain_lo: float
    domain_hi: float
    num_elements: int
    points_per_element: int
    element_boundaries: np.ndarray  # (Q+1,)
    collocation_points: np.ndarray  # (Q*M,) element-major, ascending per element
    barycentric_weights: np.ndarray  # (M,) reference weights, shared by all elements

    @property
    def num_points(self) -> int:
        return self.num_elements * self.points_per_element

    @property
    def element_width(self) -> float:
        return (self.domain_hi - self.domain_lo) / self.num_elements

    @property
    def points_by_element(self) -> np.ndarray:
        return self.collocation_points.reshape(self.num_elements, self.points_per_element)

    def element_of(self, x) -> np.ndarray:
        """Element index containing x (right-closed at the last boundary)."""
        e = np.floor((np.asarray(x, float) - self.domain_lo) / self.element_width)
        return np.clip(e, 0, self.num_elements - 1).astype(np.int64)

    def cache_key(self) -> tuple:
        return (self.domain_lo, self.domain_hi, self.num_elements, self.points_per_element)


@dataclass(frozen=True)
class WavenumberMesh:
    """Uniform wavenumber collocation with Fourier mode bookkeeping."""

    k_min: float
    k_max: float
    num_points: int
    collocation_k: np.ndarray  # (N_k,)
    mode_indices: np.ndarray  # (N_k,) ascending: -N_k/2+1 .. N_k/2

    @property
    def length(self) -> float:
        return self.k_max - self.k_min

    @property
    def mode_frequencies(self) -> np.ndarray:
        """nu~ = 2*pi*nu/L_k for every mode, ascending order."""
        return 2.0 * np.pi * self.mode_indices / self.length

    def mode_position(self, nu: int) -> int:
        """Index of mode nu in the ascending storage order."""
        return int(nu) + self.num_points // 2 - 1

    def cache_key(self) -> tuple:
        return (self.k_min, self.k_max, self.num_points)


def build_spatial_mesh(X_L: float, X_R: float, Q: int, M: int) -> SpatialMesh:
    if not (np.isfinite(X_L) and np.isfinite(X_R)) or X_L >= X_R:
        raise ParameterError(f"degenerate spatial domain [{X_L}, {X_R}]")
    if Q < 1 or M < 3:
        raise ParameterError(f"need Q >= 1 and M >= 3, got Q={Q}, M={M}")
    boundaries = X_L + (X_R - X_L) * np.arange(Q + 1) / Q
    boundaries[-1] = X_R
    ref = _cgl_reference_nodes(M)
    mid = 0.5 * (boundaries[:-1] + boundaries[1:])
    half = 0.5 * (boundaries[1:] - boundaries[:-1])
    pts = mid[:, None] + half[:, None] * ref[None, :]
    # shared nodes must coincide with the element boundaries bit-for-bit
    pts[:, 0] = boundaries[:-1]
    pts[:, -1] = boundaries[1:]
    return SpatialMesh(
        domain_lo=float(X_L),
        domain_hi=float(X_R),
        num_elements=Q,
        points_per_element=M,
        element_boundaries=boundaries,
        collocation_points=pts.ravel(),
        barycentric_weights=_cgl_barycentric_weights(M),
    )


def build_wavenumber_mesh(k_min: float, k_max: float, N_k: int) -> WavenumberMesh:
    if k_min >= k_max:
        raise ParameterError(f"degenerate wavenumber domain [{k_min}, {k_max}]")
    if N_k < 4 or N_k % 2 != 0:
        raise ParameterError(f"N_k must be even and >= 4, got {N_k}")
    L = k_max - k_min
    k = k_min + L * np.arange(N_k) / N_k
    modes = np.arange(-N_k // 2 + 1, N_k // 2 + 1)
    return WavenumberMesh(float(k_min), float(k_max), N_k, k, modes)


def barycentric_eval(mesh: SpatialMesh, element_values, element: int, x_star: float) -> float:
    """Value at x_star of the polynomial through one element's nodes.

    Second barycentric form; exact at the nodes themselves.
    """
    values = np.asarray(element_values, float)
    if values.shape != (mesh.points_per_element,):
        raise ParameterError("element_values must hold one value per node")
    if not 0 <= element < mesh.num_elements:
        raise ParameterError(f"element index {element} out of range")
    nodes = mesh.points_by_element[element]
    if not (nodes[0] <= x_star <= nodes[-1]):
        raise DomainError(f"x_star={x_star} outside element [{nodes[0]}, {nodes[-1]}]")
    diff = x_star - nodes
    hit = np.flatnonzero(diff == 0.0)
    if hit.size:
        return float(values[hit[0]])
    ratios = mesh.barycentric_weights / diff
    return float(ratios @ values / ratios.sum())


def _interp_rows(mesh: SpatialMesh, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-target element index and barycentric row over that element's nodes."""
    targets = np.asarray(targets, float)
    elems = mesh.element_of(targets)
    nodes = mesh.points_by_element[elems]  # (n, M)
    diff = targets[:, None] - nodes
    rows = np.zeros_like(diff)
    exact = diff == 0.0
    any_exact = exact.any(axis=1)
    safe = np.where(exact, 1.0, diff)
    ratios = mesh.barycentric_weights[None, :] / safe
    rows[~any_exact] = ratios[~any_exact] / ratios[~any_exact].sum(axis=1, keepdims=True)
    rows[any_exact] = exact[any_exact]
    return elems, rows


def spatial_interp_matrix(mesh: SpatialMesh, targets) -> np.ndarray:
    """Dense (n_targets, Q*M) barycentric evaluation matrix."""
    targets = np.asarray(targets, float)
    if targets.min() < mesh.domain_lo or targets.max() > mesh.domain_hi:
        raise DomainError("interpolation targets outside the spatial domain")
    elems, rows = _interp_rows(mesh, targets)
    M = mesh.points_per_element
    out = np.zeros((targets.size, mesh.num_points))
    cols = elems[:, None] * M + np.arange(M)[None, :]
    np.put_along_axis(out, cols, rows, axis=1)
    return out


def wavenumber_interp_matrix(mesh: WavenumberMesh, targets) -> np.ndarray:
    """Dense (n_targets, N_k) trigonometric interpolation matrix.

    Periodic-sinc (Dirichlet) kernel for even N with the cosine treatment of
    the Nyquist mode, so real nodal data interpolates to real values.
    """
    targets = np.asarray(targets, float)
    N = mesh.num_points
    theta = 2.0 * np.pi * (targets[:, None] - mesh.collocation_k[None, :]) / mesh.length
    half = 0.5 * theta
    s = np.sin(half)
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.sin(N * half) / (N * np.tan(half))
    kernel[np.abs(s) < 1e-15] = 1.0
    return kernel


def k_forward(values, mesh: WavenumberMesh, axis: int = -1) -> np.ndarray:
    """Mode coefficients alpha_nu (ascending nu) of nodal wavenumber data."""
    values = np.asarray(values)
    if values.shape[axis] != mesh.num_points:
        raise ParameterError(
            f"axis length {values.shape[axis]} does not match N_k={mesh.num_points}"
        )
    spec = np.fft.fft(values, axis=axis) / mesh.num_points
    order = np.mod(mesh.mode_indices, mesh.num_points)
    return np.take(spec, order, axis=axis)


def k_inverse(coeffs, mesh: WavenumberMesh, axis: int = -1) -> np.ndarray:
    """Nodal values from mode coefficients; inverse of k_forward."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[axis] != mesh.num_points:
        raise ParameterError(
            f"axis length {coeffs.shape[axis]} does not match N_k={mesh.num_points}"
        )
    N = mesh.num_points
    order = np.mod(mesh.mode_indices, N)
    spec = np.empty_like(coeffs)
    idx = [slice(None)] * coeffs.ndim
    idx[axis] = order
    spec[tuple(idx)] = coeffs
    return np.fft.ifft(spec * N, axis=axis)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """One spatial mesh and one wavenumber mesh per spatial dimension."""

    spatial: tuple[SpatialMesh, ...]
    wavenumber: tuple[WavenumberMesh, ...]

    def __post_init__(self):
        if len(self.spatial) != len(self.wavenumber) or len(self.spatial) not in (1, 2):
            raise ParameterError("grid needs 1 or 2 (spatial, wavenumber) mesh pairs")

    @classmethod
    def plane(cls, x: SpatialMesh, k: WavenumberMesh) -> "PhaseSpaceGrid":
        return cls((x,), (k,))

    @classmethod
    def tensor4d(cls, x1, x2, k1, k2) -> "PhaseSpaceGrid":
        return cls((x1, x2), (k1, k2))

    @property
    def ndim_space(self) -> int:
        return len(self.spatial)

    @property
    def x(self) -> SpatialMesh:
        return self.spatial[0]

    @property
    def k(self) -> WavenumberMesh:
        return self.wavenumber[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m.num_points for m in self.spatial) + tuple(
            m.num_points for m in self.wavenumber
        )

    def cache_key(self) -> tuple:
        return tuple(m.cache_key() for m in self.spatial) + tuple(
            m.cache_key() for m in self.wavenumber
        )


@dataclass
class WignerState:
    """Real phase-space field on a grid at one time instant."""

    grid: PhaseSpaceGrid
    values: np.ndarray  # (nx, Nk) in 2-D phase space, (nx1, nx2, Nk1, Nk2) in 4-D
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.shape != self.grid.shape:
            raise ParameterError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "WignerState":
        return WignerState(self.grid, self.values.copy(), self.time)


def uniform_mesh(lo: float, hi: float, n: int) -> np.ndarray:
    """Cell-centered evaluation points lo + (i - 1/2)(hi - lo)/n, i = 1..n."""
    if n < 1:
        raise ParameterError(f"mesh size must be positive, got {n}")
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def resample_uniform(state: WignerState, N_um: int) -> np.ndarray:
    """Evaluate a 2-D phase-space state on the N_um x N_um cell-centered mesh."""
    if state.grid.ndim_space != 1:
        raise ParameterError("resample_uniform expects a 2-D phase-space state")
    xm, km = state.grid.x, state.grid.k
    Rx = spatial_interp_matrix(xm, uniform_mesh(xm.domain_lo, xm.domain_hi, N_um))
    Rk = wavenumber_interp_matrix(km, uniform_mesh(km.k_min, km.k_max, N_um))
    return Rx @ state.values @ Rk.T


def clenshaw_curtis_weights(M: int) -> np.ndarray:
    """Quadrature weights on the M CGL reference nodes for integrals over [-1, 1]."""
    if M < 2:
        raise ParameterError("need at least two nodes")
    n = M - 1
    j = np.arange(M)
    m = np.arange(0, n + 1, 2)
    # moments of cos(m*theta): integral over [-1,1] is 2/(1-m^2) for even m
    mu = 2.0 / (1.0 - m**2)
    cos_table = np.cos(np.outer(j, m) * np.pi / n)
    scale = np.full(m.size, 2.0 / n)
    scale[0] = 1.0 / n
    if n % 2 == 0:
        scale[-1] = 1.0 / n
    w = cos_table @ (mu * scale)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w
