"""Cell-centered finite differences for the 2D Helmholtz scattering problem.

Each subdomain carries an n x n cell-centered grid (spacing h = side / n), so
no unknown sits on an interface.  The 5-point stencil row for a cell reads
(4*u_c - sum of neighbors)/h^2 - kappa^2*u_c = 0; neighbors outside the grid
are ghost values eliminated through the Robin closure

    (u_g - u_c)/h - tau*(u_g + u_c)/2 = ghat,

with ghat = 0 on exterior (absorbing) faces and ghat = the incoming trace on
interface faces.  The ghost of one subdomain sits exactly on the boundary cell
of its neighbor, so a converged trace exchange reproduces the mono-domain
stencil row by row.

A sound-soft scatterer is a staircase of cells whose centers fall inside the
disk; those rows are replaced by the identity and receive prescribed Dirichlet
values at solve time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .indexing import MultiIndex, Partition

FACES = ("west", "east", "south", "north")

# Unit steps in the lattice for each face of a subdomain.
_FACE_STEP = {"west": (-1, 0), "east": (1, 0), "south": (0, -1), "north": (0, 1)}

MONO_GUARD = 250_000


@dataclass(frozen=True)
class Scatterer:
    """Sound-soft disk; must sit strictly inside one subdomain."""

    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0


@dataclass(frozen=True)
class ProblemSpec:
    """Scattering problem: wavenumber, geometry, and incident plane wave.

    The global domain is [-side/2, N1*side - side/2] squared off against the
    lattice, so the default disk at the origin is interior to subdomain (1,1).
    """

    kappa: float
    cells_per_side: int
    subdomain_side: float = 2.5
    scatterer: Scatterer | None = field(default_factory=Scatterer)
    incident_direction: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.subdomain_side <= 0:
            raise ValueError(f"subdomain_side must be positive, got {self.subdomain_side}")
        if self.cells_per_side < 4:
            raise ValueError(f"cells_per_side must be >= 4, got {self.cells_per_side}")
        dx, dy = self.incident_direction
        if dx == 0 and dy == 0:
            raise ValueError("incident_direction must be nonzero")

    @property
    def h(self) -> float:
        return self.subdomain_side / self.cells_per_side

    @property
    def origin(self) -> tuple[float, float]:
        return (-self.subdomain_side / 2.0, -self.subdomain_side / 2.0)

    def incident_wave(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Incident plane wave exp(i*kappa*d.x) with unit direction d."""
        dx, dy = self.incident_direction
        norm = np.hypot(dx, dy)
        return np.exp(1j * self.kappa * (dx * x + dy * y) / norm)


@dataclass(frozen=True)
class ImpedanceSpec:
    """Multiplicative impedance coefficient tau of the Robin operators.

    tau = i*kappa is the zeroth-order absorbing choice under the exp(-i w t)
    time convention; a nonzero imaginary part is required for absorption.
    """

    coefficient: complex

    def __post_init__(self):
        if complex(self.coefficient).imag == 0:
            raise ValueError("impedance coefficient must have nonzero imaginary part")

    @classmethod
    def for_problem(cls, spec: ProblemSpec) -> "ImpedanceSpec":
        return cls(1j * spec.kappa)


@dataclass
class LocalField:
    """Complex cell values of one subdomain, row-major (y-slow)."""

    subdomain: MultiIndex
    values: np.ndarray

    def grid(self, n: int) -> np.ndarray:
        return self.values.reshape(n, n)


class LocalOperator:
    """Factorized discrete Helmholtz operator of one subdomain.

    Immutable after construction: the matrix is assembled and factorized once
    and every solve reuses the factorization.  Solves are read-only on the
    factorization; callers must not issue concurrent solves against the same
    operator (the solver pipelines here schedule each subdomain at most once
    per parallel batch, which enforces that).
    """

    def __init__(self, spec: ProblemSpec, imp: ImpedanceSpec, partition: Partition, i: MultiIndex):
        i = MultiIndex(*i)
        if i not in partition.neighbors:
            raise ValueError(f"{i} is not a subdomain of {partition!r}")
        n = spec.cells_per_side
        h = spec.h
        tau = complex(imp.coefficient)
        self.subdomain = i
        self.n = n
        self.h = h
        self.tau = tau

        # Ghost elimination: u_g = (ghat + s*u_c)/d with the coefficients below.
        self.ghost_d = 1.0 / h - tau / 2.0
        self.ghost_s = 1.0 / h + tau / 2.0
        self.rhs_coeff = 1.0 / (h * h * self.ghost_d)

        ox, oy = spec.origin
        side = spec.subdomain_side
        x_lo = ox + (i.i1 - 1) * side
        y_lo = oy + (i.i2 - 1) * side
        xc = x_lo + (np.arange(n) + 0.5) * h
        yc = y_lo + (np.arange(n) + 0.5) * h
        self.cell_x, self.cell_y = np.meshgrid(xc, yc)  # [iy, ix]

        # Boundary-cell indices per face, ordered by increasing global coordinate.
        idx = np.arange(n * n).reshape(n, n)
        self.faces: dict[str, np.ndarray] = {
            "west": idx[:, 0].copy(),
            "east": idx[:, -1].copy(),
            "south": idx[0, :].copy(),
            "north": idx[-1, :].copy(),
        }
        self.interface_faces: dict[str, MultiIndex] = {}
        for face, (d1, d2) in _FACE_STEP.items():
            j = MultiIndex(i.i1 + d1, i.i2 + d2)
            if 1 <= j.i1 <= partition.n1 and 1 <= j.i2 <= partition.n2:
                self.interface_faces[face] = j
        self._face_of_neighbor = {j: f for f, j in self.interface_faces.items()}

        self.dirichlet_cells = _scatterer_cells(spec, partition, i, self.cell_x, self.cell_y)

        self.matrix = _assemble_grid(
            n, n, h, spec.kappa, self.ghost_s / self.ghost_d, self.dirichlet_cells
        )
        try:
            self.factorization = splu(self.matrix.tocsc())
        except RuntimeError as exc:
            raise RuntimeError(f"factorization failed for subdomain {tuple(i)}: {exc}") from exc

    def face_toward(self, j: MultiIndex) -> str:
        """Name of the interface face shared with neighbor j."""
        try:
            return self._face_of_neighbor[MultiIndex(*j)]
        except KeyError:
            raise ValueError(f"{tuple(j)} is not a neighbor of {tuple(self.subdomain)}") from None

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.factorization.solve(rhs)


def _scatterer_cells(spec, partition, i, cell_x, cell_y) -> np.ndarray:
    """Indices of cells whose centers fall inside the scatterer disk, if the
    disk belongs to subdomain i; empty otherwise."""
    home = scatterer_subdomain(spec, partition)
    if home != i:
        return np.empty(0, dtype=np.intp)
    cx, cy = spec.scatterer.center
    inside = (cell_x - cx) ** 2 + (cell_y - cy) ** 2 < spec.scatterer.radius**2
    cells = np.flatnonzero(inside.ravel())
    if cells.size == 0:
        raise ValueError(
            f"cells_per_side={spec.cells_per_side} too coarse: no cell center inside the scatterer"
        )
    return cells


def scatterer_subdomain(spec: ProblemSpec, partition: Partition) -> MultiIndex | None:
    """Subdomain whose open interior strictly contains the scatterer disk.

    Raises if a scatterer is present but straddles or touches an interface.
    """
    if spec.scatterer is None:
        return None
    cx, cy = spec.scatterer.center
    r = spec.scatterer.radius
    ox, oy = spec.origin
    side = spec.subdomain_side
    for i in partition.subdomains:
        x_lo, y_lo = ox + (i.i1 - 1) * side, oy + (i.i2 - 1) * side
        if (x_lo < cx - r and cx + r < x_lo + side and y_lo < cy - r and cy + r < y_lo + side):
            return i
    raise ValueError("scatterer must lie strictly inside one subdomain, away from interfaces")


def _assemble_grid(nx, ny, h, kappa, ghost_ratio, dirichlet_cells) -> sp.csr_matrix:
    """Helmholtz matrix on an nx x ny cell grid with all ghost closures folded in.

    `ghost_ratio` = s/d is the u_c coefficient of the eliminated ghost; it is
    identical for exterior and interface faces (only the right-hand side
    differs), so the assembled matrix does not depend on which faces couple.
    Scatterer rows become identity; couplings toward them are kept, so the
    matrix is symmetric apart from those rows.
    """
    inv_h2 = 1.0 / (h * h)
    size = nx * ny
    idx = np.arange(size).reshape(ny, nx)

    ew_a, ew_b = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    ns_a, ns_b = idx[:-1, :].ravel(), idx[1:, :].ravel()
    rows = np.concatenate([ew_a, ew_b, ns_a, ns_b])
    cols = np.concatenate([ew_b, ew_a, ns_b, ns_a])
    vals = np.full(rows.size, -inv_h2, dtype=complex)

    ghosts = np.zeros((ny, nx))
    ghosts[0, :] += 1
    ghosts[-1, :] += 1
    ghosts[:, 0] += 1
    ghosts[:, -1] += 1
    diag = 4.0 * inv_h2 - kappa * kappa - inv_h2 * ghost_ratio * ghosts.ravel()

    dirichlet = np.zeros(size, dtype=bool)
    dirichlet[dirichlet_cells] = True
    keep = ~dirichlet[rows]
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    diag = np.where(dirichlet, 1.0, diag)

    all_rows = np.concatenate([rows, np.arange(size)])
    all_cols = np.concatenate([cols, np.arange(size)])
    all_vals = np.concatenate([vals, diag])
    return sp.csr_matrix((all_vals, (all_rows, all_cols)), shape=(size, size))


def assemble_local(spec: ProblemSpec, imp: ImpedanceSpec, partition: Partition, i: MultiIndex) -> LocalOperator:
    """Assemble and factorize the discrete operator of subdomain i."""
    return LocalOperator(spec, imp, partition, i)


def solve_local(
    op: LocalOperator,
    incoming: dict[str, np.ndarray] | None = None,
    source: np.ndarray | None = None,
) -> LocalField:
    """Solve one subdomain for given incoming interface traces and Dirichlet data.

    `incoming` maps face names to length-n traces; faces not listed get a zero
    trace.  `source` gives the prescribed values on the scatterer cells and is
    only admissible for the subdomain owning the scatterer.  The solution is
    linear in (incoming, source).
    """
    n = op.n
    rhs = np.zeros(n * n, dtype=complex)
    if incoming:
        for face, trace in incoming.items():
            if face not in op.interface_faces:
                raise ValueError(f"face {face!r} of subdomain {tuple(op.subdomain)} is not an interface face")
            trace = np.asarray(trace, dtype=complex)
            if trace.shape != (n,):
                raise ValueError(f"trace on face {face!r} has length {trace.size}, expected {n}")
            rhs[op.faces[face]] += op.rhs_coeff * trace
    if source is not None:
        if op.dirichlet_cells.size == 0:
            raise ValueError(f"subdomain {tuple(op.subdomain)} has no scatterer cells")
        source = np.asarray(source, dtype=complex)
        if source.shape != op.dirichlet_cells.shape:
            raise ValueError("Dirichlet source length does not match the scatterer cell count")
        rhs[op.dirichlet_cells] = source
    return LocalField(op.subdomain, op.solve(rhs))


def extract_outgoing_trace(
    op: LocalOperator, field: LocalField, incoming: np.ndarray, face: str
) -> np.ndarray:
    """Outgoing Robin trace -(d_n + tau)u on an interface face.

    The eliminated ghost is reconstructed from the incoming trace and the
    solved boundary cells; algebraically the result equals
    incoming - 2*(u_g - u_c)/h.
    """
    if face not in op.interface_faces:
        raise ValueError(f"face {face!r} of subdomain {tuple(op.subdomain)} is not an interface face")
    u_c = field.values[op.faces[face]]
    incoming = np.asarray(incoming, dtype=complex)
    if incoming.shape != u_c.shape:
        raise ValueError(f"trace on face {face!r} has length {incoming.size}, expected {op.n}")
    u_g = (incoming + op.ghost_s * u_c) / op.ghost_d
    return -(u_g - u_c) / op.h - op.tau * (u_g + u_c) / 2.0


def solve_lifting(op: LocalOperator, spec: ProblemSpec) -> tuple[LocalField, dict[str, np.ndarray]]:
    """Lifting solve: zero traces everywhere, Dirichlet -u_inc on the scatterer.

    Subdomains without scatterer cells return zeros without touching the
    factorization.  Returns the lifting field and its outgoing trace per
    interface face.
    """
    n = op.n
    if op.dirichlet_cells.size == 0:
        zero_field = LocalField(op.subdomain, np.zeros(n * n, dtype=complex))
        return zero_field, {f: np.zeros(n, dtype=complex) for f in op.interface_faces}
    x = op.cell_x.ravel()[op.dirichlet_cells]
    y = op.cell_y.ravel()[op.dirichlet_cells]
    data = -spec.incident_wave(x, y)
    w = solve_local(op, source=data)
    zero = np.zeros(n, dtype=complex)
    traces = {f: extract_outgoing_trace(op, w, zero, f) for f in op.interface_faces}
    return w, traces


def mono_solve(spec: ProblemSpec, partition: Partition, imp: ImpedanceSpec | None = None) -> np.ndarray:
    """Single-domain reference solution on the union grid (ny, nx), cell-centered.

    Identical stencil, exterior closure, and scatterer rows as the subdomain
    operators, with no interfaces; used as the verification oracle for the
    stitched domain-decomposition solution.
    """
    n = spec.cells_per_side
    nx, ny = partition.n1 * n, partition.n2 * n
    if nx * ny > MONO_GUARD:
        raise ValueError(f"mono solve guard exceeded: {nx * ny} unknowns > {MONO_GUARD}")
    h = spec.h
    if imp is None:
        imp = ImpedanceSpec.for_problem(spec)
    tau = complex(imp.coefficient)
    d = 1.0 / h - tau / 2.0
    s = 1.0 / h + tau / 2.0

    ox, oy = spec.origin
    xc = ox + (np.arange(nx) + 0.5) * h
    yc = oy + (np.arange(ny) + 0.5) * h
    cell_x, cell_y = np.meshgrid(xc, yc)

    cells = np.empty(0, dtype=np.intp)
    rhs = np.zeros(ny * nx, dtype=complex)
    if spec.scatterer is not None:
        scatterer_subdomain(spec, partition)  # placement validation
        cx, cy = spec.scatterer.center
        inside = (cell_x - cx) ** 2 + (cell_y - cy) ** 2 < spec.scatterer.radius**2
        cells = np.flatnonzero(inside.ravel())
        if cells.size == 0:
            raise ValueError("cells_per_side too coarse: no cell center inside the scatterer")
        rhs[cells] = -spec.incident_wave(cell_x.ravel()[cells], cell_y.ravel()[cells])

    matrix = _assemble_grid(nx, ny, h, spec.kappa, s / d, cells)
    return splu(matrix.tocsc()).solve(rhs).reshape(ny, nx)
