"""Banded assembly of the mass, diffusion, and convection forms on the zero-boundary space.

The public DOF vector layout is [all interior Legendre coefficients,
element-major] ++ [interior node values]; boundary node values are eliminated.
Internally rows and columns are permuted to an element-interleaved order so
every coupling sits within k + 2 of the diagonal, which keeps the matrices in
LAPACK banded storage and the direct solve O(n).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .mesh import Mesh
from .quadrature import gauss_rule, legendre_table
from .weakspace import WeakDerivative, WeakFunction, same_mesh

PIVOT_FLOOR = 1e-14

_gbtrf, _gbtrs = get_lapack_funcs(("gbtrf", "gbtrs"), (np.array([0.0]),))


class SingularSystemError(RuntimeError):
    """The banded LU hit a pivot below PIVOT_FLOOR times the matrix scale."""


class DofMap:
    """Degree-of-freedom bookkeeping for one (mesh, k) space.

    Maps between the public flat layout and the banded (element-interleaved)
    ordering, and carries the element-local scatter tables used by assembly.
    """

    def __init__(self, mesh: Mesh, k: int):
        if k < 0:
            raise ValueError("k must be non-negative")
        n_el = mesh.n_elements
        self.mesh = mesh
        self.k = int(k)
        self.n_interior = n_el * (k + 1)
        self.n_dofs = self.n_interior + n_el - 1
        self.bandwidth = min(k + 2, max(self.n_dofs - 1, 0))

        elems = np.arange(n_el)
        interior_band = (elems[:, None] * (k + 2) + np.arange(k + 1)).ravel()
        flat2band = np.empty(self.n_dofs, dtype=np.intp)
        flat2band[: self.n_interior] = interior_band
        flat2band[self.n_interior :] = np.arange(1, n_el) * (k + 2) - 1
        self.flat2band = flat2band
        self.band2flat = np.argsort(flat2band)

        # local dof order (c_0 .. c_k, left node, right node); -1 marks pinned
        element_band = np.empty((n_el, k + 3), dtype=np.intp)
        element_band[:, : k + 1] = interior_band.reshape(n_el, k + 1)
        element_band[:, k + 1] = elems * (k + 2) - 1
        element_band[:, k + 2] = (elems + 1) * (k + 2) - 1
        element_band[n_el - 1, k + 2] = -1
        self.element_band = element_band

        element_flat = np.empty((n_el, k + 3), dtype=np.intp)
        element_flat[:, : k + 1] = (elems[:, None] * (k + 1)) + np.arange(k + 1)
        element_flat[:, k + 1] = self.n_interior + elems - 1
        element_flat[0, k + 1] = -1
        element_flat[:, k + 2] = self.n_interior + elems
        element_flat[n_el - 1, k + 2] = -1
        self.element_flat = element_flat
        # gather table with pinned entries pointing at a trailing zero slot
        self.element_flat_padded = np.where(element_flat < 0, self.n_dofs, element_flat)

        b = self.bandwidth
        ldab = 3 * b + 1
        self.band_shape = (ldab, self.n_dofs)
        rows = element_band[:, :, None]
        cols = element_band[:, None, :]
        valid = (rows >= 0) & (cols >= 0)
        # Fortran-order flat index into the LAPACK band array; invalid -> dump slot
        idx = cols * ldab + (2 * b + rows - cols)
        self._scatter_idx = np.where(valid, idx, ldab * self.n_dofs).ravel()

    def to_band(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec)[self.band2flat]

    def to_flat(self, vec_band: np.ndarray) -> np.ndarray:
        return np.asarray(vec_band)[self.flat2band]

    def gather_element_data(self, vec: np.ndarray) -> np.ndarray:
        """Element-local data (n_elements, k + 3) from a flat vector, pinned -> 0."""
        return np.append(vec, 0.0)[self.element_flat_padded]

    def scatter_band(self, blocks: np.ndarray) -> np.ndarray:
        """Accumulate element blocks (n_elements, k + 3, k + 3) into a band array."""
        ldab, n = self.band_shape
        size = ldab * n
        flat = np.bincount(self._scatter_idx, weights=blocks.ravel(), minlength=size + 1)
        return flat[:size].reshape(self.band_shape, order="F")


class BandedMatrix:
    """Square matrix in LAPACK banded storage, indexed by the public flat layout.

    data holds the ku superdiagonals, diagonal, and kl subdiagonals of the
    permuted matrix in rows bandwidth .. 3 * bandwidth; the top rows are
    factorization workspace, kept zero until a solve.
    """

    def __init__(self, dofmap: DofMap, data: np.ndarray | None = None):
        self.dofmap = dofmap
        if data is None:
            data = np.zeros(dofmap.band_shape, order="F")
        if data.shape != dofmap.band_shape:
            raise ValueError(f"band data must have shape {dofmap.band_shape}")
        self.data = data

    @property
    def n(self) -> int:
        return self.dofmap.n_dofs

    @property
    def bandwidth(self) -> int:
        return self.dofmap.bandwidth

    @classmethod
    def identity(cls, dofmap: DofMap) -> "BandedMatrix":
        out = cls(dofmap)
        out.data[2 * dofmap.bandwidth, :] = 1.0
        return out

    @classmethod
    def from_dense(cls, dofmap: DofMap, dense: np.ndarray) -> "BandedMatrix":
        """Build from a dense matrix given in the flat layout; off-band entries must be zero."""
        n, b = dofmap.n_dofs, dofmap.bandwidth
        dense = np.asarray(dense, dtype=float)
        if dense.shape != (n, n):
            raise ValueError("dense matrix has wrong shape")
        out = cls(dofmap)
        p = dofmap.flat2band
        for i in range(n):
            for j in range(n):
                d = p[i] - p[j]
                if abs(d) <= b:
                    out.data[2 * b + d, p[j]] = dense[i, j]
                elif dense[i, j] != 0.0:
                    raise ValueError(f"entry ({i}, {j}) falls outside the band")
        return out

    def get(self, row: int, col: int) -> float:
        bi = self.dofmap.flat2band[row]
        bj = self.dofmap.flat2band[col]
        d = bi - bj
        if abs(d) > self.bandwidth:
            return 0.0
        return float(self.data[2 * self.bandwidth + d, bj])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        xb = self.dofmap.to_band(np.asarray(x, dtype=float))
        n, b = self.n, self.bandwidth
        y = np.zeros(n)
        for d in range(-b, b + 1):
            row = self.data[2 * b - d]
            if d >= 0:
                y[: n - d] += row[d:] * xb[d:]
            else:
                y[-d:] += row[: n + d] * xb[: n + d]
        return self.dofmap.to_flat(y)

    def todense(self) -> np.ndarray:
        n, b = self.n, self.bandwidth
        dense_band = np.zeros((n, n))
        for d in range(-b, b + 1):
            if d >= 0:
                idx = np.arange(n - d)
                dense_band[idx, idx + d] = self.data[2 * b - d, d:]
            else:
                idx = np.arange(-d, n)
                dense_band[idx, idx + d] = self.data[2 * b - d, : n + d]
        p = self.dofmap.flat2band
        return dense_band[np.ix_(p, p)]

    def copy(self) -> "BandedMatrix":
        return BandedMatrix(self.dofmap, self.data.copy(order="F"))

    def __add__(self, other):
        if not isinstance(other, BandedMatrix) or other.dofmap is not self.dofmap:
            return NotImplemented
        return BandedMatrix(self.dofmap, np.asfortranarray(self.data + other.data))

    def scaled(self, factor: float) -> "BandedMatrix":
        return BandedMatrix(self.dofmap, np.asfortranarray(factor * self.data))


class FormAssembler:
    """Quadrature tables and element kernels for the discrete forms of one space.

    Built once per (mesh, k); the convection kernel is the only piece that has
    to be re-evaluated when the frozen coefficient changes.
    """

    def __init__(self, mesh: Mesh, k: int, n_quad: int | None = None):
        if n_quad is None:
            n_quad = 2 * k + 2
        rule = gauss_rule(n_quad)
        if rule.exact_degree < 3 * k + 1:
            raise ValueError(
                f"assembly quadrature must integrate degree {3 * k + 1}; "
                f"{n_quad} points only reach {rule.exact_degree}"
            )
        self.mesh = mesh
        self.k = int(k)
        self.r = self.k + 1
        self.rule = rule
        self.dofmap = DofMap(mesh, k)
        self.deriv = WeakDerivative(mesh, k)

        h = mesh.element_sizes
        self.gram_interior = h[:, None] / (2.0 * np.arange(k + 1) + 1.0)
        self.gram_deriv = h[:, None] / (2.0 * np.arange(k + 2) + 1.0)

        self._Pk = legendre_table(k, rule.points)
        self._PkW = self._Pk * rule.weights
        Pr = legendre_table(k + 1, rule.points)
        # derivative basis values at quadrature points, per local dof
        self._V = np.einsum("imb,mq->iqb", self.deriv.ops, Pr)
        self._conv_scale = h / 6.0  # (1/3) factor times the h/2 jacobian

        mass = np.zeros(self.dofmap.n_dofs)
        mass[: self.dofmap.n_interior] = self.gram_interior.ravel()
        mass.setflags(write=False)
        self.mass_diag = mass

        # weights for the fixed-point increment norm: interior Gram entries
        # plus node values weighted by the average of the adjacent elements
        w = mass.copy()
        w[self.dofmap.n_interior :] = 0.5 * (h[:-1] + h[1:])
        w.setflags(write=False)
        self.increment_weights = w

    def mass_matrix(self) -> BandedMatrix:
        out = BandedMatrix(self.dofmap)
        out.data[2 * self.dofmap.bandwidth, :] = self.dofmap.to_band(self.mass_diag)
        return out

    def diffusion_blocks(self) -> np.ndarray:
        ops = self.deriv.ops
        return np.einsum("imb,im,imc->ibc", ops, self.gram_deriv, ops)

    def convection_blocks(self, w_interior: np.ndarray) -> np.ndarray:
        """Element blocks of the skew form (1/3)(w0 d_w u, v0) - (1/3)(w0 u0, d_w v)."""
        k = self.k
        w0 = w_interior @ self._Pk  # coefficient values at quadrature points
        scaled = self._V * (self._conv_scale[:, None] * w0)[:, :, None]
        first = np.matmul(self._PkW, scaled)  # (n_el, k + 1, k + 3)
        blocks = np.zeros((self.mesh.n_elements, k + 3, k + 3))
        blocks[:, : k + 1, :] = first
        blocks[:, :, : k + 1] -= first.transpose(0, 2, 1)
        return blocks

    def matrix_from_blocks(self, blocks: np.ndarray) -> BandedMatrix:
        return BandedMatrix(self.dofmap, self.dofmap.scatter_band(blocks))


def assemble_mass(mesh: Mesh, k: int) -> BandedMatrix:
    """Matrix of the interior inner product (u0, v0)_h; diagonal, zero on node DOFs."""
    return FormAssembler(mesh, k).mass_matrix()


def assemble_diffusion(mesh: Mesh, k: int) -> BandedMatrix:
    """Matrix of (d_w u, d_w v)_h; symmetric positive semidefinite."""
    fa = FormAssembler(mesh, k)
    return fa.matrix_from_blocks(fa.diffusion_blocks())


def assemble_convection(w: WeakFunction, n_quad: int | None = None) -> BandedMatrix:
    """Matrix of the convection form with frozen coefficient w; skew-symmetric."""
    fa = FormAssembler(w.mesh, w.k, n_quad)
    return fa.matrix_from_blocks(fa.convection_blocks(w.interior))


@dataclass
class AssembledSystem:
    """One backward-difference step's linear system: ((1/tau) M + nu A + C(w)) x = rhs."""

    matrix: BandedMatrix
    rhs: np.ndarray
    nu: float | None = None
    tau: float | None = None
    mesh: Mesh | None = None
    k: int | None = None


def assemble_step_system(
    w: WeakFunction, prev: WeakFunction, nu: float, tau: float, n_quad: int | None = None
) -> AssembledSystem:
    """System whose solution advances prev by one step with convection frozen at w."""
    if not same_mesh(w.mesh, prev.mesh) or w.k != prev.k:
        raise ValueError("w and prev must share one space")
    if nu <= 0.0 or tau <= 0.0:
        raise ValueError("nu and tau must be positive")
    fa = FormAssembler(w.mesh, w.k, n_quad)
    data = fa.dofmap.scatter_band(fa.diffusion_blocks()) * nu
    data += fa.dofmap.scatter_band(fa.convection_blocks(w.interior))
    data[2 * fa.dofmap.bandwidth, :] += fa.dofmap.to_band(fa.mass_diag) / tau
    matrix = BandedMatrix(fa.dofmap, np.asfortranarray(data))
    rhs = fa.mass_diag * prev.dof_vector() / tau
    return AssembledSystem(matrix=matrix, rhs=rhs, nu=nu, tau=tau, mesh=w.mesh, k=w.k)


def factor_banded(data: np.ndarray, bandwidth: int):
    """LU-factor LAPACK band data in place with partial pivoting.

    Returns (lu, ipiv).  Raises SingularSystemError when a pivot falls below
    PIVOT_FLOOR relative to the largest assembled entry.
    """
    b = int(bandwidth)
    scale = float(np.abs(data[b:, :]).max()) if data.size else 0.0
    lu, ipiv, info = _gbtrf(data, b, b, overwrite_ab=1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to the banded factorization")
    if info > 0 or float(np.abs(lu[2 * b, :]).min()) < PIVOT_FLOOR * scale:
        raise SingularSystemError(
            f"pivot below {PIVOT_FLOOR:g} * scale; system is singular to working precision"
        )
    return lu, ipiv


def solve_factored(lu: np.ndarray, ipiv: np.ndarray, bandwidth: int, rhs_band: np.ndarray):
    x, info = _gbtrs(lu, bandwidth, bandwidth, rhs_band[:, None], ipiv)
    if info != 0:
        raise ValueError(f"banded back-substitution failed with info={info}")
    return x.ravel()


def solve_banded(system: AssembledSystem) -> np.ndarray:
    """Direct solve of an assembled system; returns the DOF vector in the flat layout."""
    matrix = system.matrix
    rhs = np.asarray(system.rhs, dtype=float)
    if rhs.shape != (matrix.n,):
        raise ValueError("rhs length does not match the system dimension")
    work = np.asfortranarray(matrix.data.copy())
    lu, ipiv = factor_banded(work, matrix.bandwidth)
    xb = solve_factored(lu, ipiv, matrix.bandwidth, matrix.dofmap.to_band(rhs))
    return matrix.dofmap.to_flat(xb)
