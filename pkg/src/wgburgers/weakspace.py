"""Weak functions on interval meshes and their discrete derivatives.

A weak function pairs a polynomial of degree <= k inside each element with a
single value per mesh node; the node values need not be traces of the interior
part.  Its discrete derivative on an element is the unique polynomial of
degree r = k + 1 whose moments against every test polynomial q of degree <= r
reproduce the integration-by-parts data of the element:

    (d_w v, q) = -(v0, q') + v_right q(right) - v_left q(left).

Interior polynomials use the scaled Legendre basis, so the local Gram matrix
is diagonal and the moment solve is explicit.
"""

import numpy as np

from .mesh import Mesh
from .quadrature import QuadratureRule, RefPoly, gauss_rule, legendre_table

NODE_MATCH_TOL = 1e-12


def same_mesh(a: Mesh, b: Mesh) -> bool:
    """Whether two meshes describe the same partition (by value, not identity)."""
    return a is b or np.array_equal(a.nodes, b.nodes)


class WeakFunction:
    """Per-element interior polynomial of degree <= k plus one value per node.

    interior[i, j] is the coefficient of the degree-j scaled Legendre basis
    function on element i; node_values[i] belongs to mesh node x_{i+1} (0-based).
    Values are frozen after construction.
    """

    def __init__(self, mesh: Mesh, k: int, interior, node_values):
        if k < 0:
            raise ValueError("interior degree k must be non-negative")
        interior = np.array(interior, dtype=float)
        node_values = np.array(node_values, dtype=float)
        if interior.shape != (mesh.n_elements, k + 1):
            raise ValueError(
                f"interior must have shape {(mesh.n_elements, k + 1)}, got {interior.shape}"
            )
        if node_values.shape != (mesh.n_nodes,):
            raise ValueError(
                f"node_values must have shape {(mesh.n_nodes,)}, got {node_values.shape}"
            )
        interior.setflags(write=False)
        node_values.setflags(write=False)
        self.mesh = mesh
        self.k = int(k)
        self.interior = interior
        self.node_values = node_values

    @classmethod
    def zeros(cls, mesh: Mesh, k: int) -> "WeakFunction":
        return cls(mesh, k, np.zeros((mesh.n_elements, k + 1)), np.zeros(mesh.n_nodes))

    @property
    def r(self) -> int:
        """Degree of the discrete derivative space."""
        return self.k + 1

    def has_zero_boundary(self) -> bool:
        return self.node_values[0] == 0.0 and self.node_values[-1] == 0.0

    def element_poly(self, index: int) -> RefPoly:
        self.mesh.element(index)
        return RefPoly(self.interior[index])

    def element_data(self) -> np.ndarray:
        """Local data (c_0 .. c_k, left node value, right node value) per element."""
        return np.hstack(
            [self.interior, self.node_values[:-1, None], self.node_values[1:, None]]
        )

    def interior_at(self, ref_points) -> np.ndarray:
        """Interior values at the given reference points, shape (n_elements, len(ref_points))."""
        return self.interior @ legendre_table(self.k, ref_points)

    def evaluate(self, x: float, mode: str = "interior") -> float:
        """Value at x, either from the interior polynomial or the stored node value.

        Interior mode resolves points shared by two elements to the left one.
        Node mode requires x to sit on a mesh node to within 1e-12.
        """
        if mode == "interior":
            index = self.mesh.element_containing(x)
            a, b = self.mesh.element(index)
            t = 2.0 * (x - a) / (b - a) - 1.0
            return self.element_poly(index)(min(max(t, -1.0), 1.0))
        if mode == "node":
            nearest = int(np.argmin(np.abs(self.mesh.nodes - x)))
            if abs(self.mesh.nodes[nearest] - x) > NODE_MATCH_TOL:
                raise ValueError(f"{x} is not a mesh node")
            return float(self.node_values[nearest])
        raise ValueError(f"unknown evaluation mode {mode!r}")

    def dof_vector(self) -> np.ndarray:
        """Flat layout [interior coefficients, element-major] ++ [interior node values]."""
        return np.concatenate([self.interior.ravel(), self.node_values[1:-1]])

    @classmethod
    def from_dof_vector(cls, mesh: Mesh, k: int, vec) -> "WeakFunction":
        """Rebuild from the flat layout; boundary node values are pinned to zero."""
        vec = np.asarray(vec, dtype=float)
        n_int = mesh.n_elements * (k + 1)
        if vec.shape != (n_int + mesh.n_nodes - 2,):
            raise ValueError(f"dof vector has wrong length {vec.shape}")
        nodes = np.zeros(mesh.n_nodes)
        nodes[1:-1] = vec[n_int:]
        return cls(mesh, k, vec[:n_int].reshape(mesh.n_elements, k + 1), nodes)

    def _binary(self, other, op):
        if not isinstance(other, WeakFunction):
            return NotImplemented
        if not same_mesh(other.mesh, self.mesh) or other.k != self.k:
            raise ValueError("operands live on different spaces")
        return WeakFunction(
            self.mesh, self.k, op(self.interior, other.interior), op(self.node_values, other.node_values)
        )

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return WeakFunction(self.mesh, self.k, scalar * self.interior, scalar * self.node_values)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def element_weak_derivative_matrix(h: float, k: int) -> np.ndarray:
    """Matrix taking (c_0 .. c_k, v_left, v_right) to the degree-(k+1) derivative coefficients.

    Row m divides the moment against the degree-m basis function by the Gram
    entry h / (2m + 1).  The interior contribution uses the closed form
    int P_j P_m' = 2 for j < m with j + m odd, and 0 otherwise.
    """
    if h <= 0.0:
        raise ValueError("element size must be positive")
    if k < 0:
        raise ValueError("k must be non-negative")
    r = k + 1
    mat = np.zeros((r + 1, k + 3))
    for m in range(r + 1):
        scale = (2 * m + 1) / h
        for j in range(min(m, k + 1)):
            if (m + j) % 2 == 1:
                mat[m, j] = -2.0 * scale
        mat[m, k + 1] = -scale if m % 2 == 0 else scale  # -P_m(-1) factor
        mat[m, k + 2] = scale  # P_m(+1) factor
    return mat


class WeakDerivative:
    """Per-element discrete-derivative operators for one (mesh, k) pair, built once."""

    def __init__(self, mesh: Mesh, k: int):
        base = element_weak_derivative_matrix(1.0, k)
        ops = base[None, :, :] / mesh.element_sizes[:, None, None]
        ops.setflags(write=False)
        self.mesh = mesh
        self.k = int(k)
        self.r = self.k + 1
        self.ops = ops

    def element_matrix(self, index: int) -> np.ndarray:
        self.mesh.element(index)
        return self.ops[index]

    def apply_data(self, data: np.ndarray) -> np.ndarray:
        """Derivative coefficients (n_elements, r + 1) from local data (n_elements, k + 3)."""
        return np.einsum("imc,ic->im", self.ops, data)

    def apply(self, v: WeakFunction) -> np.ndarray:
        if not same_mesh(v.mesh, self.mesh) or v.k != self.k:
            raise ValueError("weak function lives on a different space")
        return self.apply_data(v.element_data())


def weak_derivative(v: WeakFunction, element_index: int) -> RefPoly:
    """Discrete derivative of v on one element, as a polynomial of degree k + 1."""
    a, b = v.mesh.element(element_index)
    mat = element_weak_derivative_matrix(b - a, v.k)
    data = np.concatenate(
        [v.interior[element_index], [v.node_values[element_index], v.node_values[element_index + 1]]]
    )
    return RefPoly(mat @ data)


def l2_project(f, degree: int, interval, rule: QuadratureRule) -> RefPoly:
    """L2 projection of a scalar function onto polynomials of the given degree.

    f must accept numpy arrays of physical coordinates.  The rule has to be
    exact through degree 2 * degree so the projection is exact on polynomials.
    """
    if degree < 0:
        raise ValueError("projection degree must be non-negative")
    if rule.exact_degree < 2 * degree:
        raise ValueError("quadrature rule too weak for this projection degree")
    a, b = float(interval[0]), float(interval[1])
    if b <= a:
        raise ValueError("interval must have positive length")
    x = 0.5 * (a + b) + 0.5 * (b - a) * rule.points
    values = np.asarray(f(x), dtype=float)
    if values.shape != x.shape:
        values = np.broadcast_to(values, x.shape)
    table = legendre_table(degree, rule.points)
    scale = 0.5 * (2.0 * np.arange(degree + 1) + 1.0)
    return RefPoly(scale * (table @ (rule.weights * values)))


def qh_project(u, mesh: Mesh, k: int, rule: QuadratureRule | None = None) -> WeakFunction:
    """Projection onto the weak space: element-wise L2 projection plus nodal interpolation.

    Commutes with the discrete derivative: the derivative of the projection is
    the degree-(k+1) L2 projection of u'.
    """
    if rule is None:
        rule = gauss_rule(k + 6)
    if rule.exact_degree < 2 * k:
        raise ValueError("quadrature rule too weak for the interior projection")
    mids = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
    x = mids[:, None] + 0.5 * mesh.element_sizes[:, None] * rule.points[None, :]
    values = np.asarray(u(x.ravel()), dtype=float).reshape(x.shape)
    table = legendre_table(k, rule.points)
    scale = 0.5 * (2.0 * np.arange(k + 1) + 1.0)
    interior = (values * rule.weights) @ table.T * scale
    node_values = np.asarray(u(mesh.nodes.copy()), dtype=float)
    return WeakFunction(mesh, k, interior, node_values)


def interior_norm(v: WeakFunction) -> float:
    """Discrete L2 norm of the interior component, ||v0||_h."""
    gram = v.mesh.element_sizes[:, None] / (2.0 * np.arange(v.k + 1) + 1.0)
    return float(np.sqrt(np.sum(gram * v.interior**2)))


def interior_inner(u: WeakFunction, v: WeakFunction) -> float:
    """Discrete L2 inner product (u0, v0)_h of the interior components."""
    if not same_mesh(u.mesh, v.mesh) or u.k != v.k:
        raise ValueError("operands live on different spaces")
    gram = u.mesh.element_sizes[:, None] / (2.0 * np.arange(u.k + 1) + 1.0)
    return float(np.sum(gram * u.interior * v.interior))
