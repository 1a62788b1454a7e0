"""Partitions of the unit interval into one-dimensional elements."""

import numpy as np

_PARTITION_TOL = 1e-14


class Mesh:
    """Strictly increasing nodes 0 = x_1 < ... < x_N = 1 with elements I_i = (x_i, x_{i+1})."""

    def __init__(self, nodes):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError("mesh must span exactly [0, 1]")
        sizes = np.diff(nodes)
        if np.any(sizes <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        if abs(sizes.sum() - 1.0) > _PARTITION_TOL:
            raise ValueError("element sizes do not partition [0, 1]")
        nodes.setflags(write=False)
        sizes.setflags(write=False)
        self.nodes = nodes
        self.element_sizes = sizes

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def h(self) -> float:
        """Largest element size."""
        return float(self.element_sizes.max())

    def element(self, index: int):
        """Endpoints (x_i, x_{i+1}) of the element with the given index."""
        if not 0 <= index < self.n_elements:
            raise ValueError(f"element index {index} out of range [0, {self.n_elements})")
        return float(self.nodes[index]), float(self.nodes[index + 1])

    def jacobian(self, index: int) -> float:
        """Jacobian h_i / 2 of the affine map from [-1, 1] onto the element."""
        self.element(index)
        return 0.5 * float(self.element_sizes[index])

    def element_containing(self, x: float) -> int:
        """Index of the element containing x; points shared by two elements go left."""
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"coordinate {x} outside [0, 1]")
        index = int(np.searchsorted(self.nodes, x, side="left")) - 1
        return min(max(index, 0), self.n_elements - 1)

    def __repr__(self):
        return f"Mesh(n_elements={self.n_elements}, h={self.h:g})"


def build_uniform_mesh(n_elements: int) -> Mesh:
    """Uniform partition of [0, 1] into n_elements intervals of size 1/n_elements."""
    if n_elements < 1:
        raise ValueError(f"n_elements must be positive, got {n_elements}")
    return Mesh(np.linspace(0.0, 1.0, int(n_elements) + 1))


def map_to_element(mesh: Mesh, element_index: int, ref_point: float) -> float:
    """Affine image of a reference coordinate in [-1, 1] on the given element."""
    a, b = mesh.element(element_index)
    if not -1.0 <= ref_point <= 1.0:
        raise ValueError(f"reference point {ref_point} outside [-1, 1]")
    return a + (ref_point + 1.0) * 0.5 * (b - a)
