"""Uniform simplicial meshes of an interval or a rectangle.

All meshes carry P1 connectivity plus reference quadrature rules on
elements and boundary facets. Quadrature points are stored in barycentric
coordinates so that P1 basis values at a point are just its barycentric
weights.

In 1D the boundary consists of the two endpoints and the facet "integral"
is the counting measure, i.e. the sum of the two endpoint values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class QuadratureRule:
    """Reference rule: barycentric points of shape (nq, k+1), weights summing to 1."""

    name: str
    bary: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.weights)


def vertex_rule(n_vertices: int) -> QuadratureRule:
    """Nodal (trapezoid-type) rule; its mass matrix is the lumped mass."""
    return QuadratureRule(
        "vertex", np.eye(n_vertices), np.full(n_vertices, 1.0 / n_vertices)
    )


def gauss_rule(n_vertices: int) -> QuadratureRule:
    """Rule exact for polynomials of degree >= 3 on a point, segment or triangle."""
    if n_vertices == 1:
        return QuadratureRule("gauss", np.ones((1, 1)), np.ones(1))
    if n_vertices == 2:
        g = 0.5 / np.sqrt(3.0)
        bary = np.array([[0.5 + g, 0.5 - g], [0.5 - g, 0.5 + g]])
        return QuadratureRule("gauss", bary, np.array([0.5, 0.5]))
    if n_vertices == 3:
        # Strang-Fix 6-point rule, degree 4, positive weights
        a, b = 0.445948490915965, 0.091576213509771
        wa, wb = 0.223381589678011, 0.109951743655322
        bary = np.array(
            [
                [a, a, 1 - 2 * a],
                [a, 1 - 2 * a, a],
                [1 - 2 * a, a, a],
                [b, b, 1 - 2 * b],
                [b, 1 - 2 * b, b],
                [1 - 2 * b, b, b],
            ]
        )
        return QuadratureRule("gauss", bary, np.array([wa] * 3 + [wb] * 3))
    raise InvalidArgumentError(f"no rule for simplices with {n_vertices} vertices")


def get_rule(name: str, n_vertices: int) -> QuadratureRule:
    if name == "vertex":
        return vertex_rule(n_vertices)
    if name == "gauss":
        return gauss_rule(n_vertices)
    raise InvalidArgumentError(f"unknown quadrature rule {name!r}")


@dataclass(frozen=True)
class Mesh:
    """Immutable P1 mesh.

    ``elements`` are intervals (1D) or triangles (2D); ``boundary_facets``
    are endpoint singletons (1D) or boundary edges (2D), each with a unit
    outward normal in ``facet_normals``.
    """

    dim: int
    extent: tuple[float, ...]
    shape: tuple[int, ...]
    node_coords: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    boundary_facets: np.ndarray
    facet_normals: np.ndarray
    element_measures: np.ndarray = field(repr=False)
    facet_measures: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def boundary_measure(self) -> float:
        if self.dim == 1:
            return 2.0
        return 2.0 * float(sum(self.extent))

    @property
    def mesh_id(self) -> str:
        dims = "x".join(f"{e:.6g}" for e in self.extent)
        cells = "x".join(str(s) for s in self.shape)
        return f"{self.dim}d-{dims}-{cells}"

    def _physical(self, simplices: np.ndarray, measures: np.ndarray, rule: QuadratureRule):
        # (n_simplex, nq, dim) points, (n_simplex, nq) weights
        verts = self.node_coords[simplices]
        points = np.einsum("qk,ekd->eqd", rule.bary, verts)
        weights = measures[:, None] * rule.weights[None, :]
        return points, weights

    def element_quadrature(self, rule: str = "gauss"):
        """Physical points and weights of the element rule."""
        r = get_rule(rule, self.dim + 1)
        return self._physical(self.elements, self.element_measures, r)

    def facet_quadrature(self, rule: str = "gauss"):
        """Physical points and weights of the boundary rule."""
        r = get_rule(rule, self.dim)
        return self._physical(self.boundary_facets, self.facet_measures, r)

    def refined(self) -> "Mesh":
        """Uniform refinement by 2 in each direction."""
        if self.dim == 1:
            return build_interval(self.extent[0], 2 * self.shape[0])
        return build_rectangle(
            self.extent[0], self.extent[1], 2 * self.shape[0], 2 * self.shape[1]
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "extent": list(self.extent),
            "shape": list(self.shape),
            "nodes": self.node_coords.tolist(),
            "elements": self.elements.tolist(),
            "boundary_nodes": self.boundary_nodes.tolist(),
            "boundary_facets": self.boundary_facets.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Mesh":
        # the uniform builders are canonical; rebuild rather than trust the payload
        extent, shape = data["extent"], data["shape"]
        if data["dim"] == 1:
            return build_interval(extent[0], shape[0])
        return build_rectangle(extent[0], extent[1], shape[0], shape[1])


def build_interval(L: float, n: int) -> Mesh:
    """Uniform mesh of (0, L) with ``n`` elements."""
    if not (np.isfinite(L) and L > 0):
        raise InvalidArgumentError(f"interval length must be positive, got {L}")
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"need at least 2 elements, got {n}")
    n = int(n)
    x = np.linspace(0.0, L, n + 1)
    x[-1] = L
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(
        dim=1,
        extent=(float(L),),
        shape=(n,),
        node_coords=x[:, None],
        elements=elements,
        boundary_nodes=np.array([0, n]),
        boundary_facets=np.array([[0], [n]]),
        facet_normals=np.array([[-1.0], [1.0]]),
        element_measures=np.diff(x),
        facet_measures=np.ones(2),
    )


def build_rectangle(Lx: float, Ly: float, nx: int, ny: int) -> Mesh:
    """Tensor grid on (0,Lx)x(0,Ly), each cell split into two triangles."""
    for name, val in (("Lx", Lx), ("Ly", Ly)):
        if not (np.isfinite(val) and val > 0):
            raise InvalidArgumentError(f"{name} must be positive, got {val}")
    for name, val in (("nx", nx), ("ny", ny)):
        if int(val) != val or val < 2:
            raise InvalidArgumentError(f"{name} must be an integer >= 2, got {val}")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, Lx, nx + 1)
    ys = np.linspace(0.0, Ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    coords = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    I, J = I.ravel(), J.ravel()
    n00, n10, n01, n11 = nid(I, J), nid(I + 1, J), nid(I, J + 1), nid(I + 1, J + 1)
    # both triangles counter-clockwise; right angles at n00 and n11
    tris = np.concatenate(
        [np.column_stack([n00, n10, n01]), np.column_stack([n11, n01, n10])]
    )

    facets, normals = [], []
    for i in range(nx):
        facets.append((nid(i, 0), nid(i + 1, 0)))
        normals.append((0.0, -1.0))
        facets.append((nid(i + 1, ny), nid(i, ny)))
        normals.append((0.0, 1.0))
    for j in range(ny):
        facets.append((nid(nx, j), nid(nx, j + 1)))
        normals.append((1.0, 0.0))
        facets.append((nid(0, j + 1), nid(0, j)))
        normals.append((-1.0, 0.0))
    facets = np.array(facets)
    fm = np.linalg.norm(coords[facets[:, 1]] - coords[facets[:, 0]], axis=1)

    area = np.full(len(tris), 0.5 * (Lx / nx) * (Ly / ny))
    return Mesh(
        dim=2,
        extent=(float(Lx), float(Ly)),
        shape=(nx, ny),
        node_coords=coords,
        elements=tris,
        boundary_nodes=np.unique(facets),
        boundary_facets=facets,
        facet_normals=np.array(normals),
        element_measures=area,
        facet_measures=fm,
    )


def build_mesh(extent: tuple[float, ...], shape: tuple[int, ...]) -> Mesh:
    if len(extent) == 1:
        return build_interval(extent[0], shape[0])
    if len(extent) == 2:
        return build_rectangle(extent[0], extent[1], shape[0], shape[1])
    raise InvalidArgumentError("only 1D intervals and 2D rectangles are supported")
