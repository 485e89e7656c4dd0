import itertools
import numpy as np

from dataclasses import (
	dataclass,
	field
)
from functools import lru_cache

from fem.exceptions import (
	CellMismatch,
	UnsupportedElement
)
from fem.quadrature import QuadratureRule
from schemas.enums import CellType


CELL_DIMENSION = {
	CellType.interval: 1,
	CellType.triangle: 2,
	CellType.tetrahedron: 3,
}

REFERENCE_VERTICES = {
	CellType.interval: np.array([[0.0], [1.0]]),
	CellType.triangle: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
	CellType.tetrahedron: np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
}

# facet cells of each cell type
FACET_CELL = {
	CellType.triangle: CellType.interval,
	CellType.tetrahedron: CellType.triangle,
}


def _exponents(dim: int, degree: int) -> np.ndarray:
	"""
	Exponent tuples of all monomials of total degree <= degree, ordered by total degree.
	"""
	powers = [p for p in itertools.product(range(degree + 1), repeat=dim) if sum(p) <= degree]
	return np.array(sorted(powers, key=lambda p: (sum(p), tuple(-x for x in p))), dtype=np.int64)


def _monomials(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
	# (npoints, nmonomials)
	return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


def _monomial_gradients(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
	# (npoints, nmonomials, dim)
	npts, dim = points.shape
	grads = np.zeros((npts, exponents.shape[0], dim))
	for d in range(dim):
		lowered = exponents.copy()
		lowered[:, d] = np.maximum(lowered[:, d] - 1, 0)
		grads[:, :, d] = exponents[:, d] * _monomials(points, lowered)
	return grads


@dataclass(frozen=True, eq=False)
class ReferenceElement:
	"""
	Nodal Lagrange element on a reference simplex. Basis coefficients come from inverting the Vandermonde
	matrix of the monomial basis at the nodes.
	"""
	cell: CellType
	degree: int
	nodes: np.ndarray = field(repr=False)
	coefficients: np.ndarray = field(repr=False)
	family: str = 'Lagrange'

	@property
	def dim(self) -> int:
		return CELL_DIMENSION[self.cell]

	@property
	def node_count(self) -> int:
		return self.nodes.shape[0]

	def values(self, points: np.ndarray) -> np.ndarray:
		points = np.atleast_2d(np.asarray(points, dtype=np.float64))
		return _monomials(points, _exponents(self.dim, self.degree)) @ self.coefficients

	def gradients(self, points: np.ndarray) -> np.ndarray:
		points = np.atleast_2d(np.asarray(points, dtype=np.float64))
		grads = _monomial_gradients(points, _exponents(self.dim, self.degree))
		return np.einsum('pmd,mi->pid', grads, self.coefficients)


def _reference_nodes(cell: CellType, degree: int) -> np.ndarray:
	vertices = REFERENCE_VERTICES[cell]
	if degree == 1:
		return vertices
	if cell is CellType.interval:
		return np.vstack([vertices, [[0.5]]])
	# edge midpoints ordered by the index of the opposite vertex
	opposite = [(1, 2), (0, 2), (0, 1)]
	return np.vstack([vertices] + [(vertices[a] + vertices[b]) / 2.0 for a, b in opposite])


@lru_cache(maxsize=16)
def lagrange_element(cell: CellType, degree: int) -> ReferenceElement:
	"""
	P1 on intervals, triangles and tetrahedra; P2 on intervals and triangles.
	"""
	cell = CellType(cell)
	if degree not in (1, 2) or (degree == 2 and cell is CellType.tetrahedron):
		raise UnsupportedElement(f'no Lagrange element of degree {degree} on {cell.value}')

	nodes = _reference_nodes(cell, degree)
	vandermonde = _monomials(nodes, _exponents(CELL_DIMENSION[cell], degree))
	coefficients = np.linalg.inv(vandermonde)
	nodes.setflags(write=False)
	return ReferenceElement(cell=cell, degree=degree, nodes=nodes, coefficients=coefficients)


def tabulate(element: ReferenceElement, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
	"""
	Basis values and reference gradients at the quadrature points.
	:param element: reference element
	:param rule: quadrature rule on the same cell
	:return: values (npoints, nnodes) and gradients (npoints, nnodes, dim)
	"""
	if rule.cell is not element.cell:
		raise CellMismatch(f'{element.cell.value} element cannot be tabulated on a {rule.cell.value} rule')
	return element.values(rule.points), element.gradients(rule.points)
