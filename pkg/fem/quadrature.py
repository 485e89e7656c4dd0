import math
import numpy as np

from dataclasses import (
	dataclass,
	field
)
from functools import lru_cache
from scipy.special import (
	roots_jacobi,
	roots_legendre
)

from schemas.enums import CellType


REFERENCE_MEASURE = {
	CellType.interval: 1.0,
	CellType.triangle: 0.5,
	CellType.tetrahedron: 1.0 / 6.0,
}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
	cell: CellType
	degree: int
	points: np.ndarray = field(repr=False)
	weights: np.ndarray = field(repr=False)

	@property
	def size(self) -> int:
		return self.weights.size


def _gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
	# on [0, 1]
	x, w = roots_legendre(m)
	return (x + 1.0) / 2.0, w / 2.0


def _gauss_jacobi(m: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
	# on [0, 1] against the weight (1 - t)^alpha
	x, w = roots_jacobi(m, alpha, 0)
	return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


def _collapsed_rule(cell: CellType, degree: int) -> tuple[np.ndarray, np.ndarray]:
	"""
	Conical product rule: tensor Gauss rules on the unit square/cube pulled back through the collapsing map,
	with the Jacobian of the collapse absorbed by Gauss-Jacobi weights.
	"""
	m = math.ceil((degree + 1) / 2)
	a, wa = _gauss_legendre(m)
	b, wb = _gauss_jacobi(m, 1)
	if cell is CellType.triangle:
		aa, bb = np.meshgrid(a, b, indexing='ij')
		points = np.column_stack([(aa * (1.0 - bb)).ravel(), bb.ravel()])
		weights = np.outer(wa, wb).ravel()
		return points, weights

	c, wc = _gauss_jacobi(m, 2)
	aa, bb, cc = np.meshgrid(a, b, c, indexing='ij')
	points = np.column_stack([(aa * (1.0 - bb) * (1.0 - cc)).ravel(), (bb * (1.0 - cc)).ravel(), cc.ravel()])
	weights = np.einsum('i,j,k->ijk', wa, wb, wc).ravel()
	return points, weights


def _triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
	if degree <= 1:
		return np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([0.5])
	if degree == 2:
		points = np.array([[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]])
		return points, np.full(3, 1.0 / 6.0)
	if degree <= 4:
		# six-point symmetric rule, exact to degree 4 and with positive weights (also used for degree 3)
		points, weights = [], []
		for a, w in ((0.44594849091596488632, 0.22338158967801146570),
					 (0.091576213509770743460, 0.10995174365532186764)):
			points += [[a, a], [1.0 - 2.0 * a, a], [a, 1.0 - 2.0 * a]]
			weights += [w / 2.0] * 3
		return np.array(points), np.array(weights)
	return _collapsed_rule(CellType.triangle, degree)


def _tetrahedron_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
	if degree <= 1:
		return np.full((1, 3), 0.25), np.array([1.0 / 6.0])
	if degree == 2:
		a, b = (5.0 - math.sqrt(5.0)) / 20.0, (5.0 + 3.0 * math.sqrt(5.0)) / 20.0
		points = np.array([[a, a, a], [b, a, a], [a, b, a], [a, a, b]])
		return points, np.full(4, 1.0 / 24.0)
	return _collapsed_rule(CellType.tetrahedron, degree)


@lru_cache(maxsize=64)
def make_quadrature(cell: CellType, degree: int) -> QuadratureRule:
	"""
	Quadrature on the reference cell, exact for polynomials up to `degree`. All weights are positive and
	sum to the measure of the reference cell.
	:param cell: reference cell
	:param degree: polynomial degree to integrate exactly, at least 1
	:return: the rule
	"""
	cell = CellType(cell)
	degree = max(int(degree), 1)
	if cell is CellType.interval:
		x, w = _gauss_legendre(math.ceil((degree + 1) / 2))
		points, weights = x[:, None], w
	elif cell is CellType.triangle:
		points, weights = _triangle_rule(degree)
	else:
		points, weights = _tetrahedron_rule(degree)

	points.setflags(write=False)
	weights.setflags(write=False)
	return QuadratureRule(cell=cell, degree=degree, points=points, weights=weights)
