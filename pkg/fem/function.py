import numpy as np

from typing import (
	Callable,
	Optional,
	Union
)

from fem.exceptions import SpaceMismatch
from fem.functionspace import FunctionSpace
from fem.pointwise import (
	PointwiseExpr,
	pointwise
)
from op2.data import (
	Dat,
	Global
)


def evaluate(f: Union[Callable, float, int], points: np.ndarray, dim: int = 1) -> np.ndarray:
	"""
	Values of a host callable or a number at physical points.
	:param f: number, or callable taking an (npoints, gdim) array and returning npoints values (npoints x dim for
	vector fields)
	:param points: (npoints, gdim) coordinates
	:param dim: components per point
	:return: (npoints, dim) array
	"""
	if callable(f):
		values = np.asarray(f(points), dtype=np.float64)
	else:
		values = np.full(points.shape[0] * dim, float(f))
	if values.size == 1 and points.shape[0] * dim != 1:
		values = np.full(points.shape[0] * dim, float(values.reshape(-1)[0]))
	if values.size != points.shape[0] * dim:
		raise SpaceMismatch(f'expected {points.shape[0] * dim} values from {f!r}, got {values.size}')
	return values.reshape(points.shape[0], dim)


class Function(PointwiseExpr):
	"""
	A field on a FunctionSpace, stored as a Dat with one entry per node and component. Arithmetic builds
	pointwise expressions; `assign`, `+=` and `-=` evaluate them.
	"""
	def __init__(self, space: FunctionSpace, dat: Optional[Dat] = None, name: str = 'function'):
		if dat is None:
			dat = Dat(space.node_set, space.dim, name=name)
		elif dat.set is not space.node_set or dat.dim != space.dim:
			raise SpaceMismatch(f'{dat!r} does not hold one value per node of {space!r}')
		self._space = space
		self.dat = dat
		self.name = name

	def __repr__(self):
		return f'Function({self.name!r}, {self._space!r})'

	def function_space(self) -> FunctionSpace:
		return self._space

	@property
	def data(self) -> np.ndarray:
		return self.dat.data

	@property
	def data_ro(self) -> np.ndarray:
		return self.dat.data_ro

	def interpolate(self, f: Union[Callable, float, int]) -> 'Function':
		"""
		Set the nodal values by evaluating `f` at the node coordinates.
		"""
		values = evaluate(f, self._space.node_coordinates(), self._space.dim)
		self.dat.data[...] = values[:, 0] if self._space.dim == 1 else values
		return self

	def assign(self, expr) -> 'Function':
		pointwise(expr, self, '=')
		return self

	def __iadd__(self, expr):
		pointwise(expr, self, '+=')
		return self

	def __isub__(self, expr):
		pointwise(expr, self, '-=')
		return self

	def __imul__(self, expr):
		pointwise(expr, self, '*=')
		return self

	def __itruediv__(self, expr):
		pointwise(expr, self, '/=')
		return self

	def copy(self, name: Optional[str] = None) -> 'Function':
		return Function(self._space, self.dat.copy(name or self.name), name=name or self.name)

	def zero(self) -> 'Function':
		self.dat.zero()
		return self


class Constant(PointwiseExpr):
	"""
	A spatially constant value, handed to kernels as a READ Global so that changing it needs no new kernel.
	"""
	def __init__(self, value: float, name: str = 'constant'):
		self.glob = Global(1, value, name=name)
		self.name = name

	def __repr__(self):
		return f'Constant({self.name!r}, {float(self)})'

	def __float__(self):
		return float(self.glob)

	def assign(self, value: float) -> 'Constant':
		self.glob.assign(float(value))
		return self
