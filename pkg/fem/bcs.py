import numpy as np

from functools import cached_property
from loguru import logger
from typing import (
	Callable,
	Optional,
	Sequence,
	Union
)

from fem.exceptions import (
	MissingDiagonal,
	SpaceMismatch
)
from fem.function import (
	Function,
	evaluate
)
from fem.functionspace import FunctionSpace
from op2.data import (
	Dat,
	Mat,
	expand_dofs
)
from op2.exceptions import OutsideSparsity


class DirichletBC:
	"""
	Strong boundary condition: the nodes of `space` lying on exterior facets with the given markers take the
	boundary value. The value may be a number, a Function on the same space or a callable of the node
	coordinates; `nodes` may replace the markers to constrain an explicit node list.
	"""
	def __init__(self, space: Optional[FunctionSpace], value: Union[float, Function, Callable],
				 markers: Union[int, Sequence[int], None] = None, nodes: Optional[Sequence[int]] = None):
		assert markers is not None or nodes is not None, 'a boundary condition needs markers or nodes'
		self.space = space
		self.value = value
		self.markers = (markers,) if isinstance(markers, int) else tuple(markers or ())
		self._nodes = None if nodes is None else np.unique(np.asarray(nodes, dtype=np.int64))

		if isinstance(value, Function) and (space is None or not value.function_space().compatible(space)):
			raise SpaceMismatch(f'boundary value {value.name} does not live on {space!r}')
		if space is not None and self._nodes is not None and np.any(self._nodes >= space.node_count):
			raise SpaceMismatch(f'boundary nodes outside the {space.node_count} nodes of {space!r}')

	def __repr__(self):
		return f'DirichletBC({self.space!r}, markers={self.markers})'

	@cached_property
	def nodes(self) -> np.ndarray:
		return self._nodes if self._nodes is not None else self.space.boundary_nodes(self.markers)

	@property
	def dim(self) -> int:
		return self.space.dim if self.space is not None else 1

	@property
	def dofs(self) -> np.ndarray:
		return expand_dofs(self.nodes[:, None], self.dim).reshape(-1)

	def values(self) -> np.ndarray:
		"""
		Boundary values at the constrained nodes, one row per node.
		"""
		if isinstance(self.value, Function):
			return self.value.dat.data_ro.reshape(-1, self.dim)[self.nodes]
		if callable(self.value):
			return evaluate(self.value, self.space.node_coordinates()[self.nodes], self.dim)
		return np.full((self.nodes.size, self.dim), float(self.value))

	def apply(self, target: Union[Mat, Function, Dat, np.ndarray]):
		"""
		On a matrix: zero the constrained rows and put 1 on their diagonal. On a vector: set the constrained
		entries to the boundary values.
		"""
		if isinstance(target, Mat):
			try:
				target.zero_rows(self.dofs, 1.0)
			except OutsideSparsity as error:
				raise MissingDiagonal(f'row {error.row} has no stored diagonal entry') from None
			logger.debug(f'Zeroed {self.dofs.size} boundary rows of {target!r}.')
			return

		if isinstance(target, Function):
			target = target.dat
		data = target.data if isinstance(target, Dat) else target
		data.reshape(-1, self.dim)[self.nodes] = self.values()

	def zero(self, target: Union[Function, Dat]):
		data = (target.dat if isinstance(target, Function) else target).data
		data.reshape(-1, self.dim)[self.nodes] = 0.0


def apply_dirichlet(A: Optional[Mat], b: Union[Function, Dat, np.ndarray, None], bc: DirichletBC):
	"""
	Enforce a boundary condition on a linear system by row replacement. The matrix loses its symmetry.
	"""
	if A is not None:
		if A.shape[0] != A.shape[1]:
			raise SpaceMismatch(f'boundary conditions need a square matrix, got {A.shape}')
		bc.apply(A)
	if b is not None:
		bc.apply(b)
