import math
import numpy as np

from typing import (
	Callable,
	Optional,
	Union
)

from fem.assembly import kernel_for
from fem.compiler import compile_error_kernel
from fem.exceptions import SpaceMismatch
from fem.function import (
	Function,
	evaluate
)
from op2.data import (
	Dat,
	Global
)
from op2.parloop import par_loop
from schemas.enums import Access


def quadrature_points(mesh, reference_points: np.ndarray) -> np.ndarray:
	"""
	Physical images of reference points in every cell, shape (ncells, npoints, gdim).
	"""
	x = mesh.coordinates.data_ro.reshape(-1, mesh.dim)[mesh.cell_vertex_map.values2d]
	return x[:, :1, :] + np.einsum('qk,ckd->cqd', reference_points, x[:, 1:, :] - x[:, :1, :])


def l2_error(u: Function, exact: Union[Callable, float, int], threads: Optional[int] = None) -> float:
	"""
	L2 norm of u - exact, the square of each cell contribution summed by a SUM reduction over the cells.
	:param u: scalar Function
	:param exact: callable on (npoints, gdim) coordinates, or a number
	:param threads: worker count
	:return: the error norm
	"""
	space = u.function_space()
	if space.dim != 1:
		raise SpaceMismatch(f'l2_error needs a scalar field, {u.name} has {space.dim} components')

	mesh = space.mesh
	ast, rule = compile_error_kernel(mesh.cell_type, mesh.dim, space.degree)
	points = quadrature_points(mesh, rule.points)
	values = evaluate(exact, points.reshape(-1, mesh.dim)).reshape(mesh.cells.size, rule.size)

	total = Global(1, 0.0, name='l2_error')
	par_loop(kernel_for(ast), mesh.cells,
			 total(Access.sum),
			 mesh.coordinates(Access.read, mesh.cell_vertex_map),
			 u.dat(Access.read, space.cell_node_map),
			 Dat(mesh.cells, rule.size, values, name='exact')(Access.read),
			 threads=threads)
	return math.sqrt(max(float(total), 0.0))


def norm(u: Function, threads: Optional[int] = None) -> float:
	return l2_error(u, 0.0, threads=threads)
