from functools import lru_cache
from loguru import logger
from typing import (
	Optional,
	Sequence,
	Union
)

from fem.bcs import DirichletBC
from fem.compiler import (
	compile_local_kernel,
	compile_mixed_kernel
)
from fem.exceptions import (
	SpaceMismatch,
	UnsupportedForm
)
from fem.form import (
	Form,
	split_mixed
)
from fem.function import Function
from kernel_ir.ast import KernelAst
from kernel_ir.kernel import Kernel
from op2.data import (
	Mat,
	build_sparsity
)
from op2.parloop import par_loop
from schemas.enums import (
	Access,
	FormKind
)
from solver.block import NestedMat


Tensor = Union[Mat, Function, NestedMat, tuple]


@lru_cache(maxsize=256)
def kernel_for(ast: KernelAst) -> Kernel:
	return Kernel(ast)


def _coefficient_args(form: Form, facet_nodes=None) -> list:
	if facet_nodes is not None:
		return [f.dat(Access.read, facet_nodes) for f in form.coefficients]
	return [f.dat(Access.read, f.function_space().cell_node_map) for f in form.coefficients]


def _assemble_matrix(form: Form, tensor: Optional[Mat], threads: Optional[int]) -> Mat:
	test, trial = form.test, form.trial
	sparsity = build_sparsity(test.cell_node_map, trial.cell_node_map)
	if tensor is None:
		tensor = Mat(sparsity, name=f'{form.kind.value}_matrix')
	elif tensor.sparsity is not sparsity:
		raise SpaceMismatch(f'{tensor!r} was not built for this form')
	tensor.zero()

	mesh = form.mesh
	kernel = kernel_for(compile_local_kernel(form))
	par_loop(kernel, mesh.cells,
			 tensor(Access.inc, (test.cell_node_map, trial.cell_node_map)),
			 mesh.coordinates(Access.read, mesh.cell_vertex_map),
			 *_coefficient_args(form), threads=threads)
	return tensor


def _assemble_vector(form: Form, tensor: Optional[Function], threads: Optional[int]) -> Function:
	space = form.test
	if tensor is None:
		tensor = Function(space, name=f'{form.kind.value}_vector')
	elif not tensor.function_space().compatible(space):
		raise SpaceMismatch(f'{tensor!r} does not live on {space!r}')
	tensor.zero()

	mesh = form.mesh
	kernel = kernel_for(compile_local_kernel(form))
	if form.kind is FormKind.facet_source:
		facets, nodes, vertices = space.topology.facet_subset(form.markers)
		par_loop(kernel, facets,
				 tensor.dat(Access.inc, nodes),
				 mesh.coordinates(Access.read, vertices),
				 *_coefficient_args(form, nodes), threads=threads)
	else:
		par_loop(kernel, mesh.cells,
				 tensor.dat(Access.inc, space.cell_node_map),
				 mesh.coordinates(Access.read, mesh.cell_vertex_map),
				 *_coefficient_args(form), threads=threads)
	return tensor


def assemble(form: Form, bcs: Union[DirichletBC, Sequence[DirichletBC], None] = None, tensor: Optional[Tensor] = None,
			 threads: Optional[int] = None) -> Tensor:
	"""
	Assemble a form with one parallel loop per integral: the output tensor is incremented through the test
	(and trial) node maps, the cell coordinates are read through the cell-vertex map and every coefficient
	through its own node map. Boundary conditions are applied afterwards.
	:param form: catalogue or mixed form
	:param bcs: boundary conditions (non-mixed forms only)
	:param tensor: output to reuse, built for the same form
	:param threads: worker count for the loops
	:return: a Mat for bilinear forms, a Function for linear ones, a NestedMat or a tuple of Functions for
	mixed forms
	"""
	bcs = [bcs] if isinstance(bcs, DirichletBC) else list(bcs or [])

	if form.is_mixed:
		if bcs:
			raise UnsupportedForm('boundary conditions on mixed forms are not supported')
		return _assemble_mixed(form, tensor, threads)

	logger.debug(f'Assembling a {form.kind.value} form on {form.mesh.name}.')
	if form.rank == 2:
		result = _assemble_matrix(form, tensor, threads)
	else:
		result = _assemble_vector(form, tensor, threads)

	for bc in bcs:
		if bc.space is not None and not bc.space.compatible(form.test):
			raise SpaceMismatch(f'{bc!r} does not constrain the test space {form.test!r}')
		bc.apply(result)
	return result


def _assemble_mixed(form: Form, tensor: Optional[Tensor], threads: Optional[int]) -> Union[NestedMat, tuple]:
	table = split_mixed(form)
	if form.rank == 1:
		previous = tensor or (None,) * len(table)
		parts = []
		for k, (block, space) in enumerate(zip(table, form.test.spaces)):
			if block is None:
				parts.append((previous[k] or Function(space, name=f'block_{k}')).zero())
			else:
				parts.append(_assemble_vector(block, previous[k], threads))
		return tuple(parts)

	previous = tensor.blocks if isinstance(tensor, NestedMat) else None
	blocks = [[None if block is None else _assemble_matrix(block, previous[i][j] if previous else None, threads)
			   for j, block in enumerate(row)] for i, row in enumerate(table)]
	return NestedMat(blocks, row_sizes=[s.dof_count for s in form.test.spaces],
					 col_sizes=[s.dof_count for s in form.trial.spaces], name='mixed')


def assemble_monolithic(form: Form, threads: Optional[int] = None) -> Mat:
	"""
	Assemble a bilinear mixed form in one loop over the concatenated local basis, into a single matrix over the
	concatenated numbering of the mixed space.
	"""
	if not form.is_mixed or form.rank != 2:
		raise UnsupportedForm('monolithic assembly needs a bilinear mixed form')
	_, test_map = form.test.monolithic
	_, trial_map = form.trial.monolithic
	mat = Mat(build_sparsity(test_map, trial_map), name='mixed_monolithic')
	mesh = form.mesh
	par_loop(kernel_for(compile_mixed_kernel(form)), mesh.cells,
			 mat(Access.inc, (test_map, trial_map)),
			 mesh.coordinates(Access.read, mesh.cell_vertex_map), threads=threads)
	return mat
