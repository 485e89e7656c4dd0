import numpy as np

from loguru import logger
from typing import (
	Optional,
	Sequence,
	Union
)

from fem.exceptions import SpaceMismatch
from fem.function import (
	Constant,
	Function
)
from fem.functionspace import FunctionSpace
from kernel_ir.ast import (
	Assign,
	KernelAst,
	Param,
	idx
)
from kernel_ir.kernel import Kernel
from op2.data import Global
from op2.parloop import (
	ParLoop,
	par_loop
)
from schemas.enums import (
	Access,
	IterationRegion
)


def custom_parloop(kernel: Kernel, args: Sequence[tuple[Union[Function, Constant, Global], Access]],
				   iterate: IterationRegion = IterationRegion.nodes, threads: Optional[int] = None) -> ParLoop:
	"""
	Run a user kernel over the nodes or the cells of the mesh the Functions live on. Over nodes, every Function
	is passed directly; over cells, through its cell-node map. Globals and Constants are passed as they are.
	:param kernel: the user kernel
	:param args: (data, access) pairs in kernel parameter order
	:param iterate: nodes or cells
	:param threads: worker count
	:return: the executed loop
	"""
	iterate = IterationRegion(iterate)
	functions = [data for data, _ in args if isinstance(data, Function)]
	if not functions:
		raise SpaceMismatch('a custom loop needs at least one Function to iterate over')

	space = functions[0].function_space()
	for f in functions[1:]:
		other = f.function_space()
		if other.mesh is not space.mesh or (iterate is IterationRegion.nodes and other.node_set is not space.node_set):
			raise SpaceMismatch(f'{f.name} cannot share a {iterate.value} loop with {functions[0].name}')

	loop_args = []
	for data, access in args:
		if isinstance(data, Function):
			node_map = data.function_space().cell_node_map if iterate is IterationRegion.cells else None
			loop_args.append(data.dat(access, node_map))
		elif isinstance(data, Constant):
			loop_args.append(data.glob(access))
		else:
			loop_args.append(data(access))

	iterset = space.node_set if iterate is IterationRegion.nodes else space.mesh.cells
	logger.debug(f'Custom kernel {kernel.name} over the {iterate.value} of {space.mesh.name}.')
	return par_loop(kernel, iterset, *loop_args, threads=threads)


def perturbed_initial_condition(space: FunctionSpace, seed: int, mean: float = 0.63, amplitude: float = 0.02,
								name: str = 'c0') -> Function:
	"""
	A field 0.63 + 0.02 * (0.5 - r) with r uniform in [0, 1) per node, drawn from a generator seeded with `seed`.
	The values are written by a custom kernel reading the random draws node by node.
	"""
	if space.dim != 1:
		raise SpaceMismatch('the perturbed initial condition is a scalar field')
	random = Function(space, name='random')
	random.dat.data[:] = np.random.default_rng(seed).random(space.node_count)

	ast = KernelAst('perturbed_initial_condition', (Param('A', (1,)), Param('R', (1,))),
					(Assign(idx('A', 0), mean + amplitude * (0.5 - idx('R', 0))),))
	field = Function(space, name=name)
	custom_parloop(Kernel(ast), [(field, Access.write), (random, Access.read)])
	return field
