import numpy as np

from loguru import logger
from typing import Optional

from bench.timing import (
	PhaseTimer,
	best_of
)
from fem.assembly import (
	assemble,
	assemble_monolithic
)
from fem.form import (
	mass,
	mixed
)
from fem.functionspace import (
	FunctionSpace,
	MixedFunctionSpace
)
from fem.mesh import (
	Mesh,
	unit_square_mesh
)
from helpers.settings import get_settings
from op2.parloop import default_threads
from schemas.enums import BenchCase
from schemas.input_schemas import MixedParams
from schemas.output_schemas import (
	PhaseTimes,
	RunReport
)


DISCREPANCY_TOLERANCE = 1e-12
MASS_BLOCKS = {(0, 0): mass, (0, 1): mass, (1, 0): mass, (1, 1): mass}


def mixed_space(mesh: Mesh, degrees: tuple[int, int] = (1, 2)) -> MixedFunctionSpace:
	return MixedFunctionSpace([FunctionSpace(mesh, d, name=f'P{d}_{k}') for k, d in enumerate(degrees)])


def compare_mixed(mesh: Mesh, seed: int, threads: Optional[int] = None,
				  degrees: tuple[int, int] = (1, 2)) -> tuple[dict, PhaseTimes]:
	"""
	Assemble the coupled two-field mass system once block by block and once in a single loop over the
	concatenated basis, then compare the two matrices and the products of a random vector.
	:param mesh: triangle or tetrahedron mesh
	:param seed: seed of the random vector
	:param threads: worker count for the assembly loops
	:param degrees: element degrees of the two fields
	:return: a dict with the nested and monolithic matrices, the largest entry discrepancy and whether the block
	product equals the flattened product bit for bit, and the phase times
	"""
	timer = PhaseTimer()
	W = mixed_space(mesh, degrees)
	form = mixed(W, MASS_BLOCKS)

	with timer.phase('assemble_lhs'):
		nested = assemble(form, threads=threads)
	with timer.phase('assemble_rhs'):
		monolithic = assemble_monolithic(form, threads=threads)

	with timer.phase('solve'):
		discrepancy = float(np.max(np.abs(nested.to_dense() - monolithic.to_dense()))) if W.dof_count else 0.0
		x = np.random.default_rng(seed).standard_normal(W.dof_count)
		block_product = nested.spmv(x)
		flat_product = nested.to_mat().spmv(x)
		bitwise = bool(np.array_equal(block_product.view(np.uint64), flat_product.view(np.uint64)))
		product_discrepancy = float(np.max(np.abs(block_product - monolithic.spmv(x))))

	return {'space': W, 'nested': nested, 'monolithic': monolithic, 'discrepancy': discrepancy,
			'product_discrepancy': product_discrepancy, 'bitwise': bitwise}, timer.stop()


def run_mixed_check(params: MixedParams) -> RunReport:
	"""
	Blockwise against monolithic assembly of the mixed mass system on unit_square_mesh(n).
	"""
	threads = params.threads or default_threads()
	seed = get_settings().seed if params.seed is None else params.seed
	logger.info(f'Mixed assembly check on a {params.n}x{params.n} square.')
	mesh = unit_square_mesh(params.n)

	result, times = best_of(lambda: compare_mixed(mesh, seed, threads), repeats=params.repeats)
	report = RunReport(case=BenchCase.mixed, n=params.n, dofs=result['space'].dof_count, degree=2, dim=2,
					   threads=threads, times=times, mixed_discrepancy=result['discrepancy'],
					   spmv_bitwise=result['bitwise'])
	report.accepted = result['discrepancy'] <= DISCREPANCY_TOLERANCE and result['bitwise']
	logger.info(f'Mixed check: discrepancy {result["discrepancy"]:.3e}, bitwise product {result["bitwise"]}, '
				f'monolithic product discrepancy {result["product_discrepancy"]:.3e}.')
	return report
