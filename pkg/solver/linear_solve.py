import numpy as np

from loguru import logger
from typing import (
	Optional,
	Sequence,
	Union
)

from fem.bcs import DirichletBC
from fem.exceptions import SpaceMismatch
from fem.function import Function
from op2.data import Mat
from schemas.input_schemas import SolverParams
from schemas.output_schemas import SolveReport
from solver.cg import cg_solve
from solver.exceptions import NonConvergence


def solve(A: Mat, u: Function, b: Function, bcs: Union[DirichletBC, Sequence[DirichletBC], None] = None,
		  params: Optional[SolverParams] = None, raise_on_failure: bool = True) -> SolveReport:
	"""
	Solve A u = b with CG and write the solution into u.

	The iteration starts from the current values of u with the boundary values imposed, so that rows zeroed
	by the boundary conditions are satisfied from the first iterate and their entries never move.
	:param A: assembled operator, boundary rows already replaced
	:param u: solution Function, also the initial guess
	:param b: right-hand side, boundary entries already set
	:param bcs: boundary conditions to impose on the initial guess
	:param params: solver parameters
	:param raise_on_failure: raise NonConvergence when the iteration limit is hit
	:return: the solver report
	"""
	params = params or SolverParams()
	bcs = [bcs] if isinstance(bcs, DirichletBC) else list(bcs or [])
	if not u.function_space().compatible(b.function_space()):
		raise SpaceMismatch(f'{u.name} and {b.name} live on different spaces')

	x0 = u.dat.data_ro.reshape(-1).copy()
	for bc in bcs:
		bc.apply(x0)

	maxit = params.ksp_max_it or 10 * x0.size
	logger.info(f'Solving a system of {x0.size} unknowns with CG ({params.pc_type.value}).')
	x, report = cg_solve(A, b.dat.data_ro.reshape(-1), x0=x0, rtol=params.ksp_rtol, atol=params.ksp_atol,
						 maxit=maxit, precond=params.pc_type)
	u.dat.data[:] = np.reshape(x, u.dat.data_ro.shape)

	if not report.converged and raise_on_failure:
		raise NonConvergence(report)
	logger.info(f'CG finished after {report.iterations} iterations, residual {report.final_residual_norm:.3e}.')
	return report
