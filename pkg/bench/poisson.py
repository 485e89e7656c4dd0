import math
import numpy as np
import scipy.linalg

from loguru import logger
from typing import Optional

from bench.timing import (
	PhaseTimer,
	best_of
)
from fem.assembly import assemble
from fem.bcs import DirichletBC
from fem.form import (
	source,
	stiffness
)
from fem.function import Function
from fem.functionspace import FunctionSpace
from fem.mesh import (
	Mesh,
	reorder,
	unit_cube_mesh,
	unit_square_mesh
)
from fem.norms import l2_error
from op2.parloop import default_threads
from schemas.enums import BenchCase
from schemas.input_schemas import (
	PoissonParams,
	SolverParams
)
from schemas.output_schemas import (
	PhaseTimes,
	RunReport
)
from solver.exceptions import SolverError
from solver.linear_solve import solve


# largest mesh parameter solved again with a dense direct solver
ORACLE_MAX_N = 8
ORACLE_TOLERANCE = 1e-5

RATE_BAND = 0.1
FACTOR_BAND = 0.2


########################################################################################################################
# MANUFACTURED PROBLEMS
########################################################################################################################
def exact_solution(dim: int):
	"""
	u = sin(pi x) sin(pi y) on the unit square, u = cos(4 pi x) sin(4 pi y) cos(4 pi z) on the unit cube.
	"""
	if dim == 2:
		return lambda x: np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])
	return lambda x: np.cos(4 * np.pi * x[:, 0]) * np.sin(4 * np.pi * x[:, 1]) * np.cos(4 * np.pi * x[:, 2])


def source_term(dim: int):
	"""
	-laplacian(u): 2 pi^2 u in 2D, 48 pi^2 u in 3D.
	"""
	u = exact_solution(dim)
	factor = 2 * np.pi ** 2 if dim == 2 else 48 * np.pi ** 2
	return lambda x: factor * u(x)


def dirichlet_markers(dim: int) -> tuple[int, ...]:
	# the 3D solution vanishes on y = 0 and y = 1 only; its normal derivative vanishes on the other faces
	return (1, 2, 3, 4) if dim == 2 else (3, 4)


def make_mesh(dim: int, n: int) -> Mesh:
	return unit_square_mesh(n) if dim == 2 else unit_cube_mesh(n)


########################################################################################################################
# SINGLE CASE
########################################################################################################################
def solve_poisson(mesh: Mesh, degree: int, solver_params: Optional[SolverParams] = None,
				  threads: Optional[int] = None) -> tuple[dict, PhaseTimes]:
	"""
	Assemble and solve the manufactured Poisson problem on a mesh.
	:param mesh: unit square or unit cube mesh
	:param degree: element degree
	:param solver_params: CG parameters
	:param threads: worker count for the parallel loops
	:return: a dict with the space, operator, right-hand side, solution and solver report, and the phase times
	"""
	timer = PhaseTimer()
	V = FunctionSpace(mesh, degree)
	bc = DirichletBC(V, 0.0, dirichlet_markers(mesh.dim))

	with timer.phase('assemble_lhs'):
		A = assemble(stiffness(V), bcs=bc, threads=threads)
	with timer.phase('assemble_rhs'):
		b = assemble(source(V, source_term(mesh.dim)), bcs=bc, threads=threads)

	u = Function(V, name='u')
	with timer.phase('solve'):
		report = solve(A, u, b, bc, solver_params, raise_on_failure=False)

	return {'space': V, 'A': A, 'b': b, 'u': u, 'bc': bc, 'solve': report}, timer.stop()


def dense_oracle_discrepancy(A, b: Function, u: Function) -> float:
	"""
	Largest difference between u and the dense direct solution of the same system, relative to the latter.
	"""
	reference = scipy.linalg.solve(A.to_dense(), b.dat.data_ro.reshape(-1))
	scale = max(float(np.max(np.abs(reference))), 1e-300)
	return float(np.max(np.abs(u.dat.data_ro.reshape(-1) - reference))) / scale


########################################################################################################################
# CONVERGENCE RUN
########################################################################################################################
def observed_rate(previous: RunReport, current: RunReport) -> Optional[float]:
	"""
	log(e_prev / e_cur) / log(h_prev / h_cur) with h = 1/n.
	"""
	if not previous.l2_error or not current.l2_error:
		return None
	return math.log(previous.l2_error / current.l2_error) / math.log(current.n / previous.n)


def _accept(reports: list[RunReport], dim: int, degree: int):
	"""
	Set the acceptance flag of every report. The convergence check applies to the finest pair: in 2D the rate
	must lie within 0.1 of degree + 1, in 3D the error reduction factor within 20% of (n ratio)^(degree + 1).
	"""
	expected = degree + 1
	for k, report in enumerate(reports):
		accepted = report.error is None and bool(report.converged)
		if report.oracle_discrepancy is not None:
			accepted &= report.oracle_discrepancy <= ORACLE_TOLERANCE
		if k == len(reports) - 1 and report.rate is not None:
			if dim == 2:
				accepted &= abs(report.rate - expected) <= RATE_BAND
			else:
				ratio = report.n / reports[k - 1].n
				factor = reports[k - 1].l2_error / report.l2_error
				accepted &= (1 - FACTOR_BAND) * ratio ** expected <= factor <= (1 + FACTOR_BAND) * ratio ** expected
		report.accepted = accepted


def run_poisson(params: PoissonParams) -> list[RunReport]:
	"""
	Solve the manufactured Poisson problem on every mesh of `params.n_list` and report errors, observed rates and
	minimum wall times. A solver failure is recorded in the report of its mesh and the run carries on.
	"""
	threads = params.threads or default_threads()
	exact = exact_solution(params.dim)
	reports: list[RunReport] = []
	oracle_done = False

	for n in params.n_list:
		logger.info(f'Poisson {params.dim}D, P{params.degree}, n = {n}.')
		mesh = make_mesh(params.dim, n)

		report = RunReport(case=BenchCase.poisson, n=n, dofs=0, degree=params.degree, dim=params.dim,
						   threads=threads)
		try:
			result, times = best_of(lambda: solve_poisson(mesh, params.degree, params.solver, threads),
									repeats=params.repeats)
		except (SolverError, ArithmeticError) as error:
			logger.warning(f'Poisson solve failed on n = {n}: {error}')
			report.error = f'{type(error).__name__}: {error}'
			report.converged = False
			reports.append(report)
			continue

		report.dofs = result['space'].dof_count
		report.times = times
		report.iterations = result['solve'].iterations
		report.converged = result['solve'].converged
		report.l2_error = l2_error(result['u'], exact, threads=threads)
		if not report.converged:
			report.error = f'NonConvergence: residual {result["solve"].final_residual_norm:.3e}'

		if not oracle_done and n <= ORACLE_MAX_N:
			report.oracle_discrepancy = dense_oracle_discrepancy(result['A'], result['b'], result['u'])
			oracle_done = True

		if reports and reports[-1].l2_error:
			report.rate = observed_rate(reports[-1], report)

		logger.info(f'n = {n}: {report.dofs} dofs, error {report.l2_error:.3e}, {report.iterations} iterations, '
					f'rate {report.rate}.')
		reports.append(report)

	_accept(reports, params.dim, params.degree)
	return reports


def solution_values(mesh: Mesh, degree: int, threads: Optional[int] = None, direct: bool = True,
					solver_params: Optional[SolverParams] = None) -> np.ndarray:
	"""
	Nodal values of the discrete Poisson solution on a mesh, in the mesh's own numbering. With `direct` the
	assembled system is solved densely, which removes the solver tolerance from comparisons between meshes.
	"""
	result, _ = solve_poisson(mesh, degree, solver_params, threads)
	if direct:
		return scipy.linalg.solve(result['A'].to_dense(), result['b'].dat.data_ro.reshape(-1))
	return result['u'].dat.data_ro.copy()


def reordered_discrepancy(n: int, degree: int = 1, dim: int = 2, threads: Optional[int] = None,
						  direct: bool = True) -> float:
	"""
	Largest difference between the solutions on a mesh and on its RCM reordering, mapped back to the original
	vertex numbering (P1).
	"""
	assert degree == 1, 'the vertex permutation maps P1 nodes only'
	mesh = make_mesh(dim, n)
	reordered = reorder(mesh)
	original = solution_values(mesh, degree, threads, direct)
	permuted = solution_values(reordered, degree, threads, direct)
	return float(np.max(np.abs(permuted - original[reordered.vertex_permutation])))
