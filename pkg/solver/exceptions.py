class SolverError(Exception):
	"""
	Base class for errors raised by the linear solvers.
	"""


class IndefiniteBreakdown(SolverError, ArithmeticError):
	def __init__(self, iteration: int, curvature: float):
		super().__init__(f'p.Ap = {curvature!r} at iteration {iteration}: the operator is not positive definite')
		self.iteration = iteration
		self.curvature = curvature


class SingularPreconditioner(SolverError, ArithmeticError):
	def __init__(self, rows):
		rows = [int(r) for r in rows]
		super().__init__(f'Jacobi preconditioner needs a nonzero diagonal, rows {rows[:10]} are zero')
		self.rows = rows


class NonConvergence(SolverError):
	def __init__(self, report):
		super().__init__(f'CG stopped after {report.iterations} iterations with residual '
						 f'{report.final_residual_norm:.3e}')
		self.report = report
