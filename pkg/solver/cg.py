import numpy as np

from loguru import logger
from typing import (
	Optional,
	Union
)

from op2.data import (
	Mat,
	ScalarType
)
from op2.exceptions import DimensionMismatch
from schemas.enums import (
	ConvergedReason,
	Preconditioner
)
from schemas.output_schemas import SolveReport
from solver.block import NestedMat
from solver.exceptions import (
	IndefiniteBreakdown,
	SingularPreconditioner
)


Operator = Union[Mat, NestedMat]


def jacobi(A: Operator) -> np.ndarray:
	"""
	Inverse diagonal of the operator.
	"""
	diagonal = A.diagonal()
	zero = np.flatnonzero(diagonal == 0.0)
	if zero.size:
		raise SingularPreconditioner(zero)
	return 1.0 / diagonal


def cg_solve(A: Operator, b, x0=None, rtol: float = 1e-8, atol: float = 1e-50, maxit: Optional[int] = None,
			 precond: Preconditioner = Preconditioner.none) -> tuple[np.ndarray, SolveReport]:
	"""
	Preconditioned conjugate gradients. The iteration stops when the recurrence residual drops below
	max(rtol * ||b||, atol); the true residual b - Ax is then checked and, if it is still too large, the
	iteration restarts from it. When the iteration limit is hit, the iterate with the smallest residual seen is
	returned with converged=False.
	:param A: symmetric positive definite operator, a Mat or a NestedMat
	:param b: right-hand side
	:param x0: initial guess, zero when omitted
	:param rtol: tolerance relative to ||b||
	:param atol: absolute tolerance
	:param maxit: iteration limit, 10 times the size of the system when omitted
	:param precond: none or jacobi
	:return: the solution and a SolveReport
	"""
	n = A.shape[0]
	b = np.asarray(b, dtype=ScalarType)
	if A.shape[0] != A.shape[1] or b.shape != (n,):
		raise DimensionMismatch(f'cannot solve a {A.shape} system with a right-hand side of shape {b.shape}')
	x = np.zeros(n, dtype=ScalarType) if x0 is None else np.array(x0, dtype=ScalarType).reshape(-1)
	if x.shape != (n,):
		raise DimensionMismatch(f'initial guess has shape {x.shape}, expected ({n},)')
	maxit = 10 * n if maxit is None else maxit

	precond = Preconditioner(precond)
	inverse_diagonal = jacobi(A) if precond is Preconditioner.jacobi else None

	def apply_preconditioner(r: np.ndarray) -> np.ndarray:
		return r * inverse_diagonal if inverse_diagonal is not None else r.copy()

	b_norm = float(np.linalg.norm(b))
	tolerance = max(rtol * b_norm, atol)
	reason = ConvergedReason.rtol if rtol * b_norm >= atol else ConvergedReason.atol

	def report(iterations: int, residual: float, converged: bool) -> SolveReport:
		return SolveReport(iterations=iterations, final_residual_norm=residual, converged=converged,
						   reason=reason if converged else ConvergedReason.maxit)

	r = b - A.spmv(x)
	r_norm = float(np.linalg.norm(r))
	if r_norm <= tolerance:
		return x, report(0, r_norm, True)

	best_norm, best_x = r_norm, x.copy()
	z = apply_preconditioner(r)
	p = z.copy()
	rz = float(r @ z)

	for k in range(1, maxit + 1):
		Ap = A.spmv(p)
		curvature = float(p @ Ap)
		if not curvature > 0.0:
			raise IndefiniteBreakdown(k, curvature)

		alpha = rz / curvature
		x += alpha * p
		r -= alpha * Ap
		r_norm = float(np.linalg.norm(r))

		if r_norm <= tolerance:
			true_r = b - A.spmv(x)
			true_norm = float(np.linalg.norm(true_r))
			if true_norm <= tolerance:
				logger.debug(f'CG converged in {k} iterations, residual {true_norm:.3e}.')
				return x, report(k, true_norm, True)
			logger.debug(f'CG residual drifted to {true_norm:.3e} at iteration {k}; restarting.')
			r, r_norm = true_r, true_norm
			z = apply_preconditioner(r)
			p = z.copy()
			rz = float(r @ z)
		else:
			z = apply_preconditioner(r)
			rz_next = float(r @ z)
			p = z + (rz_next / rz) * p
			rz = rz_next

		if r_norm < best_norm:
			best_norm, best_x = r_norm, x.copy()

	true_norm = float(np.linalg.norm(b - A.spmv(best_x)))
	logger.warning(f'CG stopped after {maxit} iterations, residual {true_norm:.3e}.')
	return best_x, report(maxit, true_norm, False)
