from pydantic import (
	BaseModel,
	Field
)
from typing import Optional

from .enums import (
	BenchCase,
	ConvergedReason
)


# IMMEDIATE RESPONSE ###################################################################################################
class AcceptedResponse(BaseModel):
	message: str = Field(
		examples=['Processing has started. Use the order ID for status updates.']
	)
	order_id: str = Field(
		description='Order identifier for the request. <br />'
		            'Reports can only be retrieved via REST API by specifying this identifier.',
		examples=['iaMiULXA9BktPUu2b_PwTtycCSNe0_wYpPt9muwlEtgL49GDg-kggSktAjtu']
	)


# NON-OK RESPONSES #####################################################################################################
class OrderNotFound(BaseModel):
	message: str = Field(
		examples=['Order not found.']
	)
	order_id: str = Field(
		description='Order identifier for the request.',
		examples=['iaMiULXA9BktPUu2b_PwTtycCSNe0_wYpPt9muwlEtgL49GDg-kggSktAjtu']
	)


class OrderNotProcessed(BaseModel):
	message: str = Field(
		examples=['Order found, but not yet processed. Please try again later.']
	)
	order_id: str = Field(
		description='Order identifier for the request.',
		examples=['iaMiULXA9BktPUu2b_PwTtycCSNe0_wYpPt9muwlEtgL49GDg-kggSktAjtu']
	)


class RunFailed(BaseModel):
	message: str = Field(
		examples=['The benchmark run failed.']
	)
	error: str = Field(
		description='Name of the error raised by the run.',
		examples=['NonConvergence']
	)
	detail: str = Field(
		description='Error message.',
		examples=['CG stopped after 2890 iterations with residual 1.2e-05']
	)
	order_id: str = Field(
		description='Order identifier for the request.',
		examples=['iaMiULXA9BktPUu2b_PwTtycCSNe0_wYpPt9muwlEtgL49GDg-kggSktAjtu']
	)


# SOLVER ###############################################################################################################
class SolveReport(BaseModel):
	iterations: int = Field(
		ge=0,
		description='Number of CG iterations performed.',
		examples=[42]
	)
	final_residual_norm: float = Field(
		ge=0.0,
		description='Euclidean norm of the true residual b - Ax of the returned iterate.',
		examples=[3.1e-9]
	)
	converged: bool = Field(
		description='Whether the residual met the tolerance.'
	)
	reason: ConvergedReason = Field(
		description='Which criterion ended the iteration: the relative tolerance, the absolute tolerance or the '
					'iteration limit.'
	)


# BENCHMARK REPORTS ####################################################################################################
class PhaseTimes(BaseModel):
	assemble_lhs: float = Field(
		default=0.0,
		ge=0.0,
		description='Wall time spent assembling the operator, in seconds.'
	)
	assemble_rhs: float = Field(
		default=0.0,
		ge=0.0,
		description='Wall time spent assembling right-hand sides, in seconds.'
	)
	solve: float = Field(
		default=0.0,
		ge=0.0,
		description='Wall time spent in the linear solver or the time loop, in seconds.'
	)
	total: float = Field(
		default=0.0,
		ge=0.0,
		description='Wall time of the whole case, in seconds.'
	)


class WaveDiagnostics(BaseModel):
	steps: int = Field(
		ge=0,
		description='Number of time steps taken.'
	)
	energy_times: list[float] = Field(
		description='Times at which the discrete energy was recorded.'
	)
	energies: list[float] = Field(
		description='Discrete energy 1/2 p.M_L p + 1/2 phi.K phi at the recorded times.'
	)
	energy_band_ratio: Optional[float] = Field(
		default=None,
		description='Maximum over minimum of the energy across the final half of the run.'
	)
	max_p: float = Field(
		ge=0.0,
		description='Largest absolute value of p reached during the run.'
	)
	first_period_max_p: float = Field(
		ge=0.0,
		description='Largest absolute value of p during the first forcing period.'
	)
	final_p_norm: float = Field(
		ge=0.0,
		description='L2 norm of p at the final time.'
	)
	final_phi_norm: float = Field(
		ge=0.0,
		description='L2 norm of phi at the final time.'
	)


class RunReport(BaseModel):
	case: BenchCase = Field(
		description='Benchmark case.'
	)
	n: int = Field(
		ge=1,
		description='Subdivisions per side of the generated mesh.',
		examples=[16]
	)
	dofs: int = Field(
		ge=0,
		description='Number of degrees of freedom.',
		examples=[289]
	)
	degree: int = Field(
		ge=1,
		le=2,
		description='Lagrange element degree.',
		examples=[1]
	)
	dim: int = Field(
		default=2,
		ge=2,
		le=3,
		description='Geometric dimension of the mesh.'
	)
	threads: int = Field(
		default=1,
		ge=1,
		description='Worker threads used by parallel loops.'
	)
	times: PhaseTimes = Field(
		default_factory=PhaseTimes,
		description='Minimum wall times over the timed repetitions.'
	)
	l2_error: Optional[float] = Field(
		default=None,
		description='L2 norm of the difference to the analytic solution.'
	)
	iterations: Optional[int] = Field(
		default=None,
		description='Solver iterations.'
	)
	converged: Optional[bool] = Field(
		default=None,
		description='Whether the solver converged.'
	)
	rate: Optional[float] = Field(
		default=None,
		description='Observed convergence rate against the previous, coarser report of the same run.'
	)
	oracle_discrepancy: Optional[float] = Field(
		default=None,
		description='Largest difference between the CG solution and a dense direct solve.'
	)
	wave: Optional[WaveDiagnostics] = Field(
		default=None,
		description='Diagnostics of wave runs.'
	)
	mixed_discrepancy: Optional[float] = Field(
		default=None,
		description='Largest elementwise difference between blockwise and monolithic mixed assembly.'
	)
	spmv_bitwise: Optional[bool] = Field(
		default=None,
		description='Whether the block product equals the flattened product bit for bit.'
	)
	error: Optional[str] = Field(
		default=None,
		description='Error recorded by the run, if any.'
	)
	accepted: bool = Field(
		default=True,
		description='Whether the report meets its acceptance band.'
	)


class ReportsResponse(BaseModel):
	order_id: str = Field(
		description='Order identifier for the request.',
		examples=['iaMiULXA9BktPUu2b_PwTtycCSNe0_wYpPt9muwlEtgL49GDg-kggSktAjtu']
	)
	reports: list[RunReport] = Field(
		description='Reports produced by the run, one per mesh size.'
	)
