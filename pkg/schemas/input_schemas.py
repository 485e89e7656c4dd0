from pydantic import (
	BaseModel,
	Field,
	field_validator,
	model_validator
)
from typing import Optional

from .enums import Preconditioner


########################################################################################################################
# COMMON VALiDATORS
########################################################################################################################
def is_ascending(n_list):
	assert all(a < b for a, b in zip(n_list, n_list[1:])), 'n_list must be strictly ascending'
	return n_list


########################################################################################################################
# LOW LEVEL STRUCTURES
########################################################################################################################
class SolverParams(BaseModel):
	ksp_rtol: float = Field(
		default=1e-8,
		gt=0.0,
		lt=1.0,
		description='Residual tolerance relative to the Euclidean norm of the right-hand side.',
		examples=[1e-8]
	)
	ksp_atol: float = Field(
		default=1e-14,
		ge=0.0,
		description='Absolute residual tolerance.',
		examples=[1e-14]
	)
	ksp_max_it: Optional[int] = Field(
		default=None,
		gt=0,
		description='Iteration limit. <br />'
					'If not provided, 10 times the number of degrees of freedom is used.',
		examples=[1000]
	)
	pc_type: Preconditioner = Field(
		default=Preconditioner.jacobi,
		description='Preconditioner applied by CG. Two options are provided:\n - none\n - jacobi',
		examples=['jacobi']
	)


class RunParams(BaseModel):
	threads: Optional[int] = Field(
		default=None,
		ge=1,
		le=64,
		description='Worker threads for the parallel loops. <br />'
					'If not provided, the BENCH_THREADS setting is used. Results do not depend on this value.',
		examples=[1]
	)
	repeats: int = Field(
		default=3,
		ge=1,
		description='Timed repetitions per case, after one untimed warm-up run. The minimum is reported.',
		examples=[3]
	)


########################################################################################################################
# FUNCTION INPUT SCHEMAS
########################################################################################################################
class PoissonParams(RunParams):
	dim: int = Field(
		default=2,
		ge=2,
		le=3,
		description='Geometric dimension. <br />'
					'2: manufactured solution sin(pi x) sin(pi y) on the unit square. <br />'
					'3: solution cos(4 pi x) sin(4 pi y) cos(4 pi z) on the unit cube.',
		examples=[2]
	)
	degree: int = Field(
		default=1,
		ge=1,
		le=2,
		description='Lagrange element degree.',
		examples=[1]
	)
	n_list: list[int] = Field(
		default=[8, 16, 32],
		min_length=1,
		description='Subdivisions per side of the successive meshes, in ascending order.',
		examples=[[8, 16, 32]]
	)
	solver: SolverParams = Field(
		default_factory=SolverParams,
		description='Solver parameters.'
	)

	@field_validator('n_list')
	def n_list_is_ascending(cls, n_list):
		assert all(n >= 1 for n in n_list), 'every n must be positive'
		return is_ascending(n_list)


class WaveParams(RunParams):
	n: int = Field(
		default=32,
		ge=1,
		description='Subdivisions per side of the unit square.',
		examples=[32]
	)
	dt: float = Field(
		default=1e-3,
		gt=0.0,
		description='Time step.',
		examples=[1e-3]
	)
	T: float = Field(
		default=1.0,
		gt=0.0,
		description='Final time.',
		examples=[1.0]
	)
	forcing_end: Optional[float] = Field(
		default=None,
		ge=0.0,
		description='Time after which the boundary forcing p = sin(10 pi t) is switched off. <br />'
					'If not provided, half of the final time is used.',
		examples=[0.5]
	)
	amplitude: float = Field(
		default=1.0,
		description='Amplitude of the boundary forcing. Zero gives the zero-data run.',
		examples=[1.0]
	)
	repeats: int = Field(
		default=1,
		ge=1,
		description='Timed repetitions, after one untimed warm-up run. The minimum is reported.',
		examples=[1]
	)

	@model_validator(mode='after')
	def dt_not_greater_than_final_time(self):
		assert self.dt <= self.T, 'dt > T'
		if self.forcing_end is None:
			self.forcing_end = self.T / 2
		return self


class MixedParams(RunParams):
	n: int = Field(
		default=2,
		ge=1,
		description='Subdivisions per side of the unit square.',
		examples=[2]
	)
	seed: Optional[int] = Field(
		default=None,
		ge=0,
		description='Seed of the random vector used to compare the block and flattened products. <br />'
					'If not provided, the BENCH_SEED setting is used.',
		examples=[2]
	)
