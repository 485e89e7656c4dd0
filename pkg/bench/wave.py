import math
import numpy as np

from loguru import logger
from typing import Optional

from bench.exceptions import InstabilityDetected
from bench.timing import (
	PhaseTimer,
	best_of
)
from fem.assembly import assemble
from fem.bcs import DirichletBC
from fem.form import (
	stiffness,
	stiffness_action
)
from fem.function import (
	Constant,
	Function
)
from fem.functionspace import FunctionSpace
from fem.mesh import (
	Mesh,
	unit_square_mesh
)
from fem.norms import norm
from op2.parloop import default_threads
from schemas.enums import BenchCase
from schemas.input_schemas import WaveParams
from schemas.output_schemas import (
	PhaseTimes,
	RunReport,
	WaveDiagnostics
)
from solver.lumped import lumped_mass


FORCING_FREQUENCY = 5.0
FORCING_MARKER = 1
INSTABILITY_FACTOR = 1e3
ENERGY_BAND = 1.5
RECORD_EVERY = 10
LOG_EVERY = 100


def forcing(t: float, amplitude: float, forcing_end: float) -> float:
	return amplitude * math.sin(2 * math.pi * FORCING_FREQUENCY * t) if t < forcing_end else 0.0


def discrete_energy(p: Function, phi: Function, lumped: Function, K) -> float:
	"""
	1/2 p.M_L p + 1/2 phi.K phi with the lumped mass M_L.
	"""
	p_values, phi_values = p.dat.data_ro, phi.dat.data_ro
	return 0.5 * float(p_values @ (lumped.dat.data_ro * p_values)) + 0.5 * float(phi_values @ K.spmv(phi_values))


def simulate_wave(mesh: Mesh, dt: float, T: float, forcing_end: Optional[float] = None, amplitude: float = 1.0,
				  threads: Optional[int] = None, record_every: int = RECORD_EVERY) -> tuple[dict, PhaseTimes]:
	"""
	Explicit symplectic time stepping of the wave equation written as phi_t = -p, p_t = -laplacian(phi), with p
	and phi offset by half a step and the mass matrix of the p update lumped, so that every update is pointwise
	apart from the assembly of the stiffness action. p = amplitude * sin(10 pi t) is imposed on the facets with
	marker 1 until `forcing_end`, and p = 0 after it.
	:param mesh: triangle mesh
	:param dt: time step
	:param T: final time
	:param forcing_end: time the boundary forcing stops, T/2 when omitted
	:param amplitude: forcing amplitude
	:param threads: worker count for the assembly loops
	:param record_every: steps between two energy records
	:return: a dict with the final fields p and phi and the diagnostics, and the phase times
	"""
	forcing_end = T / 2 if forcing_end is None else forcing_end
	timer = PhaseTimer()

	V = FunctionSpace(mesh, 1)
	p = Function(V, name='p')
	phi = Function(V, name='phi')
	p_in = Constant(0.0, name='p_in')
	bc = DirichletBC(V, p_in, FORCING_MARKER)

	with timer.phase('assemble_lhs'):
		lumped = Function(V, dat=lumped_mass(V, threads=threads), name='lumped_mass')
		p_constant = Function(V, name='p_constant').assign(dt / lumped)
		K = assemble(stiffness(V), threads=threads)

	phi_update = dt / 2 * p
	p_form = stiffness_action(V, phi)
	p_rhs = Function(V, name='p_rhs')

	steps = int(round(T / dt))
	first_period = 1.0 / FORCING_FREQUENCY
	energy_times, energies = [0.0], [0.0]
	max_p, first_period_max_p = 0.0, 0.0

	with timer.phase('solve'):
		for step in range(steps):
			t = step * dt
			p_in.assign(forcing(t, amplitude, forcing_end))

			phi -= phi_update
			with timer.phase('assemble_rhs'):
				assemble(p_form, tensor=p_rhs, threads=threads)
			p += p_rhs * p_constant
			bc.apply(p)
			phi -= phi_update

			t_next = (step + 1) * dt
			p_max = float(np.max(np.abs(p.dat.data_ro))) if V.node_count else 0.0
			if not math.isfinite(p_max):
				raise InstabilityDetected(step + 1, t_next, p_max, first_period_max_p)
			max_p = max(max_p, p_max)
			if t_next <= first_period + 0.5 * dt:
				first_period_max_p = max(first_period_max_p, p_max)
			elif p_max > INSTABILITY_FACTOR * first_period_max_p and p_max > 0.0:
				raise InstabilityDetected(step + 1, t_next, p_max, first_period_max_p)

			if (step + 1) % record_every == 0 or step + 1 == steps:
				energy_times.append(t_next)
				energies.append(discrete_energy(p, phi, lumped, K))
			if (step + 1) % LOG_EVERY == 0:
				logger.info(f't = {t_next:.3f}: |p| = {norm(p, threads):.4e}, |phi| = {norm(phi, threads):.4e}.')

	diagnostics = WaveDiagnostics(steps=steps, energy_times=energy_times, energies=energies,
								  energy_band_ratio=energy_band_ratio(energy_times, energies, max(forcing_end, T / 2)),
								  max_p=max_p, first_period_max_p=first_period_max_p,
								  final_p_norm=norm(p, threads), final_phi_norm=norm(phi, threads))
	return {'space': V, 'p': p, 'phi': phi, 'diagnostics': diagnostics}, timer.stop()


def energy_band_ratio(times: list[float], energies: list[float], start: float) -> Optional[float]:
	"""
	Maximum over minimum of the energies recorded from `start` on; None when there is nothing to compare.
	"""
	window = [e for t, e in zip(times, energies) if t >= start]
	if len(window) < 2 or min(window) <= 0.0:
		return None
	return max(window) / min(window)


def run_wave(params: WaveParams) -> RunReport:
	"""
	Run the wave scheme on unit_square_mesh(n) and report the energy band and field norms. An instability is
	recorded in the report instead of being raised.
	"""
	threads = params.threads or default_threads()
	logger.info(f'Wave on a {params.n}x{params.n} square, dt = {params.dt}, T = {params.T}.')
	mesh = unit_square_mesh(params.n)
	report = RunReport(case=BenchCase.wave, n=params.n, dofs=0, degree=1, dim=2, threads=threads)

	try:
		result, times = best_of(lambda: simulate_wave(mesh, params.dt, params.T, params.forcing_end,
													  params.amplitude, threads), repeats=params.repeats)
	except InstabilityDetected as error:
		logger.warning(str(error))
		report.error = f'{type(error).__name__}: {error}'
		report.accepted = False
		return report

	diagnostics = result['diagnostics']
	report.dofs = result['space'].dof_count
	report.times = times
	report.wave = diagnostics
	ratio = diagnostics.energy_band_ratio
	if ratio is None:
		report.accepted = params.amplitude == 0.0 and diagnostics.max_p == 0.0
	else:
		report.accepted = ratio < ENERGY_BAND
	logger.info(f'Wave finished: energy band ratio {ratio}, max |p| {diagnostics.max_p:.3e}.')
	return report
