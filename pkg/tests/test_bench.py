import json
import math
import pytest

from pydantic import ValidationError

from bench.__main__ import (
	initial_condition_check,
	main
)
from bench.exceptions import InstabilityDetected
from bench.mixed import (
	DISCREPANCY_TOLERANCE,
	compare_mixed,
	run_mixed_check
)
from bench.poisson import (
	ORACLE_TOLERANCE,
	dirichlet_markers,
	observed_rate,
	reordered_discrepancy,
	run_poisson,
	solve_poisson
)
from bench.reports import (
	read_json,
	reports_frame,
	summary,
	write_csv,
	write_json
)
from bench.timing import (
	PhaseTimer,
	best_of
)
from bench.wave import (
	ENERGY_BAND,
	FORCING_MARKER,
	energy_band_ratio,
	forcing,
	run_wave,
	simulate_wave
)
from fem.mesh import (
	unit_cube_mesh,
	unit_square_mesh
)
from helpers.settings import load_settings
from schemas.enums import BenchCase
from schemas.input_schemas import (
	MixedParams,
	PoissonParams,
	WaveParams
)
from schemas.output_schemas import (
	PhaseTimes,
	RunReport
)


# POISSON ##############################################################################################################
def test_poisson_p1_converges_at_second_order():
	reports = run_poisson(PoissonParams(dim=2, degree=1, n_list=[4, 8], repeats=1, threads=1))

	assert [r.n for r in reports] == [4, 8]
	assert all(r.converged for r in reports)
	assert reports[0].oracle_discrepancy is not None
	assert reports[0].oracle_discrepancy <= ORACLE_TOLERANCE
	assert reports[1].oracle_discrepancy is None
	assert reports[0].rate is None
	assert reports[1].l2_error < reports[0].l2_error
	assert abs(reports[1].rate - 2.0) < 0.3


def test_poisson_p2_converges_at_third_order():
	reports = run_poisson(PoissonParams(dim=2, degree=2, n_list=[4, 8], repeats=1, threads=1))

	assert abs(reports[1].rate - 3.0) < 0.5
	assert all(r.dofs == (2 * r.n + 1) ** 2 for r in reports)


def test_poisson_3d_keeps_dirichlet_faces_at_zero():
	mesh = unit_cube_mesh(2)
	result, times = solve_poisson(mesh, 1, threads=1)

	nodes = result['space'].boundary_nodes(dirichlet_markers(3))
	assert result['solve'].converged
	assert (result['u'].dat.data_ro[nodes] == 0.0).all()
	assert times.total >= times.solve >= 0.0


def test_poisson_rejects_descending_sizes():
	with pytest.raises(ValidationError):
		PoissonParams(n_list=[8, 4])


def test_observed_rate():
	coarse = RunReport(case=BenchCase.poisson, n=4, dofs=25, degree=1, l2_error=4e-2)
	fine = RunReport(case=BenchCase.poisson, n=8, dofs=81, degree=1, l2_error=1e-2)
	assert math.isclose(observed_rate(coarse, fine), 2.0)

	fine.l2_error = None
	assert observed_rate(coarse, fine) is None


def test_reordering_does_not_change_the_solution():
	assert reordered_discrepancy(4) < 1e-10


# WAVE #################################################################################################################
def test_forcing():
	assert math.isclose(forcing(0.05, 2.0, 0.5), 2.0)
	assert forcing(0.0, 1.0, 0.5) == 0.0
	assert forcing(0.6, 1.0, 0.5) == 0.0


def test_energy_band_ratio():
	assert energy_band_ratio([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 1.0], 1.0) == 2.0
	assert energy_band_ratio([0.0, 1.0], [1.0, 1.0], 1.0) is None
	assert energy_band_ratio([0.0, 1.0, 2.0], [0.0, 0.0, 1.0], 1.0) is None


def test_zero_data_wave_stays_zero():
	result, _ = simulate_wave(unit_square_mesh(4), dt=1e-3, T=0.05, amplitude=0.0)

	assert (result['p'].dat.data_ro == 0.0).all()
	assert (result['phi'].dat.data_ro == 0.0).all()

	report = run_wave(WaveParams(n=4, dt=1e-3, T=0.05, amplitude=0.0, threads=1))
	assert report.wave.energy_band_ratio is None
	assert report.wave.max_p == 0.0
	assert report.accepted


def test_forced_wave_conserves_energy_after_forcing():
	result, _ = simulate_wave(unit_square_mesh(16), dt=1e-3, T=0.4, threads=1)
	diagnostics = result['diagnostics']

	assert diagnostics.steps == 400
	assert diagnostics.max_p > 0.0
	assert all(e >= 0.0 for e in diagnostics.energies)
	assert diagnostics.energy_band_ratio is not None
	assert diagnostics.energy_band_ratio < ENERGY_BAND

	# p = 0 is imposed on the forced side once the forcing is off
	nodes = result['space'].boundary_nodes((FORCING_MARKER,))
	assert (result['p'].dat.data_ro[nodes] == 0.0).all()


def test_wave_instability_is_detected():
	with pytest.raises(InstabilityDetected):
		simulate_wave(unit_square_mesh(16), dt=0.1, T=2.0, threads=1)

	report = run_wave(WaveParams(n=16, dt=0.1, T=2.0, threads=1))
	assert not report.accepted
	assert report.error.startswith('InstabilityDetected')


def test_wave_time_step_must_not_exceed_final_time():
	with pytest.raises(ValidationError):
		WaveParams(dt=2.0, T=1.0)
	assert WaveParams(T=0.8).forcing_end == 0.4


# MIXED ################################################################################################################
@pytest.mark.parametrize('n', [1, 2])
def test_blockwise_matches_monolithic(n):
	result, _ = compare_mixed(unit_square_mesh(n), seed=2)

	assert result['discrepancy'] <= DISCREPANCY_TOLERANCE
	assert result['bitwise']
	assert result['product_discrepancy'] <= 1e-12


def test_run_mixed_check():
	report = run_mixed_check(MixedParams(n=2, repeats=1, seed=2, threads=1))

	assert report.case == BenchCase.mixed
	assert report.dofs == 9 + 25
	assert report.spmv_bitwise
	assert report.accepted


def test_initial_condition_check():
	assert initial_condition_check(2)


# TIMING AND REPORTS ###################################################################################################
def test_best_of_keeps_the_minimum():
	calls = []
	totals = iter([5.0, 3.0, 1.0, 2.0])

	def run():
		calls.append(1)
		return len(calls), PhaseTimes(total=next(totals))

	result, best = best_of(run, repeats=3)
	assert len(calls) == 4
	assert result == 4
	assert best.total == 1.0


def test_phase_timer_accumulates():
	timer = PhaseTimer()
	with timer.phase('solve'):
		pass
	with timer.phase('solve'):
		pass
	times = timer.stop()
	assert times.total >= times.solve >= 0.0
	assert times.assemble_lhs == 0.0


def test_reports_files(tmp_path):
	reports = [RunReport(case=BenchCase.poisson, n=4, dofs=25, degree=1, l2_error=1e-2),
			   RunReport(case=BenchCase.mixed, n=1, dofs=13, degree=2, mixed_discrepancy=0.0, spmv_bitwise=True)]

	write_json(reports, str(tmp_path / 'out' / 'reports.json'))
	assert read_json(str(tmp_path / 'out' / 'reports.json')) == reports

	write_csv(reports, str(tmp_path / 'reports.csv'))
	assert (tmp_path / 'reports.csv').read_text().count('\n') == 3

	frame = reports_frame(reports)
	assert 'times.total' in frame.columns
	assert 'poisson' in summary(reports) and 'mixed' in summary(reports)


# CLI AND SETTINGS #####################################################################################################
def test_cli_mixed(bench_env, tmp_path):
	out = tmp_path / 'mixed.json'
	assert main(['mixed', '--n', '1', '--repeats', '1', '--out', str(out)]) == 0

	stored = json.loads(out.read_text())
	assert len(stored) == 1
	assert stored[0]['case'] == 'mixed'
	assert stored[0]['accepted']


def test_cli_zero_data_wave(bench_env):
	assert main(['wave', '--n', '4', '--dt', '0.001', '--T', '0.05', '--amplitude', '0', '--repeats', '1']) == 0


def test_cli_rejects_invalid_parameters(bench_env):
	assert main(['poisson', '--n', '8,4']) == 2
	assert main(['wave', '--dt', '2', '--T', '1']) == 2


def test_cli_rejects_malformed_sizes(bench_env):
	with pytest.raises(SystemExit):
		main(['poisson', '--n', 'four'])


def test_settings_from_env_file(tmp_path, monkeypatch):
	for key in ('BENCH_SEED', 'BENCH_THREADS', 'BENCH_LOG_LEVEL'):
		monkeypatch.delenv(key, raising=False)
	env_file = tmp_path / '.env'
	env_file.write_text('BENCH_SEED=7\nBENCH_THREADS=3\nBENCH_LOG_LEVEL=debug\n')

	settings = load_settings(str(env_file))
	assert (settings.seed, settings.threads, settings.log_level) == (7, 3, 'DEBUG')

	monkeypatch.setenv('BENCH_THREADS', '5')
	assert load_settings(str(env_file)).threads == 5


def test_settings_reject_unknown_level(tmp_path, monkeypatch):
	monkeypatch.setenv('BENCH_LOG_LEVEL', 'LOUD')
	with pytest.raises(ValidationError):
		load_settings(str(tmp_path / 'missing.env'))


def test_default_settings_without_env_file(tmp_path, monkeypatch):
	for key in ('BENCH_SEED', 'BENCH_THREADS', 'BENCH_LOG_LEVEL', 'BENCH_DB_PATH'):
		monkeypatch.delenv(key, raising=False)
	settings = load_settings(str(tmp_path / 'missing.env'))
	assert settings.seed == 2
	assert settings.threads == 1
