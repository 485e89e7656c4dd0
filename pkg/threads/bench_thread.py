import sqlite3

from loguru import logger
from typing import Union

from bench.mixed import run_mixed_check
from bench.poisson import run_poisson
from bench.wave import run_wave
from helpers.main_helpers import (
	store_failure,
	store_reports
)
from schemas.enums import BenchCase
from schemas.input_schemas import (
	MixedParams,
	PoissonParams,
	WaveParams
)


def run_bench_thread(case: BenchCase,
					 user_params: Union[PoissonParams, WaveParams, MixedParams],
					 id_order: str,
					 conn: sqlite3.Connection):
	# run the requested benchmark case
	logger.info(f'Running {case.value} case for order {id_order[:8]}.')
	try:
		if case == BenchCase.poisson:
			reports = run_poisson(user_params)
		elif case == BenchCase.wave:
			reports = [run_wave(user_params)]
		else:
			reports = [run_mixed_check(user_params)]

	# any error ends the order; it is stored so that the client gets it when fetching the reports
	except Exception as error:
		logger.exception(f'Order {id_order[:8]} failed.')
		store_failure(conn, id_order, error)
		return

	# update the database with the reports
	logger.info('Updating database with results.')
	store_reports(conn, id_order, reports)

	logger.info('Finished!')
