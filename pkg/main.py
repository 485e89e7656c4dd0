import threading
import warnings

from fastapi import (
	FastAPI,
	status
)
from fastapi.responses import JSONResponse
from loguru import logger

from helpers.database_interactions import connect_to_sqlite_db
from helpers.log_setting import (
	remove_logfile_handler,
	set_logfile_handler,
	set_stdout_logger
)
from helpers.main_helpers import (
	fetch_order,
	generate_order_id,
	register_order,
	reports_return_structure
)
from helpers.settings import get_settings
from op2.parloop import configure
from schemas.enums import BenchCase
from schemas.input_schemas import (
	MixedParams,
	PoissonParams,
	WaveParams
)
from schemas.output_schemas import (
	AcceptedResponse,
	OrderNotFound,
	OrderNotProcessed,
	ReportsResponse,
	RunFailed
)
from threads.bench_thread import run_bench_thread


# Silence deprecation warning for startup and shutdown events
warnings.filterwarnings("ignore", category=DeprecationWarning)

# Initialize the app
app = FastAPI(
	title='Finite element benchmark API',
	description='A REST API running the finite element benchmarks of the toolchain in the background: '
				'a manufactured Poisson convergence study, an explicit wave equation with a lumped mass and a '
				'check of blockwise against monolithic mixed assembly. Every request returns an order ID; the '
				'run reports are fetched with it once the run is over.',
	version='0.1.0'
)

# Set up logging
settings = get_settings()
set_stdout_logger(settings.log_level)
configure(settings.threads)


# Runs when the API is started: set loggers and create / connect to SQLite database ####################################
@app.on_event('startup')
def startup_event():
	app.state.handler = set_logfile_handler('logs')

	# Get cursor and connection to SQLite database
	app.state.conn, app.state.cursor = connect_to_sqlite_db(get_settings().db_path)


# Runs when the API is closed: remove logger handlers and disconnect SQLite database
@app.on_event('shutdown')
def shutdown_event():
	# Remove all handlers associated with the logger object
	remove_logfile_handler(app.state.handler)

	# Get cursor and connection to SQLite database
	app.state.conn.close()


def launch(case: BenchCase, user_params) -> JSONResponse:
	# generate an order ID for the user to fetch the results when ready
	logger.info('Generating unique order ID.')
	id_order = generate_order_id()

	# update the database with the new order ID
	logger.info('Creating registry in database for new order ID.')
	register_order(app.state.conn, id_order, case.value)

	# initiate a parallel process (thread) to run the benchmark
	# while a message is immediately sent to the user
	logger.info('Launching thread.')
	threading.Thread(target=run_bench_thread, args=(case, user_params, id_order, app.state.conn)).start()

	logger.info('Returning confirmation message with order ID.')
	return JSONResponse(content={'message': 'Processing has started. Use the order ID for status updates.',
								 'order_id': id_order},
						status_code=status.HTTP_202_ACCEPTED)


# BENCHMARK ENDPOINTS ##################################################################################################
@app.post('/poisson',
		  description='Solve the manufactured Poisson problem on a sequence of refined meshes and report the L2 '
					  'errors, the observed convergence rates and the solver iterations. <br />'
					  'In 2D the solution is sin(pi x) sin(pi y) on the unit square; in 3D it is '
					  'cos(4 pi x) sin(4 pi y) cos(4 pi z) on the unit cube.',
		  status_code=status.HTTP_202_ACCEPTED,
		  tags=['Run benchmarks'])
def poisson(user_params: PoissonParams) -> AcceptedResponse:
	return launch(BenchCase.poisson, user_params)


@app.post('/wave',
		  description='Integrate the linear wave equation with an explicit symplectic scheme and a lumped mass, '
					  'forced by p = sin(10 pi t) on the x = 0 side, and report the energy history.',
		  status_code=status.HTTP_202_ACCEPTED,
		  tags=['Run benchmarks'])
def wave(user_params: WaveParams) -> AcceptedResponse:
	return launch(BenchCase.wave, user_params)


@app.post('/mixed',
		  description='Assemble a two-field mass system block by block and in a single loop, and report the '
					  'largest discrepancy between the two.',
		  status_code=status.HTTP_202_ACCEPTED,
		  tags=['Run benchmarks'])
def mixed(user_params: MixedParams) -> AcceptedResponse:
	return launch(BenchCase.mixed, user_params)


@app.get('/reports/{order_id}',
		 description='An endpoint for fetching the reports of a benchmark run, given the order ID.',
		 responses={
			 202: {'model': OrderNotProcessed, 'description': 'Order found but not yet processed.'},
			 404: {'model': OrderNotFound, 'description': 'Order not found.'},
			 422: {'model': RunFailed, 'description': 'The run raised an error.'}
		 },
		 status_code=status.HTTP_200_OK,
		 tags=['Retrieve reports'])
def reports(order_id: str) -> ReportsResponse:
	# Check if the order_id exists in the database
	logger.info('Searching for order ID in local database.')
	order = fetch_order(app.state.conn, order_id)

	if order is None:
		# If the order is not found, return 404 Not Found
		return JSONResponse(content={'message': 'Order not found.',
									 'order_id': order_id},
							status_code=status.HTTP_404_NOT_FOUND)

	logger.info('Order ID found. Checking if order has already been processed.')
	processed = bool(order[1])
	error = order[2]
	message = order[3]

	if not processed:
		# If the order is found but not processed, return 202 Accepted
		return JSONResponse(content={'message': 'Order found but not yet processed.',
									 'order_id': order_id},
							status_code=status.HTTP_202_ACCEPTED)

	if error:
		# If the run raised an error, return it
		return JSONResponse(content={'message': 'The benchmark run failed.',
									 'error': error,
									 'detail': message,
									 'order_id': order_id},
							status_code=status.HTTP_422_UNPROCESSABLE_ENTITY)

	logger.info('Order ID correctly processed. Fetching outputs.')
	return JSONResponse(content={'order_id': order_id,
								 'reports': reports_return_structure(app.state.conn, order_id)},
						status_code=status.HTTP_200_OK)


if __name__ == '__main__':
	import uvicorn

	uvicorn.run(app, host=settings.host, port=settings.port)
