import os

from dotenv import dotenv_values
from functools import lru_cache
from pydantic import (
	BaseModel,
	Field,
	field_validator
)


class BenchSettings(BaseModel):
	seed: int = Field(
		default=2,
		ge=0,
		description='Seed of every random draw made by the benchmarks (BENCH_SEED).'
	)
	threads: int = Field(
		default=1,
		ge=1,
		description='Default worker count of the parallel loops (BENCH_THREADS).'
	)
	log_level: str = Field(
		default='INFO',
		description='Console log level (BENCH_LOG_LEVEL).'
	)
	db_path: str = Field(
		default='files/orders.db',
		description='SQLite file holding the API orders and reports (BENCH_DB_PATH).'
	)
	host: str = Field(
		default='127.0.0.1',
		description='Address the API binds to (BENCH_HOST).'
	)
	port: int = Field(
		default=8000,
		gt=0,
		lt=65536,
		description='Port the API listens on (BENCH_PORT).'
	)

	@field_validator('log_level')
	def is_known_level(cls, level):
		level = level.upper()
		assert level in ('TRACE', 'DEBUG', 'INFO', 'SUCCESS', 'WARNING', 'ERROR', 'CRITICAL'), \
			f'unknown log level {level}'
		return level


ENV_PREFIX = 'BENCH_'


def load_settings(env_file: str = '.env') -> BenchSettings:
	"""
	Read the BENCH_* variables from the .env file, overlaid by the process environment.
	:param env_file: path of the .env file; a missing file is ignored
	:return: validated settings
	"""
	# load environment variables
	config = {**dotenv_values(env_file), **os.environ}
	values = {key[len(ENV_PREFIX):].lower(): value for key, value in config.items()
			  if key.startswith(ENV_PREFIX) and value not in (None, '')}

	return BenchSettings(**values)


@lru_cache(maxsize=1)
def get_settings() -> BenchSettings:
	return load_settings()
