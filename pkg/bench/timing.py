import time

from contextlib import contextmanager
from loguru import logger
from typing import (
	Callable,
	TypeVar
)

from schemas.output_schemas import PhaseTimes


T = TypeVar('T')


class PhaseTimer:
	"""
	Accumulates wall time per phase of one run.
	"""
	def __init__(self):
		self.times = PhaseTimes()
		self._start = time.perf_counter()

	@contextmanager
	def phase(self, name: str):
		start = time.perf_counter()
		try:
			yield
		finally:
			setattr(self.times, name, getattr(self.times, name) + time.perf_counter() - start)

	def stop(self) -> PhaseTimes:
		self.times.total = time.perf_counter() - self._start
		return self.times


def best_of(run: Callable[[], tuple[T, PhaseTimes]], repeats: int = 3, warmup: bool = True) -> tuple[T, PhaseTimes]:
	"""
	Run a case once untimed, then `repeats` times, and keep the minimum of every phase time. The result of the
	last run is returned; runs are deterministic, so any run would do.
	:param run: callable returning its result and its phase times
	:param repeats: timed runs
	:param warmup: whether to make the untimed first run
	:return: the result and the minimum phase times
	"""
	if warmup:
		run()

	result, samples = None, []
	for _ in range(max(repeats, 1)):
		result, times = run()
		samples.append(times)

	best = PhaseTimes(**{name: min(getattr(t, name) for t in samples) for name in PhaseTimes.model_fields})
	logger.debug(f'Best of {len(samples)} runs: {best.total:.3f} s.')
	return result, best
