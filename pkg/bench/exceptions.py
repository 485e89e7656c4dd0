class BenchError(Exception):
	"""
	Base class for errors raised by the benchmark harness.
	"""


class InstabilityDetected(BenchError, ArithmeticError):
	def __init__(self, step: int, time: float, max_p: float, first_period_max_p: float):
		super().__init__(f'|p| reached {max_p:.3e} at step {step} (t = {time:.4f}), more than 1000 times its '
						 f'first-period maximum {first_period_max_p:.3e}')
		self.step = step
		self.time = time
		self.max_p = max_p
		self.first_period_max_p = first_period_max_p
