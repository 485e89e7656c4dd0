class KernelError(Exception):
	"""
	Base class for errors raised while building, transforming or running kernels.
	"""


class ShapeMismatch(KernelError, ValueError):
	pass


class UnboundIdentifier(KernelError, ValueError):
	pass


class NonDividingFactor(KernelError, ValueError):
	def __init__(self, loop_var: str, trip: int, factor: int):
		super().__init__(f'unroll factor {factor} does not divide the {trip} iterations of loop {loop_var!r}')
		self.loop_var = loop_var
		self.trip = trip
		self.factor = factor


class InvalidVectorWidth(KernelError, ValueError):
	pass
