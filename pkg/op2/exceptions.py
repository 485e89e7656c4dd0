class Op2Error(Exception):
	"""
	Base class for errors raised by the parallel loop layer.
	"""


class IndexOutOfRange(Op2Error, ValueError):
	pass


class ArityMismatch(Op2Error, ValueError):
	pass


class SourceMismatch(Op2Error, ValueError):
	pass


class AsymmetricAdjacency(Op2Error, ValueError):
	pass


class OutsideSparsity(Op2Error, ValueError):
	def __init__(self, row: int, col: int):
		super().__init__(f'entry ({row}, {col}) lies outside the sparsity pattern')
		self.row = row
		self.col = col


class EmptyPartials(Op2Error, ValueError):
	pass


class DimensionMismatch(Op2Error, ValueError):
	pass


class IllegalAccess(Op2Error, ValueError):
	pass


class MapSourceMismatch(Op2Error, ValueError):
	pass


class InvalidThreadCount(Op2Error, ValueError):
	def __init__(self, threads):
		super().__init__(f'threads must be a positive integer, got {threads!r}')
		self.threads = threads
