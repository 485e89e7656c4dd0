class FemError(Exception):
	"""
	Base class for errors raised by meshes, spaces, forms and boundary conditions.
	"""


class InvalidSubdivision(FemError, ValueError):
	pass


class ParseError(FemError, ValueError):
	def __init__(self, line: int, message: str):
		super().__init__(f'line {line}: {message}')
		self.line = line


class NonManifold(FemError, ValueError):
	pass


class CellMismatch(FemError, ValueError):
	pass


class UnsupportedForm(FemError, ValueError):
	pass


class UnsupportedElement(FemError, ValueError):
	pass


class MissingDiagonal(FemError, ValueError):
	pass


class SpaceMismatch(FemError, ValueError):
	pass
