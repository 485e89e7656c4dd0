from enum import Enum


class Access(str, Enum):
	read = 'READ'
	write = 'WRITE'
	rw = 'RW'
	inc = 'INC'
	sum = 'SUM'
	min = 'MIN'
	max = 'MAX'


class CellType(str, Enum):
	interval = 'interval'
	triangle = 'triangle'
	tetrahedron = 'tetrahedron'


class FormKind(str, Enum):
	mass = 'mass'
	stiffness = 'stiffness'
	helmholtz = 'helmholtz'
	source = 'source'
	facet_source = 'facet_source'
	stiffness_action = 'stiffness_action'
	mixed = 'mixed'


class IterationRegion(str, Enum):
	nodes = 'nodes'
	cells = 'cells'


class Preconditioner(str, Enum):
	none = 'none'
	jacobi = 'jacobi'


class ConvergedReason(str, Enum):
	rtol = 'rtol'
	atol = 'atol'
	maxit = 'maxit'


class BenchCase(str, Enum):
	poisson = 'poisson'
	wave = 'wave'
	mixed = 'mixed'
