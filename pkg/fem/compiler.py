import numpy as np

from functools import lru_cache
from loguru import logger
from typing import Optional

from fem.element import (
	FACET_CELL,
	lagrange_element,
	tabulate
)
from fem.exceptions import UnsupportedForm
from fem.form import (
	BILINEAR,
	Form
)
from fem.quadrature import (
	QuadratureRule,
	make_quadrature
)
from kernel_ir.ast import (
	Assign,
	Const,
	Decl,
	Expr,
	For,
	Increment,
	KernelAst,
	Param,
	Var,
	fmax,
	idx,
	sqrt
)
from schemas.enums import (
	CellType,
	FormKind
)


CELL_OF_DIMENSION = {2: CellType.triangle, 3: CellType.tetrahedron}

# catalogue kinds a monolithic mixed kernel can hold
MONOLITHIC_KINDS = frozenset({FormKind.mass, FormKind.stiffness, FormKind.helmholtz})


def quadrature_degree(kind: FormKind, test_degree: int, other_degree: Optional[int] = None) -> int:
	"""
	Degree of the quadrature rule for a catalogue integrand. `other_degree` is the trial degree for bilinear forms
	and the coefficient degree for linear ones.
	"""
	other = test_degree if other_degree is None else other_degree
	if kind in (FormKind.stiffness, FormKind.stiffness_action):
		return max(test_degree + other - 2, 1)
	return test_degree + other


def _total(terms: list[Expr]) -> Expr:
	result = terms[0]
	for term in terms[1:]:
		result = result + term
	return result


########################################################################################################################
# KERNEL BUILDER
########################################################################################################################
class KernelBuilder:
	"""
	Accumulates the statements of a local kernel: constant tables first, then geometry, then the integrand loops.
	"""
	def __init__(self, gdim: int):
		self.gdim = gdim
		self.tables: list[Decl] = []
		self.statements: list = []
		self._declared = set()

	def table(self, name: str, values: np.ndarray) -> str:
		if name not in self._declared:
			values = np.asarray(values, dtype=np.float64)
			self.tables.append(Decl(name, values.shape, tuple(float(v) for v in values.reshape(-1))))
			self._declared.add(name)
		return name

	def local(self, name: str, extents: tuple[int, ...] = ()) -> str:
		self.statements.append(Decl(name, extents))
		return name

	def build(self, name: str, params: tuple[Param, ...]) -> KernelAst:
		return KernelAst(name, params, tuple(self.tables) + tuple(self.statements))

	####################################################################################################################
	# GEOMETRY
	####################################################################################################################
	def cell_geometry(self, coords: str = 'X'):
		"""
		Affine map of the cell from its vertex coordinates: J[r][c] = X[c+1][r] - X[0][r], detabs = |det J| and
		K = J^-1 through the adjugate.
		"""
		d = self.gdim
		self.local('J', (d, d))
		self.statements.append(For('r', 0, d, (For('c', 0, d, (
			Assign(idx('J', 'r', 'c'), idx(coords, Var('c') + 1, 'r') - idx(coords, 0, 'r')),)),)))

		def j(r, c):
			return idx('J', r, c)

		if d == 2:
			cofactor = [[j(1, 1), -j(1, 0)], [-j(0, 1), j(0, 0)]]
		else:
			cofactor = [[j((r + 1) % 3, (c + 1) % 3) * j((r + 2) % 3, (c + 2) % 3) -
						 j((r + 1) % 3, (c + 2) % 3) * j((r + 2) % 3, (c + 1) % 3) for c in range(3)] for r in range(3)]
		self.local('det')
		self.statements.append(Assign(Var('det'), _total([j(0, c) * cofactor[0][c] for c in range(d)])))
		self.local('detabs')
		self.statements.append(Assign(Var('detabs'), fmax(Var('det'), -Var('det'))))
		self.local('K', (d, d))
		for r in range(d):
			for c in range(d):
				self.statements.append(Assign(idx('K', r, c), cofactor[c][r] / Var('det')))

	def facet_geometry(self, coords: str = 'X'):
		"""
		`scale`: length of an edge in 2D, twice the area of a triangle in 3D, i.e. the ratio of the facet measure to
		the measure of its reference cell.
		"""
		def edge(k, r):
			return idx(coords, k, r) - idx(coords, 0, r)

		if self.gdim == 2:
			squares = [edge(1, r) * edge(1, r) for r in range(2)]
		else:
			cross = [edge(1, (r + 1) % 3) * edge(2, (r + 2) % 3) - edge(1, (r + 2) % 3) * edge(2, (r + 1) % 3)
					 for r in range(3)]
			squares = [c * c for c in cross]
		self.local('scale')
		self.statements.append(Assign(Var('scale'), sqrt(_total(squares))))

	####################################################################################################################
	# TABLES
	####################################################################################################################
	def weights(self, prefix: str, rule: QuadratureRule) -> str:
		return self.table(f'{prefix}W', rule.weights)

	def basis(self, prefix: str, degree: int, rule: QuadratureRule) -> str:
		values, _ = tabulate(lagrange_element(rule.cell, degree), rule)
		return self.table(f'{prefix}PHI{degree}', values)

	def gradients(self, prefix: str, degree: int, rule: QuadratureRule) -> str:
		"""
		Physical basis gradients G[q][i][r] = sum_c K[c][r] * DPHI[q][i][c], computed once per element.
		"""
		name = f'{prefix}G{degree}'
		if name in self._declared:
			return name
		_, grads = tabulate(lagrange_element(rule.cell, degree), rule)
		reference = self.table(f'{prefix}DPHI{degree}', grads)
		nq, nn, d = grads.shape
		self.local(name, (nq, nn, d))
		self._declared.add(name)
		value = _total([idx('K', c, 'r') * idx(reference, 'q', 'i', c) for c in range(d)])
		self.statements.append(For('q', 0, nq, (For('i', 0, nn, (For('r', 0, d, (
			Assign(idx(name, 'q', 'i', 'r'), value),)),)),)))
		return name

	def coefficient_values(self, name: str, coefficient: str, phi: str, nq: int, nn: int) -> str:
		self.local(name, (nq,))
		self.statements.append(For('q', 0, nq, (For('k', 0, nn, (
			Increment(idx(name, 'q'), idx(phi, 'q', 'k') * idx(coefficient, 'k')),)),)))
		return name

	def coefficient_gradients(self, name: str, coefficient: str, grads: str, nq: int, nn: int) -> str:
		self.local(name, (nq, self.gdim))
		self.statements.append(For('q', 0, nq, (For('r', 0, self.gdim, (For('k', 0, nn, (
			Increment(idx(name, 'q', 'r'), idx(grads, 'q', 'k', 'r') * idx(coefficient, 'k')),)),)),)))
		return name

	####################################################################################################################
	# INTEGRANDS
	####################################################################################################################
	def bilinear_block(self, kind: FormKind, cell: CellType, test_degree: int, trial_degree: int, kappa: float,
					   prefix: str = '', offsets: tuple[int, int] = (0, 0)):
		"""
		Quadrature loop accumulating one catalogue bilinear integrand into A[off_i + i][off_j + j].
		"""
		rule = make_quadrature(cell, quadrature_degree(kind, test_degree, trial_degree))
		w = self.weights(prefix, rule)
		nt = lagrange_element(cell, test_degree).node_count
		ns = lagrange_element(cell, trial_degree).node_count

		terms = []
		if kind in (FormKind.stiffness, FormKind.helmholtz):
			gt, gs = self.gradients(prefix, test_degree, rule), self.gradients(prefix, trial_degree, rule)
			terms.append(_total([idx(gt, 'q', 'i', r) * idx(gs, 'q', 'j', r) for r in range(self.gdim)]))
		if kind in (FormKind.mass, FormKind.helmholtz):
			pt, ps = self.basis(prefix, test_degree, rule), self.basis(prefix, trial_degree, rule)
			product = idx(pt, 'q', 'i') * idx(ps, 'q', 'j')
			terms.append(product if kind is FormKind.mass else Const(kappa) * product)

		row = Var('i') + offsets[0] if offsets[0] else Var('i')
		col = Var('j') + offsets[1] if offsets[1] else Var('j')
		value = idx(w, 'q') * Var('detabs') * _total(terms)
		self.statements.append(For('q', 0, rule.size, (For('i', 0, nt, (For('j', 0, ns, (
			Increment(idx('A', row, col), value),)),)),)))


########################################################################################################################
# CATALOGUE KERNELS
########################################################################################################################
def _signature(form: Form) -> tuple:
	cell = form.mesh.cell_type
	trial = form.trial.degree if form.trial is not None else None
	coefficients = tuple(f.function_space().degree for f in form.coefficients)
	return form.kind, cell, form.mesh.dim, form.test.degree, trial, form.kappa, form.constant, coefficients


def kernel_name(kind: FormKind, cell: CellType, *degrees: int) -> str:
	return f'{kind.value}_{cell.value}_' + '_'.join(f'P{d}' for d in degrees)


@lru_cache(maxsize=128)
def _bilinear_kernel(kind: FormKind, cell: CellType, gdim: int, test_degree: int, trial_degree: int,
					 kappa: float) -> KernelAst:
	builder = KernelBuilder(gdim)
	builder.cell_geometry()
	builder.bilinear_block(kind, cell, test_degree, trial_degree, kappa)
	nt = lagrange_element(cell, test_degree).node_count
	ns = lagrange_element(cell, trial_degree).node_count
	params = (Param('A', (nt, ns)), Param('X', (gdim + 1, gdim)))
	degrees = (test_degree,) if test_degree == trial_degree else (test_degree, trial_degree)
	return builder.build(kernel_name(kind, cell, *degrees), params)


@lru_cache(maxsize=128)
def _cell_linear_kernel(kind: FormKind, cell: CellType, gdim: int, degree: int, constant: Optional[float],
						coefficient_degrees: tuple[int, ...]) -> KernelAst:
	builder = KernelBuilder(gdim)
	builder.cell_geometry()
	nt = lagrange_element(cell, degree).node_count
	params = [Param('b', (nt,)), Param('X', (gdim + 1, gdim))]

	if kind is FormKind.source:
		other = coefficient_degrees[0] if coefficient_degrees else None
		rule = make_quadrature(cell, quadrature_degree(kind, degree, other))
		phi = builder.basis('', degree, rule)
		if coefficient_degrees:
			nc = lagrange_element(cell, other).node_count
			params.append(Param('w0', (nc,)))
			f = idx(builder.coefficient_values('F', 'w0', builder.basis('', other, rule), rule.size, nc), 'q')
		else:
			f = Const(constant)
		integrand = f * idx(phi, 'q', 'i')
	else:
		other = coefficient_degrees[0]
		rule = make_quadrature(cell, quadrature_degree(kind, degree, other))
		nc = lagrange_element(cell, other).node_count
		params.append(Param('w0', (nc,)))
		grad_phi = builder.coefficient_gradients('GW', 'w0', builder.gradients('', other, rule), rule.size, nc)
		grads = builder.gradients('', degree, rule)
		integrand = _total([idx(grads, 'q', 'i', r) * idx(grad_phi, 'q', r) for r in range(gdim)])

	w = builder.weights('', rule)
	builder.statements.append(For('q', 0, rule.size, (For('i', 0, nt, (
		Increment(idx('b', 'i'), idx(w, 'q') * Var('detabs') * integrand),)),)))
	return builder.build(kernel_name(kind, cell, degree, *coefficient_degrees), tuple(params))


@lru_cache(maxsize=64)
def _facet_kernel(cell: CellType, gdim: int, degree: int, constant: Optional[float], has_coefficient: bool) -> KernelAst:
	facet = FACET_CELL[cell]
	builder = KernelBuilder(gdim)
	builder.facet_geometry()
	rule = make_quadrature(facet, quadrature_degree(FormKind.facet_source, degree))
	phi = builder.basis('', degree, rule)
	w = builder.weights('', rule)
	nt = lagrange_element(facet, degree).node_count
	params = [Param('b', (nt,)), Param('X', (gdim, gdim))]

	if has_coefficient:
		params.append(Param('w0', (nt,)))
		g = idx(builder.coefficient_values('F', 'w0', phi, rule.size, nt), 'q')
	else:
		g = Const(constant)
	builder.statements.append(For('q', 0, rule.size, (For('i', 0, nt, (
		Increment(idx('b', 'i'), idx(w, 'q') * Var('scale') * g * idx(phi, 'q', 'i')),)),)))
	return builder.build(kernel_name(FormKind.facet_source, facet, degree), tuple(params))


def compile_local_kernel(form: Form) -> KernelAst:
	"""
	Local assembly kernel of a catalogue form. The signature is (local tensor, vertex coordinates of the cell or
	facet, one block of nodal values per coefficient). Kernels are cached per form signature, so equal forms
	on different meshes share them.
	:param form: a non-mixed catalogue form
	:return: the kernel AST
	"""
	if form.is_mixed:
		raise UnsupportedForm('mixed forms are compiled block by block or through compile_mixed_kernel')

	kind, cell, gdim, test_degree, trial_degree, kappa, constant, coefficients = _signature(form)
	if kind in BILINEAR:
		ast = _bilinear_kernel(kind, cell, gdim, test_degree, trial_degree, kappa)
	elif kind is FormKind.facet_source:
		ast = _facet_kernel(cell, gdim, test_degree, constant, bool(coefficients))
	elif kind in (FormKind.source, FormKind.stiffness_action):
		ast = _cell_linear_kernel(kind, cell, gdim, test_degree, constant, coefficients)
	else:
		raise UnsupportedForm(f'no local kernel for {kind.value} forms')

	logger.debug(f'Local kernel {ast.name} for a {kind.value} form.')
	return ast


def compile_mixed_kernel(form: Form) -> KernelAst:
	"""
	One kernel for every block of a bilinear mixed form, writing block (i, j) at the offsets of subspaces i and j in
	the concatenated local basis.
	"""
	if not form.is_mixed or form.rank != 2:
		raise UnsupportedForm('monolithic kernels exist for bilinear mixed forms only')

	cell, gdim = form.mesh.cell_type, form.mesh.dim
	test_nodes = [s.element.node_count for s in form.test.spaces]
	trial_nodes = [s.element.node_count for s in form.trial.spaces]
	test_offsets = np.concatenate(([0], np.cumsum(test_nodes))).astype(int)
	trial_offsets = np.concatenate(([0], np.cumsum(trial_nodes))).astype(int)

	builder = KernelBuilder(gdim)
	builder.cell_geometry()
	tags = []
	for (i, j), block in form.blocks:
		if block.kind not in MONOLITHIC_KINDS:
			raise UnsupportedForm(f'block ({i}, {j}) is a {block.kind.value} form')
		builder.bilinear_block(block.kind, cell, block.test.degree, block.trial.degree, block.kappa,
							   prefix=f'b{i}{j}_', offsets=(int(test_offsets[i]), int(trial_offsets[j])))
		tags.append(f'{i}{j}{block.kind.value}')

	params = (Param('A', (int(test_offsets[-1]), int(trial_offsets[-1]))), Param('X', (gdim + 1, gdim)))
	return builder.build(f'mixed_{cell.value}_' + '_'.join(tags), params)


########################################################################################################################
# ERROR INTEGRAL
########################################################################################################################
def compile_error_kernel(cell: CellType, gdim: int, degree: int) -> tuple[KernelAst, QuadratureRule]:
	"""
	Kernel adding the integral over a cell of (u - exact)^2 to err[0]; the exact values at the quadrature points are
	passed in as E. Quadrature degree 2p + 2.
	"""
	rule = make_quadrature(cell, 2 * degree + 2)
	return _error_kernel(cell, gdim, degree), rule


@lru_cache(maxsize=16)
def _error_kernel(cell: CellType, gdim: int, degree: int) -> KernelAst:
	rule = make_quadrature(cell, 2 * degree + 2)
	nn = lagrange_element(cell, degree).node_count
	builder = KernelBuilder(gdim)
	builder.cell_geometry()
	w = builder.weights('', rule)
	uq = builder.coefficient_values('U', 'u', builder.basis('', degree, rule), rule.size, nn)
	builder.local('diff')
	builder.statements.append(For('q', 0, rule.size, (
		Assign(Var('diff'), idx(uq, 'q') - idx('E', 'q')),
		Increment(idx('err', 0), idx(w, 'q') * Var('detabs') * Var('diff') * Var('diff')))))
	params = (Param('err', (1,)), Param('X', (gdim + 1, gdim)), Param('u', (nn,)), Param('E', (rule.size,)))
	return builder.build(f'l2_error_{cell.value}_P{degree}', params)
