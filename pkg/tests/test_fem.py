import math
import numpy as np
import pytest

from fem.assembly import (
	assemble,
	assemble_monolithic
)
from fem.bcs import (
	DirichletBC,
	apply_dirichlet
)
from fem.compiler import compile_local_kernel
from fem.custom import (
	custom_parloop,
	perturbed_initial_condition
)
from fem.element import (
	lagrange_element,
	tabulate
)
from fem.exceptions import (
	CellMismatch,
	SpaceMismatch,
	UnsupportedElement,
	UnsupportedForm
)
from fem.form import (
	facet_source,
	helmholtz,
	mass,
	mixed,
	source,
	split_mixed,
	stiffness,
	stiffness_action
)
from fem.function import (
	Constant,
	Function
)
from fem.functionspace import (
	FunctionSpace,
	MixedFunctionSpace,
	VectorFunctionSpace
)
from fem.mesh import unit_square_mesh
from fem.norms import (
	l2_error,
	norm
)
from fem.pointwise import _kernel
from fem.quadrature import make_quadrature
from kernel_ir import (
	Assign,
	Kernel,
	KernelAst,
	Param,
	interpret
)
from kernel_ir.ast import (
	fmax,
	idx
)
from kernel_ir.passes import (
	optimize,
	unroll
)
from op2.data import (
	Global,
	Mat,
	build_sparsity
)
from op2.topology import (
	Set,
	make_map
)
from schemas.enums import (
	Access,
	CellType,
	IterationRegion
)
from solver.block import NestedMat


REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def local_tensor(form, shape) -> np.ndarray:
	"""
	Run the local kernel of a form on the reference triangle.
	"""
	out = np.zeros(shape)
	interpret(compile_local_kernel(form), [out, REFERENCE_TRIANGLE.copy()])
	return out


# QUADRATURE AND ELEMENTS ##############################################################################################
@pytest.mark.parametrize('cell, measure', [(CellType.interval, 1.0), (CellType.triangle, 0.5),
										   (CellType.tetrahedron, 1.0 / 6.0)])
@pytest.mark.parametrize('degree', [1, 2, 3, 4, 5, 6])
def test_quadrature_weights(cell, measure, degree):
	rule = make_quadrature(cell, degree)
	assert np.all(rule.weights > 0.0)
	assert math.isclose(rule.weights.sum(), measure, rel_tol=1e-13)


@pytest.mark.parametrize('degree', [1, 2, 3, 4, 5, 6])
def test_triangle_quadrature_is_exact(degree):
	rule = make_quadrature(CellType.triangle, degree)
	x, y = rule.points[:, 0], rule.points[:, 1]
	for a in range(degree + 1):
		b = degree - a
		exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
		assert math.isclose(rule.weights @ (x ** a * y ** b), exact, rel_tol=1e-12)


@pytest.mark.parametrize('degree', [1, 2, 3, 4])
def test_tetrahedron_quadrature_is_exact(degree):
	rule = make_quadrature(CellType.tetrahedron, degree)
	x, y, z = rule.points.T
	exact = math.factorial(degree) / math.factorial(degree + 3)
	assert math.isclose(rule.weights @ x ** degree, exact, rel_tol=1e-12)
	if degree >= 3:
		assert math.isclose(rule.weights @ (x * y * z), 1.0 / 720.0, rel_tol=1e-12)


def test_p1_values_at_centroid():
	values = lagrange_element(CellType.triangle, 1).values(np.array([[1.0 / 3.0, 1.0 / 3.0]]))
	assert np.allclose(values, [[1.0 / 3.0] * 3], rtol=0.0, atol=1e-15)


def test_p1_gradients_are_constant():
	values, grads = tabulate(lagrange_element(CellType.triangle, 1), make_quadrature(CellType.triangle, 2))
	for g in grads:
		assert np.allclose(g, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]], rtol=0.0, atol=1e-14)
	assert np.allclose(values.sum(axis=1), 1.0)


def test_p2_is_nodal():
	element = lagrange_element(CellType.triangle, 2)
	assert np.allclose(element.values(np.array([[0.0, 0.0]])), [[1, 0, 0, 0, 0, 0]], rtol=0.0, atol=1e-14)
	assert np.allclose(element.values(element.nodes), np.eye(6), rtol=0.0, atol=1e-13)


def test_p2_on_tetrahedra_is_unsupported():
	with pytest.raises(UnsupportedElement):
		lagrange_element(CellType.tetrahedron, 2)


def test_tabulate_checks_the_cell():
	with pytest.raises(CellMismatch):
		tabulate(lagrange_element(CellType.triangle, 1), make_quadrature(CellType.tetrahedron, 1))


# LOCAL KERNELS ########################################################################################################
def test_local_stiffness(triangle):
	local = local_tensor(stiffness(FunctionSpace(triangle, 1)), (3, 3))
	expected = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
	assert np.allclose(local, expected, rtol=0.0, atol=1e-15)


def test_local_mass(triangle):
	local = local_tensor(mass(FunctionSpace(triangle, 1)), (3, 3))
	expected = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 24.0
	assert np.allclose(local, expected, rtol=0.0, atol=1e-15)


def test_local_source(triangle):
	assert np.allclose(local_tensor(source(FunctionSpace(triangle, 1), 1.0), (3,)), 1.0 / 6.0, rtol=0.0, atol=1e-15)


def test_local_helmholtz_is_stiffness_plus_mass(triangle):
	V = FunctionSpace(triangle, 1)
	combined = local_tensor(helmholtz(V, 3.0), (3, 3))
	separate = local_tensor(stiffness(V), (3, 3)) + 3.0 * local_tensor(mass(V), (3, 3))
	assert np.allclose(combined, separate, rtol=1e-14, atol=1e-15)


def test_local_p2_mass_sums_to_the_area(triangle):
	local = local_tensor(mass(FunctionSpace(triangle, 2)), (6, 6))
	assert math.isclose(local.sum(), 0.5, rel_tol=1e-13)
	assert np.allclose(local, local.T, rtol=0.0, atol=1e-16)


def random_simplex(rng, dim: int) -> tuple[np.ndarray, float]:
	"""
	Vertices of a random, not too flat simplex and its measure.
	"""
	while True:
		vertices = rng.uniform(-1.0, 1.0, (dim + 1, dim))
		measure = abs(np.linalg.det(vertices[1:] - vertices[0])) / math.factorial(dim)
		if measure > 0.05:
			return vertices, measure


def run_local(ast: KernelAst, shape, vertices: np.ndarray) -> np.ndarray:
	out = np.zeros(shape)
	interpret(ast, [out, vertices.copy()])
	return out


@pytest.mark.parametrize('dim', [2, 3])
def test_p1_kernels_integrate_exactly_on_random_simplices(dim, triangle, cube1, rng):
	V = FunctionSpace(triangle if dim == 2 else cube1, 1)
	n = dim + 1
	kernels = {name: compile_local_kernel(form) for name, form in
			   (('mass', mass(V)), ('stiffness', stiffness(V)), ('source', source(V, 2.0)))}

	for _ in range(10):
		vertices, measure = random_simplex(rng, dim)
		# rows of the inverse of [1 | X]^T hold the barycentric gradients
		grads = np.linalg.inv(np.hstack([np.ones((n, 1)), vertices]).T)[:, 1:]

		exact_mass = measure * (np.ones((n, n)) + np.eye(n)) / ((dim + 1) * (dim + 2))
		exact_stiffness = measure * grads @ grads.T
		exact_source = np.full(n, 2.0 * measure / (dim + 1))

		for name, exact, shape in (('mass', exact_mass, (n, n)), ('stiffness', exact_stiffness, (n, n)),
								   ('source', exact_source, (n,))):
			local = run_local(kernels[name], shape, vertices)
			assert np.allclose(local, exact, rtol=1e-12, atol=1e-12 * np.abs(exact).max()), name


def p2_barycentric_basis() -> list[dict]:
	"""
	P2 basis in the reference node order, each function a polynomial in the barycentric coordinates stored as
	{exponents: coefficient}.
	"""
	basis = []
	for x, y in lagrange_element(CellType.triangle, 2).nodes:
		lam = np.array([1.0 - x - y, x, y])
		vertex = np.flatnonzero(np.isclose(lam, 1.0))
		if vertex.size:
			square, linear = [0, 0, 0], [0, 0, 0]
			square[vertex[0]], linear[vertex[0]] = 2, 1
			basis.append({tuple(square): 2.0, tuple(linear): -1.0})
		else:
			edge = [0, 0, 0]
			for k in np.flatnonzero(np.isclose(lam, 0.5)):
				edge[k] = 1
			basis.append({tuple(edge): 4.0})
	return basis


def multiply(p: dict, q: dict) -> dict:
	out = {}
	for a, c in p.items():
		for b, d in q.items():
			key = tuple(x + y for x, y in zip(a, b))
			out[key] = out.get(key, 0.0) + c * d
	return out


def differentiate(p: dict, k: int) -> dict:
	out = {}
	for a, c in p.items():
		if a[k]:
			key = tuple(x - (i == k) for i, x in enumerate(a))
			out[key] = out.get(key, 0.0) + c * a[k]
	return out


def integrate(p: dict, area: float) -> float:
	# integral of a barycentric monomial over a triangle: 2|T| a! b! c! / (a + b + c + 2)!
	return sum(c * 2.0 * area * math.prod(math.factorial(x) for x in a) / math.factorial(sum(a) + 2)
			   for a, c in p.items())


def test_p2_kernels_integrate_exactly_on_random_triangles(triangle, rng):
	V = FunctionSpace(triangle, 2)
	kernels = {'mass': compile_local_kernel(mass(V)), 'stiffness': compile_local_kernel(stiffness(V)),
			   'source': compile_local_kernel(source(V, 2.0))}
	basis = p2_barycentric_basis()
	partials = [[differentiate(phi, k) for k in range(3)] for phi in basis]

	for _ in range(10):
		vertices, area = random_simplex(rng, 2)
		grads = np.linalg.inv(np.hstack([np.ones((3, 1)), vertices]).T)[:, 1:]
		metric = grads @ grads.T

		exact_mass = np.array([[integrate(multiply(p, q), area) for q in basis] for p in basis])
		exact_stiffness = np.array([[sum(metric[k, l] * integrate(multiply(dp[k], dq[l]), area)
										 for k in range(3) for l in range(3))
									 for dq in partials] for dp in partials])
		exact_source = np.array([2.0 * integrate(p, area) for p in basis])

		for name, exact in (('mass', exact_mass), ('stiffness', exact_stiffness), ('source', exact_source)):
			local = run_local(kernels[name], exact.shape, vertices)
			assert np.allclose(local, exact, rtol=1e-12, atol=1e-12 * np.abs(exact).max()), name


CATALOGUE = [
	('mass', 1), ('mass', 2), ('stiffness', 1), ('stiffness', 2), ('helmholtz', 1), ('source', 2)
]


@pytest.mark.parametrize('kind, degree', CATALOGUE)
def test_optimized_local_kernels_agree_with_the_original(kind, degree, triangle, rng):
	V = FunctionSpace(triangle, degree)
	form = {'mass': mass, 'stiffness': stiffness, 'helmholtz': lambda s: helmholtz(s, 3.0),
			'source': lambda s: source(s, 1.5)}[kind](V)
	ast = compile_local_kernel(form)
	shape = ast.params[0].extents
	variants = [optimize(ast), optimize(ast, pad=4)]
	unrolled = unroll(ast, 'j', shape[1]) if len(shape) == 2 else None

	for _ in range(100):
		vertices, _ = random_simplex(rng, 2)
		reference = run_local(ast, shape, vertices)
		scale = np.abs(reference).max()
		for variant in variants:
			assert np.allclose(run_local(variant, shape, vertices), reference, rtol=1e-12, atol=1e-12 * scale)
		if unrolled is not None:
			assert np.array_equal(run_local(unrolled, shape, vertices), reference)


# ASSEMBLY #############################################################################################################
def test_assembled_mass_sums_to_the_area():
	A = assemble(mass(FunctionSpace(unit_square_mesh(1), 1)))
	assert A.shape == (4, 4)
	assert math.isclose(A.to_dense().sum(), 1.0, rel_tol=1e-13)


@pytest.mark.parametrize('degree', [1, 2])
def test_assembled_mass_is_symmetric_positive_definite(square4, degree):
	M = assemble(mass(FunctionSpace(square4, degree))).to_dense()
	assert M.shape[0] <= 100
	assert np.allclose(M, M.T, rtol=0.0, atol=1e-12 * np.abs(M).max())
	np.linalg.cholesky(M)


@pytest.mark.parametrize('degree', [1, 2])
def test_assembled_stiffness_is_symmetric(square4, degree):
	K = assemble(stiffness(FunctionSpace(square4, degree))).to_dense()
	assert np.allclose(K, K.T, rtol=0.0, atol=1e-12 * np.abs(K).max())


@pytest.mark.parametrize('degree', [1, 2])
def test_stiffness_annihilates_constants(square4, degree):
	V = FunctionSpace(square4, degree)
	A = assemble(stiffness(V))
	assert np.max(np.abs(A.spmv(np.ones(V.dof_count)))) < 1e-12


def test_stiffness_on_tetrahedra_annihilates_constants(cube1):
	A = assemble(stiffness(FunctionSpace(cube1, 1)))
	assert np.max(np.abs(A.spmv(np.ones(8)))) < 1e-12


def test_source_sums_to_the_area(square2):
	b = assemble(source(FunctionSpace(square2, 1), 1.0))
	assert math.isclose(b.dat.data_ro.sum(), 1.0, rel_tol=1e-13)


def test_source_with_function_coefficient(p1_square4):
	f = Function(p1_square4).interpolate(lambda x: x[:, 0])
	b = assemble(source(p1_square4, f))
	assert math.isclose(b.dat.data_ro.sum(), 0.5, rel_tol=1e-13)


def test_stiffness_action_matches_matrix_product(p2_square4, rng):
	phi = Function(p2_square4)
	phi.dat.data[:] = rng.standard_normal(p2_square4.node_count)
	action = assemble(stiffness_action(p2_square4, phi))
	product = assemble(stiffness(p2_square4)).spmv(phi.dat.data_ro)
	assert np.allclose(action.dat.data_ro, product, rtol=0.0, atol=1e-12)


def test_facet_source_measures_the_marked_side(square4):
	V = FunctionSpace(square4, 1)
	assert math.isclose(assemble(facet_source(V, 1.0, 1)).dat.data_ro.sum(), 1.0, rel_tol=1e-13)
	assert math.isclose(assemble(facet_source(V, 2.0, (1, 3))).dat.data_ro.sum(), 4.0, rel_tol=1e-13)


def test_assemble_reuses_the_tensor(p1_square4):
	A = assemble(mass(p1_square4))
	again = assemble(mass(p1_square4), tensor=A)
	assert again is A
	assert math.isclose(A.to_dense().sum(), 1.0, rel_tol=1e-13)


def test_vector_space_forms_are_unsupported(square2):
	with pytest.raises(UnsupportedForm):
		mass(VectorFunctionSpace(square2))


def test_forms_need_one_mesh(square2, square4):
	with pytest.raises(SpaceMismatch):
		mass(FunctionSpace(square2, 1), FunctionSpace(square4, 1))


# BOUNDARY CONDITIONS ##################################################################################################
def test_apply_dirichlet_on_a_two_by_two_system():
	m = make_map(Set(1), Set(2), 2, [0, 1])
	A = Mat(build_sparsity(m, m))
	A.addto([0, 1], [0, 1], [[2.0, 1.0], [1.0, 2.0]])
	b = np.array([3.0, 3.0])
	apply_dirichlet(A, b, DirichletBC(None, 0.0, nodes=[0]))
	assert A.to_dense().tolist() == [[1.0, 0.0], [1.0, 2.0]]
	assert b.tolist() == [0.0, 3.0]


def test_boundary_nodes_of_p2(square2):
	V = FunctionSpace(square2, 2)
	nodes = V.boundary_nodes(1)
	assert nodes.size == 5
	assert np.all(V.node_coordinates()[nodes, 0] == 0.0)


def test_bc_with_callable_value(p1_square4):
	u = Function(p1_square4)
	bc = DirichletBC(p1_square4, lambda x: x[:, 1], 1)
	bc.apply(u)
	y = p1_square4.node_coordinates()[bc.nodes, 1]
	assert np.array_equal(u.dat.data_ro[bc.nodes], y)


def test_bc_value_on_another_space(p1_square4, p2_square4):
	with pytest.raises(SpaceMismatch):
		DirichletBC(p1_square4, Function(p2_square4), 1)


# MIXED FORMS ##########################################################################################################
def test_split_mixed_mass_has_a_diagonal_table(p1_square4):
	W = MixedFunctionSpace([p1_square4, p1_square4])
	table = split_mixed(mixed(W, {(0, 0): mass, (1, 1): mass}))
	assert table[0][1] is None and table[1][0] is None
	assert table[0][0].kind == table[1][1].kind == mass(p1_square4).kind


def test_blockwise_equals_monolithic(square2):
	W = MixedFunctionSpace([FunctionSpace(square2, 1), FunctionSpace(square2, 2)])
	form = mixed(W, {(0, 0): mass, (0, 1): mass, (1, 0): mass, (1, 1): stiffness})
	nested = assemble(form)
	monolithic = assemble_monolithic(form)
	assert isinstance(nested, NestedMat)
	assert np.max(np.abs(nested.to_dense() - monolithic.to_dense())) <= 1e-12


def test_mixed_linear_form(p1_square4):
	W = MixedFunctionSpace([p1_square4, p1_square4])
	first, second = assemble(mixed(W, {0: lambda V: source(V, 1.0)}))
	assert math.isclose(first.dat.data_ro.sum(), 1.0, rel_tol=1e-13)
	assert not second.dat.data_ro.any()


def test_mixed_forms_take_no_boundary_conditions(p1_square4):
	W = MixedFunctionSpace([p1_square4, p1_square4])
	with pytest.raises(UnsupportedForm):
		assemble(mixed(W, {(0, 0): mass}), bcs=DirichletBC(p1_square4, 0.0, 1))


# POINTWISE ############################################################################################################
def test_pointwise_update(p1_square4):
	p = Function(p1_square4).assign(2.0)
	phi = Function(p1_square4).assign(1.0)
	phi -= 0.001 / 2 * p
	assert np.all(phi.dat.data_ro == 1.0 - 0.0005 * 2.0)


def test_pointwise_sum(p1_square4):
	a = Function(p1_square4).assign(1.0)
	b = Function(p1_square4).assign(2.0)
	out = Function(p1_square4).assign(a + b)
	assert np.all(out.dat.data_ro == 3.0)


def test_pointwise_reads_constants_and_the_output(p1_square4):
	c = Constant(4.0)
	u = Function(p1_square4).assign(3.0)
	u.assign(u * c - 1.0)
	assert np.all(u.dat.data_ro == 11.0)
	c.assign(0.5)
	u /= c
	assert np.all(u.dat.data_ro == 22.0)


def test_pointwise_kernels_are_reused_from_a_bounded_cache(p1_square4):
	Function(p1_square4).assign(1.0)
	before = _kernel.cache_info()
	Function(p1_square4).assign(1.0)
	after = _kernel.cache_info()
	assert after.maxsize is not None
	assert after.hits == before.hits + 1
	assert after.currsize <= after.maxsize


def test_pointwise_needs_compatible_spaces(p1_square4, p2_square4):
	with pytest.raises(SpaceMismatch):
		Function(p1_square4).assign(Function(p2_square4) + 1.0)


# CUSTOM KERNELS #######################################################################################################
def test_perturbed_initial_condition(p1_square4):
	first = perturbed_initial_condition(p1_square4, seed=2).dat.data_ro
	second = perturbed_initial_condition(p1_square4, seed=2).dat.data_ro
	assert np.all((first >= 0.61) & (first <= 0.65))
	assert np.array_equal(first, second)
	assert not np.array_equal(first, perturbed_initial_condition(p1_square4, seed=3).dat.data_ro)


def test_custom_kernel_copies_a_global(p1_square4):
	u = Function(p1_square4)
	value = Global(1, 2.5)
	ast = KernelAst('broadcast', (Param('u', (1,)), Param('g', (1,))), (Assign(idx('u', 0), idx('g', 0)),))
	custom_parloop(Kernel(ast), [(u, Access.write), (value, Access.read)])
	assert np.all(u.dat.data_ro == 2.5)


def test_custom_kernel_max_reduction(p1_square4, rng):
	u = Function(p1_square4)
	u.dat.data[:] = rng.standard_normal(p1_square4.node_count)
	largest = Global(1, -np.inf)
	ast = KernelAst('largest', (Param('m', (1,)), Param('u', (1,))), (Assign(idx('m', 0), fmax(idx('m', 0), idx('u', 0))),))
	custom_parloop(Kernel(ast), [(largest, Access.max), (u, Access.read)])
	assert float(largest) == u.dat.data_ro.max()


def test_custom_kernel_over_cells(p1_square4):
	counts = Function(p1_square4)
	ast = KernelAst('count', (Param('c', (3,)),), tuple(
		Assign(idx('c', k), idx('c', k) + 1.0) for k in range(3)))
	custom_parloop(Kernel(ast), [(counts, Access.rw)], iterate=IterationRegion.cells)
	cells_per_vertex = np.bincount(p1_square4.cell_node_map.values, minlength=p1_square4.node_count)
	assert np.array_equal(counts.dat.data_ro, cells_per_vertex.astype(float))


def test_custom_kernel_needs_a_function():
	with pytest.raises(SpaceMismatch):
		custom_parloop(Kernel(host_fn=lambda g: None), [(Global(1), Access.sum)])


# NORMS ################################################################################################################
def test_error_of_an_exact_interpolant_vanishes(p2_square4):
	quadratic = lambda x: x[:, 0] ** 2 + x[:, 0] * x[:, 1] - 2.0 * x[:, 1]
	u = Function(p2_square4).interpolate(quadratic)
	assert l2_error(u, quadratic) <= 1e-12


def test_error_against_constants(p1_square4):
	u = Function(p1_square4)
	assert math.isclose(l2_error(u, 1.0), 1.0, rel_tol=1e-13)
	assert math.isclose(l2_error(u, lambda x: x[:, 0]), 1.0 / math.sqrt(3.0), rel_tol=1e-12)


def test_norm_of_a_constant(p1_square4):
	assert math.isclose(norm(Function(p1_square4).assign(2.0)), 2.0, rel_tol=1e-13)
