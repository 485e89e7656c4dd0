import numpy as np
import pytest

from fem.assembly import assemble
from fem.bcs import DirichletBC
from fem.exceptions import (
	SpaceMismatch,
	UnsupportedForm
)
from fem.form import (
	mass,
	source,
	stiffness
)
from fem.function import Function
from fem.functionspace import (
	FunctionSpace,
	VectorFunctionSpace
)
from op2.data import (
	Mat,
	build_sparsity
)
from op2.exceptions import DimensionMismatch
from op2.topology import (
	Set,
	make_map
)
from schemas.enums import (
	ConvergedReason,
	Preconditioner
)
from schemas.input_schemas import SolverParams
from solver.block import (
	NestedMat,
	block_spmv
)
from solver.cg import (
	cg_solve,
	jacobi
)
from solver.exceptions import (
	IndefiniteBreakdown,
	NonConvergence,
	SingularPreconditioner
)
from solver.linear_solve import solve
from solver.lumped import lumped_mass


def dense_mat(values) -> Mat:
	values = np.asarray(values, dtype=float)
	n = values.shape[0]
	full = make_map(Set(1), Set(n), n, np.arange(n))
	mat = Mat(build_sparsity(full, full))
	mat.addto(np.arange(n), np.arange(n), values)
	return mat


# CG ###################################################################################################################
def test_cg_on_the_identity(rng):
	b = rng.standard_normal(5)
	x, report = cg_solve(dense_mat(np.eye(5)), b)
	assert np.allclose(x, b, rtol=1e-14, atol=0.0)
	assert report.iterations == 1
	assert report.converged


def test_cg_on_a_two_by_two_system():
	x, report = cg_solve(dense_mat([[4.0, 1.0], [1.0, 3.0]]), [1.0, 2.0], rtol=1e-12)
	assert np.allclose(x, [1.0 / 11.0, 7.0 / 11.0], rtol=1e-10, atol=0.0)
	assert report.iterations <= 2
	assert report.reason is ConvergedReason.rtol


@pytest.mark.parametrize('precond', [Preconditioner.none, Preconditioner.jacobi])
def test_cg_on_a_mass_matrix(precond, p1_square4):
	V = p1_square4
	A = assemble(mass(V))
	b = assemble(source(V, lambda x: np.sin(np.pi * x[:, 0])))
	x, report = cg_solve(A, b.dat.data_ro, rtol=1e-10, precond=precond)
	assert report.converged
	assert np.linalg.norm(b.dat.data_ro - A.spmv(x)) <= 1e-10 * np.linalg.norm(b.dat.data_ro)


def test_cg_zero_right_hand_side_needs_no_iteration():
	x, report = cg_solve(dense_mat([[2.0, 0.0], [0.0, 2.0]]), [0.0, 0.0])
	assert x.tolist() == [0.0, 0.0]
	assert report.iterations == 0


def test_cg_stops_at_the_iteration_limit(rng):
	A = dense_mat(np.diag(np.arange(1.0, 11.0)))
	x, report = cg_solve(A, rng.standard_normal(10), rtol=1e-14, maxit=2)
	assert not report.converged
	assert report.reason is ConvergedReason.maxit
	assert report.iterations == 2


def test_cg_detects_an_indefinite_operator():
	with pytest.raises(IndefiniteBreakdown):
		cg_solve(dense_mat([[1.0, 0.0], [0.0, -1.0]]), [0.0, 1.0])


def test_jacobi_rejects_a_zero_diagonal():
	A = dense_mat([[0.0, 1.0], [1.0, 2.0]])
	with pytest.raises(SingularPreconditioner):
		jacobi(A)
	with pytest.raises(ArithmeticError):
		cg_solve(A, [1.0, 1.0], precond=Preconditioner.jacobi)


def test_cg_checks_shapes():
	with pytest.raises(DimensionMismatch):
		cg_solve(dense_mat(np.eye(2)), [1.0, 2.0, 3.0])


# SOLVE ################################################################################################################
def test_solve_keeps_boundary_values_exact(p1_square4):
	V = p1_square4
	bc = DirichletBC(V, 0.0, (3, 4))
	A = assemble(stiffness(V), bcs=bc)
	b = assemble(source(V, 1.0), bcs=bc)
	u = Function(V)
	report = solve(A, u, b, bc)
	assert report.converged
	assert np.all(u.dat.data_ro[bc.nodes] == 0.0)


def test_solve_with_every_node_constrained(p1_square4):
	V = p1_square4
	bc = DirichletBC(V, 5.0, nodes=np.arange(V.node_count))
	A = assemble(stiffness(V), bcs=bc)
	b = assemble(source(V, 1.0), bcs=bc)
	u = Function(V)
	solve(A, u, b, bc)
	assert np.all(u.dat.data_ro == 5.0)


def test_solve_raises_on_non_convergence(p1_square4):
	V = p1_square4
	bc = DirichletBC(V, 0.0, (1, 2, 3, 4))
	A = assemble(stiffness(V), bcs=bc)
	b = assemble(source(V, 1.0), bcs=bc)
	params = SolverParams(ksp_rtol=1e-12, ksp_max_it=1, pc_type=Preconditioner.none)
	with pytest.raises(NonConvergence) as error:
		solve(A, Function(V), b, bc, params)
	assert not error.value.report.converged
	assert not solve(A, Function(V), b, bc, params, raise_on_failure=False).converged


def test_solve_checks_spaces(p1_square4, p2_square4):
	A = assemble(stiffness(p1_square4))
	with pytest.raises(SpaceMismatch):
		solve(A, Function(p1_square4), Function(p2_square4))


# LUMPED MASS ##########################################################################################################
def test_lumped_mass_of_one_triangle(triangle):
	assert np.allclose(lumped_mass(FunctionSpace(triangle, 1)).data_ro, 1.0 / 6.0, rtol=0.0, atol=1e-15)


def test_lumped_mass_equals_mass_row_sums(p1_square4):
	rows = assemble(mass(p1_square4)).spmv(np.ones(p1_square4.node_count))
	assert np.allclose(lumped_mass(p1_square4).data_ro, rows, rtol=1e-14, atol=0.0)


def test_lumped_mass_needs_a_scalar_space(square2):
	with pytest.raises(UnsupportedForm):
		lumped_mass(VectorFunctionSpace(square2))


# BLOCK OPERATORS ######################################################################################################
def test_block_diagonal_product(rng):
	A = dense_mat([[4.0, 1.0], [1.0, 3.0]])
	u, v = rng.standard_normal(2), rng.standard_normal(2)
	first, second = block_spmv([[A, None], [None, A]], [u, v])
	assert np.array_equal(first, A.spmv(u))
	assert np.array_equal(second, A.spmv(v))


def test_nested_product_equals_flattened_product_bitwise(rng):
	A = dense_mat(rng.standard_normal((3, 3)))
	B = dense_mat(rng.standard_normal((3, 3)))
	nested = NestedMat([[A, B], [None, A]])
	x = rng.standard_normal(6)
	assert np.array_equal(nested.spmv(x).view(np.uint64), nested.to_mat().spmv(x).view(np.uint64))
	assert np.array_equal(nested.to_dense()[3:, :3], np.zeros((3, 3)))


def test_nested_block_sizes_must_agree():
	with pytest.raises(DimensionMismatch):
		NestedMat([[dense_mat(np.eye(2)), dense_mat(np.eye(3))]])


def test_nested_cg_matches_flat_cg(rng):
	A = dense_mat([[4.0, 1.0], [1.0, 3.0]])
	nested = NestedMat([[A, None], [None, A]])
	b = rng.standard_normal(4)
	x, report = cg_solve(nested, b, rtol=1e-12, precond=Preconditioner.jacobi)
	assert report.converged
	assert np.allclose(nested.to_dense() @ x, b, rtol=0.0, atol=1e-11)
