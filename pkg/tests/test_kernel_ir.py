import numpy as np
import pytest

from fem.compiler import compile_local_kernel
from fem.form import (
	helmholtz,
	mass,
	source,
	stiffness
)
from fem.functionspace import FunctionSpace
from kernel_ir import (
	Assign,
	Const,
	Decl,
	For,
	Increment,
	Kernel,
	KernelAst,
	Param,
	Var,
	emit_source,
	fold_constants,
	hoist_invariants,
	interpret,
	optimize,
	pad_extents,
	unroll
)
from kernel_ir.ast import idx
from kernel_ir.exceptions import (
	InvalidVectorWidth,
	NonDividingFactor,
	ShapeMismatch,
	UnboundIdentifier
)


def doubling(n: int = 3) -> KernelAst:
	return KernelAst('double', (Param('A', (n,)), Param('B', (n,))),
					 (For('i', 0, n, (Assign(idx('A', 'i'), 2 * idx('B', 'i')),)),))


def scaled_increment() -> KernelAst:
	# for j: A[j] += (x * y) * D[j]
	return KernelAst('scaled', (Param('A', (4,)), Param('D', (4,)), Param('x'), Param('y')),
					 (For('j', 0, 4, (Increment(idx('A', 'j'), (Var('x') * Var('y')) * idx('D', 'j')),)),))


def run_interpreted(ast: KernelAst, *arrays):
	arrays = [np.array(a, dtype=float) for a in arrays]
	interpret(ast, arrays)
	return arrays


# AST ##################################################################################################################
def test_unbound_identifier_is_rejected():
	ast = KernelAst('bad', (Param('A', (2,)),), (Assign(idx('A', 0), idx('C', 0)),))
	with pytest.raises(UnboundIdentifier):
		ast.validate()


def test_rank_mismatch_is_rejected():
	ast = KernelAst('bad', (Param('A', (2, 2)),), (Assign(idx('A', 0), Const(1.0)),))
	with pytest.raises(ShapeMismatch):
		ast.validate()


def test_decl_initializer_size_is_checked():
	with pytest.raises(ShapeMismatch):
		Decl('T', (2, 2), (1.0, 2.0, 3.0))


# INTERPRETER ##########################################################################################################
def test_interpret_doubling():
	a, _ = run_interpreted(doubling(), [0, 0, 0], [1, 2, 3])
	assert a.tolist() == [2.0, 4.0, 6.0]


def test_interpret_empty_body_leaves_arguments():
	ast = KernelAst('noop', (Param('A', (2,)),))
	(a,) = run_interpreted(ast, [1.5, -2.0])
	assert a.tolist() == [1.5, -2.0]


def test_interpret_rejects_wrong_argument_size():
	with pytest.raises(ShapeMismatch):
		interpret(doubling(), [np.zeros(3), np.zeros(2)])


def test_interpret_mass_kernel_on_reference_triangle(triangle):
	ast = compile_local_kernel(mass(FunctionSpace(triangle, 1)))
	local = np.zeros((3, 3))
	interpret(ast, [local, np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])])
	expected = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 24.0
	assert np.allclose(local, expected, rtol=0.0, atol=1e-15)


# PASSES ###############################################################################################################
def test_hoist_moves_invariant_product_before_the_loop():
	hoisted = hoist_invariants(scaled_increment())
	decl, assign, loop = hoisted.body
	assert decl == Decl('t0')
	assert assign == Assign(Var('t0'), Var('x') * Var('y'))
	assert loop.body == (Increment(idx('A', 'j'), Var('t0') * idx('D', 'j')),)


def test_hoist_keeps_results_bitwise(rng):
	d, x, y = rng.standard_normal(4), rng.standard_normal(1), rng.standard_normal(1)
	before = run_interpreted(scaled_increment(), np.zeros(4), d, x, y)[0]
	after = run_interpreted(hoist_invariants(scaled_increment()), np.zeros(4), d, x, y)[0]
	assert np.array_equal(before, after)


def test_hoist_without_invariants_is_a_fixpoint():
	assert hoist_invariants(doubling()) == doubling()


def test_hoist_nested_loop_factor_of_the_outer_variable(rng):
	# for q: for i: b[i] += (w[q] * s) * B[q, i]
	ast = KernelAst('quad', (Param('b', (3,)), Param('w', (2,)), Param('B', (2, 3)), Param('s')),
					(For('q', 0, 2, (For('i', 0, 3, (
						Increment(idx('b', 'i'), (idx('w', 'q') * Var('s')) * idx('B', 'q', 'i')),)),)),))
	hoisted = hoist_invariants(ast)
	outer = hoisted.body[-1]
	assert isinstance(outer, For) and outer.var == 'q'
	assert any(isinstance(s, Decl) for s in outer.body)
	assert isinstance(outer.body[-1], For) and outer.body[-1].var == 'i'

	args = rng.standard_normal(3), rng.standard_normal(2), rng.standard_normal((2, 3)), rng.standard_normal(1)
	expected = run_interpreted(ast, np.zeros(3), *args[1:])[0]
	assert np.allclose(run_interpreted(hoisted, np.zeros(3), *args[1:])[0], expected, rtol=1e-12, atol=0.0)


LOCAL_FORMS = {
	'mass': mass,
	'stiffness': stiffness,
	'helmholtz': lambda V: helmholtz(V, 3.0),
	'source': lambda V: source(V, 1.5)
}


@pytest.mark.parametrize('kind', sorted(LOCAL_FORMS))
@pytest.mark.parametrize('degree', [1, 2])
def test_hoist_and_fold_are_idempotent(kind, degree, triangle):
	ast = compile_local_kernel(LOCAL_FORMS[kind](FunctionSpace(triangle, degree)))

	hoisted = hoist_invariants(ast)
	assert hoist_invariants(hoisted) == hoisted
	folded = fold_constants(ast)
	assert fold_constants(folded) == folded
	assert fold_constants(fold_constants(hoisted)) == fold_constants(hoisted)


def test_fold_constants():
	ast = KernelAst('k', (Param('A', (2,)), Param('B', (2,))),
					(For('i', 0, 2, (Assign(idx('A', 'i'), (Const(2) * Const(3)) * idx('B', 'i')),)),))
	assert fold_constants(ast).body[0].body[0].value == Const(6) * idx('B', 'i')

	identity = KernelAst('k', (Param('A', (2,)), Param('B', (2,))),
						 (For('i', 0, 2, (Assign(idx('A', 'i'), Const(1) * idx('B', 'i') + Const(0)),)),))
	assert fold_constants(identity).body[0].body[0].value == idx('B', 'i')

	assert fold_constants(doubling()) == doubling()


def test_unroll_by_two():
	ast = unroll(KernelAst('k', (Param('A', (4,)),), (For('i', 0, 4, (Assign(idx('A', 'i'), Const(1.0)),)),)), 'i', 2)
	(loop,) = ast.body
	assert loop.trip == 2 and len(loop.body) == 2
	(a,) = run_interpreted(ast, np.zeros(4))
	assert a.tolist() == [1.0] * 4


def test_unroll_rejects_non_dividing_factor():
	ast = KernelAst('k', (Param('A', (4,)),), (For('i', 0, 4, (Assign(idx('A', 'i'), Const(1.0)),)),))
	with pytest.raises(NonDividingFactor):
		unroll(ast, 'i', 3)


def test_full_unroll_removes_the_loop():
	ast = unroll(doubling(), 'i', 3)
	assert not any(isinstance(s, For) for s in ast.body)
	a, _ = run_interpreted(ast, np.zeros(3), [1, 2, 3])
	assert a.tolist() == [2.0, 4.0, 6.0]


def test_pad_extents():
	block = KernelAst('k', (Param('A', (3, 3)),))
	assert dict(pad_extents(block, 4).padding) == {'A': (3, 4)}
	assert pad_extents(KernelAst('k', (Param('A', (4,)),)), 4).padding == ()
	assert dict(pad_extents(KernelAst('k', (Param('A', (5,)),)), 2).padding) == {'A': (6,)}


def test_pad_rejects_odd_width():
	with pytest.raises(InvalidVectorWidth):
		pad_extents(doubling(), 3)


def test_padded_kernel_keeps_results(rng):
	b = rng.standard_normal(3)
	padded = optimize(doubling(), pad=4)
	assert np.array_equal(run_interpreted(padded, np.zeros(3), b)[0], 2 * b)
	buffers = [np.zeros((2, 3)), np.vstack([b, b])]
	Kernel(padded).run(2, buffers)
	assert np.array_equal(buffers[0], np.vstack([2 * b, 2 * b]))


# SOURCE ###############################################################################################################
def test_emit_empty_kernel():
	assert emit_source(KernelAst('noop', (Param('A', (2,)),))) == 'void noop(double A[2])\n{\n}\n'


def test_emit_doubling_loop():
	source = emit_source(doubling())
	assert source.count('for (') == 1
	assert 'A[i] = (2 * B[i]);' in source
	assert emit_source(doubling()) == source


# KERNEL ###############################################################################################################
def test_compiled_and_interpreted_kernels_agree(rng):
	b = rng.standard_normal((5, 3))
	compiled = [np.zeros((5, 3)), b.copy()]
	interpreted = [np.zeros((5, 3)), b.copy()]
	Kernel(doubling()).run(5, compiled)
	Kernel(doubling(), interpret=True).run(5, interpreted)
	assert np.array_equal(compiled[0], interpreted[0])
	assert 'def kernel_double' in Kernel(doubling()).generated_source


def test_host_kernel_runs_per_instance():
	def host(a, b):
		a[:] = b + 1.0

	buffers = [np.zeros((2, 2)), np.ones((2, 2))]
	Kernel(host_fn=host).run(2, buffers)
	assert buffers[0].tolist() == [[2.0, 2.0], [2.0, 2.0]]
