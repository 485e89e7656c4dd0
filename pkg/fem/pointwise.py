import numpy as np

from dataclasses import dataclass
from functools import lru_cache
from loguru import logger

from fem.exceptions import SpaceMismatch
from kernel_ir.ast import (
	Assign,
	BinOp,
	Const,
	Expr,
	For,
	Increment,
	KernelAst,
	Param,
	UnaryOp,
	idx
)
from kernel_ir.kernel import Kernel
from op2.parloop import par_loop
from schemas.enums import Access


########################################################################################################################
# EXPRESSION TREES
########################################################################################################################
class PointwiseExpr:
	"""
	Arithmetic over Functions, Constants and numbers, evaluated node by node when assigned to a Function.
	"""
	def __add__(self, other):
		return BinaryExpr('+', self, as_expr(other))

	def __radd__(self, other):
		return BinaryExpr('+', as_expr(other), self)

	def __sub__(self, other):
		return BinaryExpr('-', self, as_expr(other))

	def __rsub__(self, other):
		return BinaryExpr('-', as_expr(other), self)

	def __mul__(self, other):
		return BinaryExpr('*', self, as_expr(other))

	def __rmul__(self, other):
		return BinaryExpr('*', as_expr(other), self)

	def __truediv__(self, other):
		return BinaryExpr('/', self, as_expr(other))

	def __rtruediv__(self, other):
		return BinaryExpr('/', as_expr(other), self)

	def __neg__(self):
		return Negated(self)


@dataclass(frozen=True, eq=False)
class Literal(PointwiseExpr):
	value: float


@dataclass(frozen=True, eq=False)
class BinaryExpr(PointwiseExpr):
	op: str
	left: PointwiseExpr
	right: PointwiseExpr


@dataclass(frozen=True, eq=False)
class Negated(PointwiseExpr):
	operand: PointwiseExpr


def as_expr(value) -> PointwiseExpr:
	if isinstance(value, PointwiseExpr):
		return value
	if isinstance(value, (int, float, np.floating, np.integer)):
		return Literal(float(value))
	raise TypeError(f'cannot use {value!r} in a pointwise expression')


def terminals(expr: PointwiseExpr) -> list[PointwiseExpr]:
	"""
	Functions and Constants of an expression, first appearance first, each once.
	"""
	found = []

	def visit(e):
		if isinstance(e, BinaryExpr):
			visit(e.left)
			visit(e.right)
		elif isinstance(e, Negated):
			visit(e.operand)
		elif not isinstance(e, Literal) and not any(e is f for f in found):
			found.append(e)

	visit(expr)
	return found


########################################################################################################################
# LOWERING
########################################################################################################################
_UPDATE = {'=': None, '+=': '+', '-=': '-', '*=': '*', '/=': '/'}


def pointwise(expr, out, op: str = '='):
	"""
	Evaluate `out op expr` at every node of the output's space through a direct parallel loop. The expression
	becomes a kernel taking one value per node of every Function and the value of every Constant.
	:param expr: pointwise expression, Function, Constant or number
	:param out: Function receiving the result
	:param op: '=', '+=', '-=', '*=' or '/='
	"""
	from fem.function import (
		Constant,
		Function
	)

	assert op in _UPDATE, f'unknown pointwise update {op!r}'
	expr = as_expr(expr)
	space = out.function_space()
	leaves = terminals(expr)

	functions = [f for f in leaves if isinstance(f, Function) and f is not out]
	constants = [c for c in leaves if isinstance(c, Constant)]
	for f in functions:
		if not f.function_space().compatible(space):
			raise SpaceMismatch(f'{f.name} lives on {f.function_space()!r}, the output on {space!r}')

	names = {id(out): 'out'}
	names.update({id(f): f'f{k}' for k, f in enumerate(functions)})
	names.update({id(c): f'c{k}' for k, c in enumerate(constants)})

	def lower(e: PointwiseExpr) -> Expr:
		if isinstance(e, Literal):
			return Const(e.value)
		if isinstance(e, BinaryExpr):
			return BinOp(e.op, lower(e.left), lower(e.right))
		if isinstance(e, Negated):
			return UnaryOp('neg', lower(e.operand))
		if isinstance(e, Constant):
			return idx(names[id(e)], 0)
		return idx(names[id(e)], 'c')

	value = lower(expr)
	target = idx('out', 'c')
	if op == '+=':
		statement = Increment(target, value)
	elif op == '=':
		statement = Assign(target, value)
	else:
		statement = Assign(target, BinOp(_UPDATE[op], target, value))

	dim = space.dim
	params = (Param('out', (dim,)),) + tuple(Param(names[id(f)], (dim,)) for f in functions) + \
			 tuple(Param(names[id(c)], (1,)) for c in constants)
	ast = KernelAst('pointwise', params, (For('c', 0, dim, (statement,)),))

	reads_out = op != '=' or any(leaf is out for leaf in leaves)
	args = [out.dat(Access.rw if reads_out else Access.write)]
	args += [f.dat(Access.read) for f in functions]
	args += [c.glob(Access.read) for c in constants]

	logger.debug(f'Pointwise {op} into {out.name} over {space.node_set!r}.')
	par_loop(_kernel(ast), space.node_set, *args)


@lru_cache(maxsize=256)
def _kernel(ast: KernelAst) -> Kernel:
	return Kernel(ast)
