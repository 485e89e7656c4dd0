from __future__ import annotations

import math

from dataclasses import (
	dataclass,
	field
)
from typing import (
	Iterator,
	Optional,
	Union
)

from kernel_ir.exceptions import (
	ShapeMismatch,
	UnboundIdentifier
)


BINARY_OPS = ('+', '-', '*', '/', 'fmin', 'fmax')
UNARY_OPS = ('neg', 'sqrt', 'sin', 'cos')


########################################################################################################################
# EXPRESSIONS
########################################################################################################################
class Expr:
	"""
	Arithmetic sugar shared by every expression node, so kernels can be written as `A[i] * 2 + x`.
	"""
	def __add__(self, other):
		return BinOp('+', self, wrap(other))

	def __radd__(self, other):
		return BinOp('+', wrap(other), self)

	def __sub__(self, other):
		return BinOp('-', self, wrap(other))

	def __rsub__(self, other):
		return BinOp('-', wrap(other), self)

	def __mul__(self, other):
		return BinOp('*', self, wrap(other))

	def __rmul__(self, other):
		return BinOp('*', wrap(other), self)

	def __truediv__(self, other):
		return BinOp('/', self, wrap(other))

	def __rtruediv__(self, other):
		return BinOp('/', wrap(other), self)

	def __neg__(self):
		return UnaryOp('neg', self)


@dataclass(frozen=True)
class Const(Expr):
	value: Union[int, float]


@dataclass(frozen=True)
class Var(Expr):
	"""
	A loop variable or a rank-0 parameter/local.
	"""
	name: str


@dataclass(frozen=True)
class Index(Expr):
	name: str
	indices: tuple[Expr, ...]


@dataclass(frozen=True)
class BinOp(Expr):
	op: str
	left: Expr
	right: Expr

	def __post_init__(self):
		assert self.op in BINARY_OPS, f'unknown binary operator {self.op!r}'


@dataclass(frozen=True)
class UnaryOp(Expr):
	op: str
	operand: Expr

	def __post_init__(self):
		assert self.op in UNARY_OPS, f'unknown unary operator {self.op!r}'


def wrap(value) -> Expr:
	if isinstance(value, Expr):
		return value
	if isinstance(value, (int, float)):
		return Const(value)
	raise TypeError(f'cannot use {value!r} in a kernel expression')


def idx(name: str, *indices) -> Index:
	return Index(name, tuple(wrap(i) if not isinstance(i, str) else Var(i) for i in indices))


def sqrt(x) -> UnaryOp:
	return UnaryOp('sqrt', wrap(x))


def sin(x) -> UnaryOp:
	return UnaryOp('sin', wrap(x))


def cos(x) -> UnaryOp:
	return UnaryOp('cos', wrap(x))


def fmin(a, b) -> BinOp:
	return BinOp('fmin', wrap(a), wrap(b))


def fmax(a, b) -> BinOp:
	return BinOp('fmax', wrap(a), wrap(b))


########################################################################################################################
# STATEMENTS
########################################################################################################################
@dataclass(frozen=True)
class Decl:
	"""
	Local array (or scalar when extents is empty), zero-filled unless a flat row-major `init` is given.
	"""
	name: str
	extents: tuple[int, ...] = ()
	init: Optional[tuple[float, ...]] = None

	def __post_init__(self):
		if self.init is not None and len(self.init) != math.prod(self.extents):
			raise ShapeMismatch(f'{self.name}: initializer has {len(self.init)} values for extents {self.extents}')


@dataclass(frozen=True)
class Assign:
	target: Union[Var, Index]
	value: Expr


@dataclass(frozen=True)
class Increment:
	target: Union[Var, Index]
	value: Expr


@dataclass(frozen=True)
class For:
	var: str
	start: int
	stop: int
	body: tuple[Statement, ...]

	@property
	def trip(self) -> int:
		return max(self.stop - self.start, 0)


Statement = Union[Decl, Assign, Increment, For]


@dataclass(frozen=True)
class Param:
	name: str
	extents: tuple[int, ...] = ()

	@property
	def rank(self) -> int:
		return len(self.extents)

	@property
	def size(self) -> int:
		return math.prod(self.extents)


@dataclass(frozen=True)
class KernelAst:
	"""
	A kernel: named parameters with fixed extents and a body of statements. `padding` maps a parameter or
	local name to the extents of its storage when they differ from the logical ones.
	"""
	name: str
	params: tuple[Param, ...]
	body: tuple[Statement, ...] = ()
	padding: tuple[tuple[str, tuple[int, ...]], ...] = field(default=())

	def storage_extents(self, name: str, extents: tuple[int, ...]) -> tuple[int, ...]:
		return dict(self.padding).get(name, extents)

	def validate(self) -> KernelAst:
		"""
		Check that every identifier is bound and every loop has literal integer bounds.
		:return: the kernel itself, for chaining
		"""
		check_bindings(self)
		return self


########################################################################################################################
# TRAVERSAL
########################################################################################################################
def iter_expr(expr: Expr) -> Iterator[Expr]:
	"""
	Pre-order walk over an expression, index expressions included.
	"""
	yield expr
	if isinstance(expr, Index):
		for i in expr.indices:
			yield from iter_expr(i)
	elif isinstance(expr, BinOp):
		yield from iter_expr(expr.left)
		yield from iter_expr(expr.right)
	elif isinstance(expr, UnaryOp):
		yield from iter_expr(expr.operand)


def iter_statements(body: tuple[Statement, ...]) -> Iterator[Statement]:
	for stmt in body:
		yield stmt
		if isinstance(stmt, For):
			yield from iter_statements(stmt.body)


def statement_exprs(stmt: Statement) -> Iterator[Expr]:
	if isinstance(stmt, (Assign, Increment)):
		yield stmt.target
		yield stmt.value


def referenced_names(expr: Expr) -> set[str]:
	return {e.name for e in iter_expr(expr) if isinstance(e, (Var, Index))}


def written_names(body: tuple[Statement, ...]) -> set[str]:
	"""
	Storage declared or assigned anywhere in a statement list, nested loops included.
	"""
	names = set()
	for stmt in iter_statements(body):
		if isinstance(stmt, Decl):
			names.add(stmt.name)
		elif isinstance(stmt, (Assign, Increment)):
			names.add(stmt.target.name)
	return names


def loop_vars(body: tuple[Statement, ...]) -> set[str]:
	return {stmt.var for stmt in iter_statements(body) if isinstance(stmt, For)}


def all_names(ast: KernelAst) -> set[str]:
	names = {p.name for p in ast.params} | loop_vars(ast.body) | written_names(ast.body)
	for stmt in iter_statements(ast.body):
		for expr in statement_exprs(stmt):
			names |= referenced_names(expr)
	return names


def check_bindings(ast: KernelAst):
	ranks = {p.name: p.rank for p in ast.params}

	def check_expr(expr: Expr, scope: dict[str, int], loops: set[str]):
		for e in iter_expr(expr):
			if isinstance(e, Var) and e.name not in loops:
				if e.name not in scope:
					raise UnboundIdentifier(f'{ast.name}: {e.name!r} is not a parameter, local or loop variable')
				if scope[e.name]:
					raise ShapeMismatch(f'{ast.name}: {e.name!r} has rank {scope[e.name]} and needs indices')
			if isinstance(e, Index):
				if e.name not in scope:
					raise UnboundIdentifier(f'{ast.name}: {e.name!r} is not a parameter or local array')
				if len(e.indices) != scope[e.name]:
					raise ShapeMismatch(f'{ast.name}: {e.name!r} has rank {scope[e.name]}, indexed with '
										f'{len(e.indices)} indices')

	def check_body(body: tuple[Statement, ...], scope: dict[str, int], loops: set[str]):
		scope = dict(scope)
		for stmt in body:
			if isinstance(stmt, Decl):
				scope[stmt.name] = len(stmt.extents)
			elif isinstance(stmt, For):
				if not isinstance(stmt.start, int) or not isinstance(stmt.stop, int):
					raise ShapeMismatch(f'{ast.name}: loop {stmt.var!r} must have literal integer bounds')
				check_body(stmt.body, scope, loops | {stmt.var})
			else:
				if isinstance(stmt.target, Var) and stmt.target.name not in scope:
					raise UnboundIdentifier(f'{ast.name}: cannot assign to {stmt.target.name!r}')
				check_expr(stmt.target, scope, loops)
				check_expr(stmt.value, scope, loops)

	check_body(ast.body, ranks, set())
