import numpy as np

from dataclasses import replace
from loguru import logger
from typing import (
	Callable,
	Optional
)

from kernel_ir.ast import (
	Assign,
	BinOp,
	Const,
	Decl,
	Expr,
	For,
	Increment,
	Index,
	KernelAst,
	Statement,
	UnaryOp,
	Var,
	all_names,
	iter_statements,
	loop_vars,
	referenced_names,
	written_names
)
from kernel_ir.exceptions import (
	InvalidVectorWidth,
	NonDividingFactor,
	UnboundIdentifier
)


VECTOR_WIDTHS = (2, 4, 8)


class _Names:
	"""
	Hands out identifiers not used anywhere in a kernel.
	"""
	def __init__(self, used: set[str]):
		self.used = set(used)
		self.generated = set()

	def _take(self, name: str) -> str:
		self.used.add(name)
		self.generated.add(name)
		return name

	def numbered(self, prefix: str) -> str:
		k = 0
		while f'{prefix}{k}' in self.used:
			k += 1
		return self._take(f'{prefix}{k}')

	def fresh(self, base: str) -> str:
		if base not in self.used:
			return self._take(base)
		return self.numbered(f'{base}_')


def _map_expr(expr: Expr, fn: Callable[[Expr], Expr]) -> Expr:
	"""
	Bottom-up rewrite: children first, then `fn` on the rebuilt node.
	"""
	if isinstance(expr, Index):
		expr = Index(expr.name, tuple(_map_expr(i, fn) for i in expr.indices))
	elif isinstance(expr, BinOp):
		expr = BinOp(expr.op, _map_expr(expr.left, fn), _map_expr(expr.right, fn))
	elif isinstance(expr, UnaryOp):
		expr = UnaryOp(expr.op, _map_expr(expr.operand, fn))
	return fn(expr)


def _map_body(body: tuple[Statement, ...], fn: Callable[[Expr], Expr]) -> tuple[Statement, ...]:
	out = []
	for stmt in body:
		if isinstance(stmt, (Assign, Increment)):
			out.append(replace(stmt, target=_map_expr(stmt.target, fn), value=_map_expr(stmt.value, fn)))
		elif isinstance(stmt, For):
			out.append(replace(stmt, body=_map_body(stmt.body, fn)))
		else:
			out.append(stmt)
	return tuple(out)


########################################################################################################################
# CONSTANT FOLDING
########################################################################################################################
_FOLD_BINARY = {
	'+': np.add,
	'-': np.subtract,
	'*': np.multiply,
	'/': np.divide,
	'fmin': np.fmin,
	'fmax': np.fmax,
}

_FOLD_UNARY = {
	'neg': np.negative,
	'sqrt': np.sqrt,
	'sin': np.sin,
	'cos': np.cos,
}


def _is_const(expr: Expr, value) -> bool:
	return isinstance(expr, Const) and expr.value == value


def _fold_node(expr: Expr) -> Expr:
	if isinstance(expr, BinOp):
		left, right = expr.left, expr.right
		if isinstance(left, Const) and isinstance(right, Const):
			if isinstance(left.value, int) and isinstance(right.value, int) and expr.op in ('+', '-', '*'):
				return Const(_FOLD_BINARY[expr.op](left.value, right.value).item())
			with np.errstate(all='ignore'):
				folded = _FOLD_BINARY[expr.op](np.float64(left.value), np.float64(right.value))
			return Const(float(folded)) if np.isfinite(folded) else expr
		if expr.op == '*' and _is_const(right, 1):
			return left
		if expr.op == '*' and _is_const(left, 1):
			return right
		if expr.op == '+' and _is_const(right, 0):
			return left
		if expr.op == '+' and _is_const(left, 0):
			return right
		if expr.op in ('-', '/') and _is_const(right, 0 if expr.op == '-' else 1):
			return left
		return expr

	if isinstance(expr, UnaryOp) and isinstance(expr.operand, Const):
		value = expr.operand.value
		if expr.op == 'neg':
			return Const(-value)
		with np.errstate(all='ignore'):
			folded = _FOLD_UNARY[expr.op](np.float64(value))
		return Const(float(folded)) if np.isfinite(folded) else expr

	return expr


def fold_constants(ast: KernelAst) -> KernelAst:
	"""
	Evaluate literal-only subexpressions and drop multiplications by one and additions of zero.
	"""
	return replace(ast, body=_map_body(ast.body, _fold_node))


########################################################################################################################
# LOOP-INVARIANT HOISTING
########################################################################################################################
def _is_temp_pair(first: Statement, second: Statement, names: _Names) -> bool:
	return isinstance(first, Decl) and first.name in names.generated and first.extents == () \
		and isinstance(second, Assign) and second.target == Var(first.name)


def _extract(expr: Expr, variant: set[str], found: dict[Expr, str], names: _Names) -> Expr:
	"""
	Replace the largest invariant subtrees of `expr` by temporaries. Leaves and anything inside an index are
	left alone.
	"""
	if isinstance(expr, (BinOp, UnaryOp)):
		if not referenced_names(expr) & variant:
			if expr not in found:
				found[expr] = names.numbered('t')
			return Var(found[expr])
		if isinstance(expr, BinOp):
			return BinOp(expr.op, _extract(expr.left, variant, found, names),
						 _extract(expr.right, variant, found, names))
		return UnaryOp(expr.op, _extract(expr.operand, variant, found, names))
	return expr


def _hoist_loop(loop: For, names: _Names) -> list[Statement]:
	body = list(_hoist_body(loop.body, names))
	if loop.trip == 0:
		return [replace(loop, body=tuple(body))]

	def variant_names() -> set[str]:
		return {loop.var} | written_names(tuple(body)) | loop_vars(tuple(body))

	# temporaries placed in front of inner loops move further out when this loop does not affect them
	hoisted = []
	moved = True
	while moved:
		moved = False
		variant = variant_names()
		for k in range(len(body) - 1):
			if _is_temp_pair(body[k], body[k + 1], names) and not referenced_names(body[k + 1].value) & variant:
				hoisted.extend(body[k:k + 2])
				del body[k:k + 2]
				moved = True
				break

	variant = variant_names()
	found = {}
	rewritten = []
	for stmt in body:
		if isinstance(stmt, (Assign, Increment)):
			stmt = replace(stmt, value=_extract(stmt.value, variant, found, names))
		rewritten.append(stmt)

	for expr, name in found.items():
		hoisted.extend([Decl(name), Assign(Var(name), expr)])

	return hoisted + [replace(loop, body=tuple(rewritten))]


def _hoist_body(body: tuple[Statement, ...], names: _Names) -> tuple[Statement, ...]:
	out = []
	for stmt in body:
		if isinstance(stmt, For):
			out.extend(_hoist_loop(stmt, names))
		else:
			out.append(stmt)
	return tuple(out)


def hoist_invariants(ast: KernelAst) -> KernelAst:
	"""
	Loop-invariant code motion, innermost loop first. Inside a loop, every largest subexpression that reads
	neither the loop variable nor any storage written in the loop is computed once into a fresh scalar
	declared just before the loop. Identical subexpressions share one temporary. Subtrees move whole, so
	the floating-point operations themselves are unchanged.
	"""
	names = _Names(all_names(ast))
	hoisted = replace(ast, body=_hoist_body(ast.body, names))
	if names.generated:
		logger.debug(f'Hoisted {len(names.generated)} invariant subexpressions out of kernel {ast.name}.')
	return hoisted


########################################################################################################################
# UNROLLING
########################################################################################################################
def _substitute_body(body: tuple[Statement, ...], var: Optional[str], value: Optional[Expr],
					 renames: dict[str, str]) -> tuple[Statement, ...]:
	def rename(expr: Expr) -> Expr:
		if isinstance(expr, Var):
			if expr.name == var:
				return value
			return Var(renames.get(expr.name, expr.name))
		if isinstance(expr, Index):
			return Index(renames.get(expr.name, expr.name), expr.indices)
		return expr

	out = []
	for stmt in body:
		if isinstance(stmt, Decl):
			out.append(replace(stmt, name=renames.get(stmt.name, stmt.name)))
		elif isinstance(stmt, For):
			inner_var = None if stmt.var == var else var
			out.append(replace(stmt, body=_substitute_body(stmt.body, inner_var, value, renames)))
		else:
			out.append(replace(stmt, target=_map_expr(stmt.target, rename), value=_map_expr(stmt.value, rename)))
	return tuple(out)


def _unroll_loop(loop: For, factor: int, names: _Names) -> list[Statement]:
	trip = loop.trip
	if factor < 1 or trip % factor:
		raise NonDividingFactor(loop.var, trip, factor)
	if factor == 1:
		return [loop]

	local = [s.name for s in iter_statements(loop.body) if isinstance(s, Decl)]
	copies = []
	for k in range(factor):
		if factor == trip:
			position = Const(loop.start + k)
		else:
			position = BinOp('*', Const(factor), Var(loop.var))
			if loop.start + k:
				position = BinOp('+', position, Const(loop.start + k))
		renames = {name: names.fresh(f'{name}_u{k}') for name in local} if k else {}
		copies.extend(_substitute_body(loop.body, loop.var, position, renames))

	if factor == trip:
		return copies
	return [For(loop.var, 0, trip // factor, tuple(copies))]


def unroll(ast: KernelAst, loop_var: str, factor: int) -> KernelAst:
	"""
	Unroll the first loop (in source order) over `loop_var` by `factor`. The body is replicated with the loop
	variable substituted, locals declared in the body get a fresh name per copy, and a factor equal to the
	trip count removes the loop altogether.
	:param ast: kernel to transform
	:param loop_var: variable of the loop to unroll
	:param factor: replication factor, must divide the trip count
	:return: the transformed kernel
	"""
	names = _Names(all_names(ast))
	found = False

	def visit(body: tuple[Statement, ...]) -> tuple[Statement, ...]:
		nonlocal found
		out = []
		for stmt in body:
			if isinstance(stmt, For) and stmt.var == loop_var and not found:
				found = True
				out.extend(_unroll_loop(stmt, factor, names))
			elif isinstance(stmt, For):
				out.append(replace(stmt, body=visit(stmt.body)))
			else:
				out.append(stmt)
		return tuple(out)

	body = visit(ast.body)
	if not found:
		raise UnboundIdentifier(f'{ast.name}: no loop over {loop_var!r}')
	return replace(ast, body=body)


########################################################################################################################
# PADDING
########################################################################################################################
def pad_extents(ast: KernelAst, vector_width: int) -> KernelAst:
	"""
	Round the innermost extent of every parameter and local array up to a multiple of `vector_width`. Only
	the storage grows: loop bounds and logical extents stay, the padded storage is recorded in `padding`.
	"""
	if vector_width not in VECTOR_WIDTHS:
		raise InvalidVectorWidth(f'vector width must be one of {VECTOR_WIDTHS}, got {vector_width}')

	arrays = [(p.name, p.extents) for p in ast.params]
	arrays += [(s.name, s.extents) for s in iter_statements(ast.body) if isinstance(s, Decl)]

	padding = dict(ast.padding)
	for name, extents in arrays:
		if not extents:
			continue
		current = padding.get(name, extents)
		padded = -(-extents[-1] // vector_width) * vector_width
		if padded > current[-1]:
			padding[name] = extents[:-1] + (padded,)

	if padding == dict(ast.padding):
		return ast
	return replace(ast, padding=tuple(sorted(padding.items())))


def optimize(ast: KernelAst, hoist: bool = True, fold: bool = True, pad: Optional[int] = None) -> KernelAst:
	"""
	Standard pipeline: constant folding, then hoisting, then optional padding.
	"""
	if fold:
		ast = fold_constants(ast)
	if hoist:
		ast = hoist_invariants(ast)
	if pad is not None:
		ast = pad_extents(ast, pad)
	return ast
