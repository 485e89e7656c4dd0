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
	iter_statements
)


INDENT = '  '


def _number(value) -> str:
	if isinstance(value, int):
		return str(value)
	return repr(float(value))


def _expr(expr: Expr, scalars_by_pointer: set[str]) -> str:
	if isinstance(expr, Const):
		return _number(expr.value)
	if isinstance(expr, Var):
		return f'*{expr.name}' if expr.name in scalars_by_pointer else expr.name
	if isinstance(expr, Index):
		return expr.name + ''.join(f'[{_expr(i, scalars_by_pointer)}]' for i in expr.indices)
	if isinstance(expr, BinOp):
		left, right = _expr(expr.left, scalars_by_pointer), _expr(expr.right, scalars_by_pointer)
		if expr.op in ('fmin', 'fmax'):
			return f'{expr.op}({left}, {right})'
		return f'({left} {expr.op} {right})'
	if isinstance(expr, UnaryOp):
		operand = _expr(expr.operand, scalars_by_pointer)
		return f'(-{operand})' if expr.op == 'neg' else f'{expr.op}({operand})'
	raise TypeError(f'unknown expression node {expr!r}')


def _dims(extents: tuple) -> str:
	return ''.join(f'[{e}]' for e in extents)


def _statements(body: tuple[Statement, ...], depth: int, ast: KernelAst, constant: set[str],
				pointers: set[str]) -> list[str]:
	pad = INDENT * depth
	lines = []
	for stmt in body:
		if isinstance(stmt, Decl):
			storage = ast.storage_extents(stmt.name, stmt.extents)
			note = f' /* logical {_dims(stmt.extents)} */' if storage != stmt.extents else ''
			if stmt.init is None:
				init = ' = {0}' if storage else ' = 0.0'
			else:
				init = ' = {' + ', '.join(_number(v) for v in stmt.init) + '}' if storage \
					else f' = {_number(stmt.init[0])}'
			qualifier = 'static const double' if stmt.name in constant else 'double'
			lines.append(f'{pad}{qualifier} {stmt.name}{_dims(storage)}{init};{note}')
		elif isinstance(stmt, (Assign, Increment)):
			op = '=' if isinstance(stmt, Assign) else '+='
			target = _expr(stmt.target, pointers)
			lines.append(f'{pad}{target} {op} {_expr(stmt.value, pointers)};')
		elif isinstance(stmt, For):
			lines.append(f'{pad}for (int {stmt.var} = {stmt.start}; {stmt.var} < {stmt.stop}; {stmt.var}++)')
			lines.append(f'{pad}{{')
			lines.extend(_statements(stmt.body, depth + 1, ast, constant, pointers))
			lines.append(f'{pad}}}')
	return lines


def emit_source(ast: KernelAst) -> str:
	"""
	C-like rendering of a kernel for inspection. Output is deterministic; it is never parsed back.
	"""
	assigned = {s.target.name for s in iter_statements(ast.body) if isinstance(s, (Assign, Increment))}
	constant = {s.name for s in iter_statements(ast.body)
				if isinstance(s, Decl) and s.init is not None and s.name not in assigned}
	pointers = {p.name for p in ast.params if not p.extents}

	params = []
	for p in ast.params:
		storage = ast.storage_extents(p.name, p.extents)
		params.append(f'double {p.name}{_dims(storage)}' if p.extents else f'double *{p.name}')

	lines = [f'void {ast.name}({", ".join(params)})', '{']
	lines.extend(_statements(ast.body, 1, ast, constant, pointers))
	lines.append('}')
	return '\n'.join(lines) + '\n'
