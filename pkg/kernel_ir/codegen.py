import numpy as np
import re

from functools import lru_cache
from loguru import logger
from typing import Callable

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


_NUMPY_CALLS = {
	'fmin': 'np.fmin',
	'fmax': 'np.fmax',
	'sqrt': 'np.sqrt',
	'sin': 'np.sin',
	'cos': 'np.cos',
}


class _Writer:
	"""
	Renders a kernel as a Python function over a leading batch axis: every local and parameter carries one
	row per kernel instance, constant tables are shared.
	"""
	def __init__(self, ast: KernelAst):
		self.ast = ast
		self.lines = []
		self.constants = {}
		# initialized locals that are never assigned are shared read-only tables without a batch axis
		self.tables = {s.name for s in iter_statements(ast.body)
					   if isinstance(s, Decl) and s.init is not None and s.name not in _assigned(ast.body)}

	def emit(self, depth: int, line: str):
		self.lines.append('\t' * depth + line)

	def index(self, expr: Expr) -> str:
		if isinstance(expr, Const):
			return str(int(expr.value))
		if isinstance(expr, Var):
			return f'i_{expr.name}'
		if isinstance(expr, BinOp):
			return f'({self.index(expr.left)} {expr.op} {self.index(expr.right)})'
		raise TypeError(f'{expr!r} cannot be used as an index')

	def access(self, name: str, indices: tuple[Expr, ...]) -> str:
		rendered = [self.index(i) for i in indices]
		if name in self.tables:
			return f'v_{name}[{", ".join(rendered)}]' if rendered else f'v_{name}'
		return f'v_{name}[{", ".join([":"] + rendered)}]'

	def value(self, expr: Expr, loops: set[str]) -> str:
		if isinstance(expr, Const):
			return repr(expr.value) if expr.value >= 0 else f'({expr.value!r})'
		if isinstance(expr, Var):
			return f'i_{expr.name}' if expr.name in loops else self.access(expr.name, ())
		if isinstance(expr, Index):
			return self.access(expr.name, expr.indices)
		if isinstance(expr, BinOp):
			left, right = self.value(expr.left, loops), self.value(expr.right, loops)
			if expr.op in _NUMPY_CALLS:
				return f'{_NUMPY_CALLS[expr.op]}({left}, {right})'
			return f'({left} {expr.op} {right})'
		if isinstance(expr, UnaryOp):
			operand = self.value(expr.operand, loops)
			return f'(-{operand})' if expr.op == 'neg' else f'{_NUMPY_CALLS[expr.op]}({operand})'
		raise TypeError(f'unknown expression node {expr!r}')

	def target(self, target) -> str:
		if isinstance(target, Var):
			return f'v_{target.name}[...]'
		return self.access(target.name, target.indices)

	def body(self, body: tuple[Statement, ...], depth: int, loops: set[str]):
		if not body:
			self.emit(depth, 'pass')
		for stmt in body:
			if isinstance(stmt, Decl):
				self.decl(stmt, depth)
			elif isinstance(stmt, Assign):
				self.emit(depth, f'{self.target(stmt.target)} = {self.value(stmt.value, loops)}')
			elif isinstance(stmt, Increment):
				self.emit(depth, f'{self.target(stmt.target)} += {self.value(stmt.value, loops)}')
			elif isinstance(stmt, For):
				self.emit(depth, f'for i_{stmt.var} in range({stmt.start}, {stmt.stop}):')
				self.body(stmt.body, depth + 1, loops | {stmt.var})

	def decl(self, stmt: Decl, depth: int):
		storage = self.ast.storage_extents(stmt.name, stmt.extents)
		if stmt.init is not None:
			table = np.zeros(storage, dtype=np.float64)
			table[tuple(slice(0, e) for e in stmt.extents)] = np.asarray(stmt.init).reshape(stmt.extents)
			self.constants[f'c_{stmt.name}'] = table
			if stmt.name in self.tables:
				self.emit(depth, f'v_{stmt.name} = c_{stmt.name}')
			else:
				self.emit(depth, f'v_{stmt.name} = np.broadcast_to(c_{stmt.name}, (nb, *c_{stmt.name}.shape)).copy()')
		else:
			self.emit(depth, f'v_{stmt.name} = np.zeros((nb, *{storage!r}))')

	def function(self) -> str:
		ast = self.ast
		arguments = ', '.join(['nb'] + [f'a_{p.name}' for p in ast.params])
		self.emit(0, f'def {function_name(ast)}({arguments}):')

		copy_back = []
		for p in ast.params:
			storage = ast.storage_extents(p.name, p.extents)
			self.emit(1, f'r_{p.name} = a_{p.name}.reshape((nb, *{p.extents!r}))')
			if storage == p.extents:
				self.emit(1, f'v_{p.name} = r_{p.name}')
				continue
			logical = ', '.join([':'] + [f':{e}' for e in p.extents])
			self.emit(1, f'v_{p.name} = np.zeros((nb, *{storage!r}))')
			self.emit(1, f'v_{p.name}[{logical}] = r_{p.name}')
			copy_back.append(f'r_{p.name}[...] = v_{p.name}[{logical}]')

		self.body(ast.body, 1, set())
		for line in copy_back:
			self.emit(1, line)
		return '\n'.join(self.lines) + '\n'


def _assigned(body: tuple[Statement, ...]) -> set[str]:
	return {s.target.name for s in iter_statements(body) if isinstance(s, (Assign, Increment))}


def function_name(ast: KernelAst) -> str:
	return 'kernel_' + re.sub(r'\W', '_', ast.name)


@lru_cache(maxsize=512)
def compile_batched(ast: KernelAst) -> tuple[Callable, str]:
	"""
	Lower a kernel to a numpy function that runs one kernel instance per row of a leading batch axis.
	Each parameter array has shape (nb, *extents) and is updated in place.
	:param ast: kernel to lower
	:return: the compiled function, called as fn(nb, *arrays), and its Python source
	"""
	writer = _Writer(ast)
	source = writer.function()
	namespace = {'np': np, **writer.constants}
	exec(compile(source, f'<kernel {ast.name}>', 'exec'), namespace)
	logger.debug(f'Compiled kernel {ast.name} ({len(writer.lines)} lines).')
	return namespace[function_name(ast)], source
