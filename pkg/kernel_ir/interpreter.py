import numpy as np

from typing import Sequence

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
	Var
)
from kernel_ir.exceptions import (
	ShapeMismatch,
	UnboundIdentifier
)


_BINARY = {
	'+': lambda a, b: a + b,
	'-': lambda a, b: a - b,
	'*': lambda a, b: a * b,
	'/': lambda a, b: a / b,
	'fmin': np.fmin,
	'fmax': np.fmax,
}

_UNARY = {
	'neg': lambda a: -a,
	'sqrt': np.sqrt,
	'sin': np.sin,
	'cos': np.cos,
}


class _Frame:
	def __init__(self, kernel_name: str):
		self.kernel_name = kernel_name
		self.storage = {}
		self.extents = {}
		self.loops = {}

	def lookup(self, name: str) -> np.ndarray:
		try:
			return self.storage[name]
		except KeyError:
			raise UnboundIdentifier(f'{self.kernel_name}: {name!r} is not bound') from None

	def declare(self, name: str, extents: tuple, storage: np.ndarray):
		self.storage[name] = storage
		self.extents[name] = extents

	def position(self, expr: Index) -> tuple:
		extents = self.extents.get(expr.name)
		if extents is None:
			raise UnboundIdentifier(f'{self.kernel_name}: {expr.name!r} is not bound')
		position = tuple(_index(i, self) for i in expr.indices)
		if len(position) != len(extents) or any(not 0 <= p < e for p, e in zip(position, extents)):
			raise ShapeMismatch(f'{self.kernel_name}: {expr.name}{list(position)} is outside extents {extents}')
		return position


def _index(expr: Expr, frame: _Frame) -> int:
	if isinstance(expr, Const):
		return int(expr.value)
	if isinstance(expr, Var):
		if expr.name not in frame.loops:
			raise UnboundIdentifier(f'{frame.kernel_name}: index {expr.name!r} is not a loop variable')
		return frame.loops[expr.name]
	if isinstance(expr, BinOp) and expr.op in ('+', '-', '*'):
		return int(_BINARY[expr.op](_index(expr.left, frame), _index(expr.right, frame)))
	raise ShapeMismatch(f'{frame.kernel_name}: {expr!r} is not an integer index expression')


def _value(expr: Expr, frame: _Frame) -> np.float64:
	if isinstance(expr, Const):
		return np.float64(expr.value)
	if isinstance(expr, Var):
		if expr.name in frame.loops:
			return np.float64(frame.loops[expr.name])
		return frame.lookup(expr.name)[()]
	if isinstance(expr, Index):
		return frame.lookup(expr.name)[frame.position(expr)]
	if isinstance(expr, BinOp):
		return _BINARY[expr.op](_value(expr.left, frame), _value(expr.right, frame))
	if isinstance(expr, UnaryOp):
		return _UNARY[expr.op](_value(expr.operand, frame))
	raise TypeError(f'unknown expression node {expr!r}')


def _store(target, value, frame: _Frame, accumulate: bool):
	storage = frame.lookup(target.name)
	position = frame.position(target) if isinstance(target, Index) else ()
	if accumulate:
		storage[position] = storage[position] + value
	else:
		storage[position] = value


def _run(body: tuple[Statement, ...], frame: _Frame, ast: KernelAst):
	for stmt in body:
		if isinstance(stmt, Decl):
			frame.declare(stmt.name, stmt.extents, _allocate(ast, stmt.name, stmt.extents, stmt.init))
		elif isinstance(stmt, Assign):
			_store(stmt.target, _value(stmt.value, frame), frame, accumulate=False)
		elif isinstance(stmt, Increment):
			_store(stmt.target, _value(stmt.value, frame), frame, accumulate=True)
		elif isinstance(stmt, For):
			outer = frame.loops.get(stmt.var)
			for i in range(stmt.start, stmt.stop):
				frame.loops[stmt.var] = i
				_run(stmt.body, frame, ast)
			if outer is None:
				frame.loops.pop(stmt.var, None)
			else:
				frame.loops[stmt.var] = outer
		else:
			raise TypeError(f'unknown statement node {stmt!r}')


def _logical(extents: tuple) -> tuple:
	return tuple(slice(0, e) for e in extents)


def _allocate(ast: KernelAst, name: str, extents: tuple, init=None) -> np.ndarray:
	storage = np.zeros(ast.storage_extents(name, extents), dtype=np.float64)
	if init is not None:
		storage[_logical(extents)] = np.asarray(init, dtype=np.float64).reshape(extents)
	return storage


def interpret(ast: KernelAst, args: Sequence[np.ndarray]):
	"""
	Reference semantics of a kernel: statements run in order, loops ascend, every arithmetic operation is a
	float64 operation applied in the order the expression tree gives. Arguments are updated in place.
	:param ast: kernel to run
	:param args: one array per parameter, with as many elements as the parameter's extents
	"""
	if len(args) != len(ast.params):
		raise ShapeMismatch(f'{ast.name}: expected {len(ast.params)} arguments, got {len(args)}')

	frame = _Frame(ast.name)
	write_back = []
	for param, arg in zip(ast.params, args):
		if not isinstance(arg, np.ndarray) or arg.size != param.size:
			raise ShapeMismatch(f'{ast.name}: argument for {param.name!r} must be an array of {param.size} values')

		padded = ast.storage_extents(param.name, param.extents)
		if padded == param.extents and arg.dtype == np.float64 and arg.shape == param.extents:
			frame.declare(param.name, param.extents, arg)
			continue

		storage = _allocate(ast, param.name, param.extents, arg.reshape(-1))
		frame.declare(param.name, param.extents, storage)
		write_back.append((arg, storage, param.extents))

	_run(ast.body, frame, ast)

	for arg, storage, extents in write_back:
		arg[...] = storage[_logical(extents)].reshape(arg.shape)
