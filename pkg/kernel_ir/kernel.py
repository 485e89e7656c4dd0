import numpy as np

from functools import cached_property
from typing import (
	Callable,
	Optional,
	Sequence
)

from kernel_ir.ast import (
	KernelAst,
	Param
)
from kernel_ir.codegen import compile_batched
from kernel_ir.emit import emit_source
from kernel_ir.interpreter import interpret


class Kernel:
	"""
	The local computation of a parallel loop. A kernel carries an AST, a host callable, or both; when both are
	given the callable runs and the AST supplies the parameter extents and the printable source.

	Execution strategies:
	- AST only: the AST is compiled to a numpy function over a batch of instances;
	- host callable: called once per instance with that instance's staged arrays, or once per batch when
	  `batched` is set;
	- `interpret=True`: the AST is interpreted instance by instance (reference semantics).
	"""
	def __init__(self, ast: Optional[KernelAst] = None, host_fn: Optional[Callable] = None,
				 name: Optional[str] = None, batched: bool = False, interpret: bool = False):
		assert ast is not None or host_fn is not None, 'a kernel needs an AST or a host callable'
		assert not interpret or ast is not None, 'interpretation needs an AST'
		self.ast = ast.validate() if ast is not None else None
		self.host_fn = host_fn
		self.batched = batched
		self.interpret = interpret
		self.name = name or (ast.name if ast is not None else getattr(host_fn, '__name__', 'kernel'))

	def __repr__(self):
		return f'Kernel({self.name!r})'

	@property
	def params(self) -> Optional[tuple[Param, ...]]:
		return self.ast.params if self.ast is not None else None

	@cached_property
	def _compiled(self) -> tuple[Callable, str]:
		return compile_batched(self.ast)

	@property
	def generated_source(self) -> Optional[str]:
		"""
		Python source the AST is lowered to, for debugging.
		"""
		return self._compiled[1] if self.ast is not None else None

	@property
	def source(self) -> Optional[str]:
		return emit_source(self.ast) if self.ast is not None else None

	def run(self, nb: int, buffers: Sequence[np.ndarray]):
		"""
		Run `nb` kernel instances; buffer k holds the staged data of parameter k with a leading batch axis.
		"""
		if self.host_fn is not None and self.batched:
			self.host_fn(*buffers)
		elif self.host_fn is not None:
			for b in range(nb):
				self.host_fn(*[buf[b, ...] for buf in buffers])
		elif self.interpret:
			for b in range(nb):
				interpret(self.ast, [buf[b, ...] for buf in buffers])
		else:
			self._compiled[0](nb, *buffers)
