from kernel_ir.ast import (
	Assign,
	BinOp,
	Const,
	Decl,
	For,
	Increment,
	Index,
	KernelAst,
	Param,
	UnaryOp,
	Var
)
from kernel_ir.emit import emit_source
from kernel_ir.interpreter import interpret
from kernel_ir.kernel import Kernel
from kernel_ir.passes import (
	fold_constants,
	hoist_invariants,
	optimize,
	pad_extents,
	unroll
)
