from solver.block import (
	NestedMat,
	block_spmv
)
from solver.cg import cg_solve
