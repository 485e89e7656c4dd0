from op2.data import (
	Dat,
	Global,
	Mat,
	Sparsity,
	build_sparsity,
	global_reduce,
	mat_addto,
	mat_spmv
)
from op2.parloop import (
	Arg,
	ParLoop,
	configure,
	par_loop
)
from op2.topology import (
	Coloring,
	Map,
	Set,
	color_iteration,
	identity_map,
	make_map,
	ordered_levels,
	rcm_order
)
