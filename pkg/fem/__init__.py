from fem.assembly import (
	assemble,
	assemble_monolithic
)
from fem.bcs import (
	DirichletBC,
	apply_dirichlet
)
from fem.compiler import (
	compile_local_kernel,
	compile_mixed_kernel
)
from fem.custom import (
	custom_parloop,
	perturbed_initial_condition
)
from fem.element import (
	lagrange_element,
	tabulate
)
from fem.form import (
	Form,
	facet_source,
	helmholtz,
	mass,
	mixed,
	source,
	split_mixed,
	stiffness,
	stiffness_action
)
from fem.function import (
	Constant,
	Function
)
from fem.functionspace import (
	FunctionSpace,
	MixedFunctionSpace,
	VectorFunctionSpace
)
from fem.mesh import (
	Mesh,
	build_mesh,
	read_mesh,
	rectangle_mesh,
	reorder,
	unit_cube_mesh,
	unit_square_mesh,
	write_mesh
)
from fem.norms import (
	l2_error,
	norm
)
from fem.pointwise import pointwise
from fem.quadrature import make_quadrature
