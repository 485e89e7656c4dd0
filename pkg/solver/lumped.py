from fem.assembly import assemble
from fem.exceptions import UnsupportedForm
from fem.form import source
from fem.functionspace import FunctionSpace
from op2.data import Dat


def lumped_mass(V: FunctionSpace, threads=None) -> Dat:
	"""
	Diagonal of the lumped mass matrix: the integral of every basis function, assembled from the source form
	with a unit right-hand side.
	"""
	if V.dim != 1:
		raise UnsupportedForm('mass lumping needs a scalar space')
	lumped = assemble(source(V, 1.0), threads=threads).dat
	lumped.name = f'lumped_mass_P{V.degree}'
	return lumped
