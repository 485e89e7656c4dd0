from dataclasses import (
	dataclass,
	field
)
from typing import (
	Callable,
	Optional,
	Sequence,
	Union
)

from fem.exceptions import (
	SpaceMismatch,
	UnsupportedForm
)
from fem.function import Function
from fem.functionspace import (
	FunctionSpace,
	MixedFunctionSpace
)
from schemas.enums import FormKind


BILINEAR = frozenset({FormKind.mass, FormKind.stiffness, FormKind.helmholtz})
LINEAR = frozenset({FormKind.source, FormKind.facet_source, FormKind.stiffness_action})

Space = Union[FunctionSpace, MixedFunctionSpace]
Data = Union[Function, float, int, Callable]


########################################################################################################################
# FORMS
########################################################################################################################
@dataclass(frozen=True, eq=False)
class Form:
	"""
	An integral from the form catalogue:

	- mass: u v dx
	- stiffness: grad u . grad v dx
	- helmholtz: grad u . grad v + kappa u v dx
	- source: f v dx, with f a Function or a constant
	- facet_source: g v ds over the exterior facets with the given markers
	- stiffness_action: grad phi . grad v dx for a Function phi
	- mixed: a table of the forms above, one per (test, trial) pair of subspaces

	Bilinear forms have a trial space, linear forms do not.
	"""
	kind: FormKind
	test: Space
	trial: Optional[Space] = None
	coefficients: tuple[Function, ...] = ()
	kappa: float = 0.0
	constant: Optional[float] = None
	markers: tuple[int, ...] = ()
	blocks: tuple[tuple[tuple[int, ...], 'Form'], ...] = field(default=(), repr=False)

	@property
	def rank(self) -> int:
		return 1 if self.trial is None else 2

	@property
	def mesh(self):
		return self.test.mesh

	@property
	def is_mixed(self) -> bool:
		return self.kind is FormKind.mixed


def _scalar(space: Space, role: str):
	if not isinstance(space, FunctionSpace):
		raise UnsupportedForm(f'the {role} space of a catalogue form must be a FunctionSpace, got {space!r}')
	if space.dim != 1:
		raise UnsupportedForm(f'catalogue forms act on scalar spaces, the {role} space has {space.dim} components')


def _bilinear(kind: FormKind, test: FunctionSpace, trial: Optional[FunctionSpace], kappa: float = 0.0) -> Form:
	trial = trial or test
	_scalar(test, 'test')
	_scalar(trial, 'trial')
	if trial.mesh is not test.mesh:
		raise SpaceMismatch('test and trial spaces live on different meshes')
	return Form(kind, test, trial, kappa=float(kappa))


def _coefficient(space: FunctionSpace, data: Data, role: str) -> tuple[tuple[Function, ...], Optional[float]]:
	"""
	A Function stays a coefficient, a number becomes a constant folded into the kernel and a callable is
	interpolated into the test space.
	"""
	if isinstance(data, Function):
		coefficient_space = data.function_space()
		_scalar(coefficient_space, role)
		if coefficient_space.mesh is not space.mesh:
			raise SpaceMismatch(f'{data.name} lives on another mesh')
		return (data,), None
	if callable(data):
		return (Function(space, name=role).interpolate(data),), None
	return (), float(data)


def mass(test: FunctionSpace, trial: Optional[FunctionSpace] = None) -> Form:
	return _bilinear(FormKind.mass, test, trial)


def stiffness(test: FunctionSpace, trial: Optional[FunctionSpace] = None) -> Form:
	return _bilinear(FormKind.stiffness, test, trial)


def helmholtz(test: FunctionSpace, kappa: float, trial: Optional[FunctionSpace] = None) -> Form:
	return _bilinear(FormKind.helmholtz, test, trial, kappa)


def source(test: FunctionSpace, f: Data) -> Form:
	_scalar(test, 'test')
	coefficients, constant = _coefficient(test, f, 'f')
	return Form(FormKind.source, test, coefficients=coefficients, constant=constant)


def facet_source(test: FunctionSpace, g: Data, markers: Union[int, Sequence[int]]) -> Form:
	_scalar(test, 'test')
	if isinstance(g, Function) and g.function_space().degree != test.degree:
		raise UnsupportedForm('facet data must share the degree of the test space')
	coefficients, constant = _coefficient(test, g, 'g')
	markers = (markers,) if isinstance(markers, int) else tuple(sorted(set(markers)))
	return Form(FormKind.facet_source, test, coefficients=coefficients, constant=constant, markers=markers)


def stiffness_action(test: FunctionSpace, phi: Function) -> Form:
	_scalar(test, 'test')
	if not isinstance(phi, Function):
		raise UnsupportedForm('stiffness_action needs a Function to act on')
	coefficients, _ = _coefficient(test, phi, 'phi')
	return Form(FormKind.stiffness_action, test, coefficients=coefficients)


def mixed(test: MixedFunctionSpace, blocks: dict, trial: Optional[MixedFunctionSpace] = None) -> Form:
	"""
	A form over mixed spaces described block by block.
	:param test: mixed test space
	:param blocks: for a bilinear form, (i, j) -> constructor called with (test subspace i, trial subspace j),
	e.g. `{(0, 0): mass, (1, 1): stiffness}`; for a linear form, i -> constructor called with test subspace i,
	e.g. `{0: lambda V: source(V, 1.0)}`. Missing blocks are zero.
	:param trial: mixed trial space, the test space when omitted for bilinear tables
	:return: the mixed Form
	"""
	if not isinstance(test, MixedFunctionSpace):
		raise UnsupportedForm(f'mixed forms need a MixedFunctionSpace, got {test!r}')

	bilinear = all(isinstance(key, tuple) for key in blocks)
	if not bilinear and any(isinstance(key, tuple) for key in blocks):
		raise UnsupportedForm('block keys must all be (i, j) pairs or all be indices')

	trial = (trial or test) if bilinear else None
	table = []
	for key in sorted(blocks):
		if bilinear:
			i, j = key
			if not (0 <= i < len(test) and 0 <= j < len(trial)):
				raise UnsupportedForm(f'block {key} is outside the {len(test)} x {len(trial)} table')
			sub = blocks[key](test[i], trial[j])
		else:
			i = key
			if not 0 <= i < len(test):
				raise UnsupportedForm(f'block {i} is outside the {len(test)} blocks')
			sub = blocks[key](test[i])
			key = (i,)
		if sub.rank != (2 if bilinear else 1) or sub.is_mixed:
			raise UnsupportedForm(f'block {key} is a {sub.kind.value} form of the wrong rank')
		table.append((key, sub))

	return Form(FormKind.mixed, test, trial, blocks=tuple(table))


def split_mixed(form: Form) -> list:
	"""
	The block table of a mixed form: a rows x columns list of lists of Forms for bilinear forms, a list for
	linear forms, with None where the block is zero.
	"""
	if not form.is_mixed:
		raise UnsupportedForm(f'{form.kind.value} is not a mixed form')

	blocks = dict(form.blocks)
	rows = range(len(form.test))
	if form.rank == 1:
		return [blocks.get((i,)) for i in rows]
	return [[blocks.get((i, j)) for j in range(len(form.trial))] for i in rows]
