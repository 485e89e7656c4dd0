import numpy as np

from dataclasses import (
	dataclass,
	field
)
from functools import (
	cached_property,
	lru_cache
)
from loguru import logger
from typing import (
	Optional,
	Sequence,
	Union
)

from op2.exceptions import (
	DimensionMismatch,
	EmptyPartials,
	IllegalAccess,
	OutsideSparsity,
	SourceMismatch
)
from op2.topology import (
	Map,
	Set
)
from schemas.enums import Access


ScalarType = np.float64

DAT_ACCESS = frozenset({Access.read, Access.write, Access.rw, Access.inc})
GLOBAL_ACCESS = frozenset({Access.read, Access.sum, Access.min, Access.max})
MAT_ACCESS = frozenset({Access.write, Access.inc})

REDUCTION_IDENTITY = {
	Access.sum: 0.0,
	Access.min: np.inf,
	Access.max: -np.inf,
}

_REDUCTION_UFUNC = {
	Access.sum: np.add,
	Access.min: np.minimum,
	Access.max: np.maximum,
}


########################################################################################################################
# DAT
########################################################################################################################
class Dat:
	"""
	A vector of `dim` values per entity of a Set. Mutable access goes through `data`, which bumps the
	version counter; `data_ro` hands out a read-only view and leaves the counter alone.
	"""
	def __init__(self, dataset: Set, dim: int = 1, data=None, name: str = 'dat'):
		if dim < 1:
			raise DimensionMismatch(f'{name}: dim must be positive, got {dim}')
		self.set = dataset
		self.dim = dim
		self.name = name
		self._data = np.zeros((dataset.size, dim), dtype=ScalarType)
		if data is not None:
			values = np.asarray(data, dtype=ScalarType)
			if values.size != dataset.size * dim:
				raise DimensionMismatch(f'{name}: expected {dataset.size * dim} values, got {values.size}')
			self._data[:] = values.reshape(dataset.size, dim)
		self._version = 0

	def __repr__(self):
		return f'Dat({self.name!r}, {self.set.name}, dim={self.dim})'

	def _shaped(self, array: np.ndarray) -> np.ndarray:
		return array[:, 0] if self.dim == 1 else array

	@property
	def version(self) -> int:
		return self._version

	def _bump(self):
		self._version += 1

	@property
	def data(self) -> np.ndarray:
		self._bump()
		return self._shaped(self._data)

	@property
	def data_ro(self) -> np.ndarray:
		view = self._data.view()
		view.setflags(write=False)
		return self._shaped(view)

	def zero(self):
		self._bump()
		self._data.fill(0.0)

	def copy(self, name: Optional[str] = None) -> 'Dat':
		return Dat(self.set, self.dim, self._data, name=name or self.name)

	def __call__(self, access: Access, map_: Optional[Map] = None):
		from op2.parloop import Arg
		return Arg(self, Access(access), (map_,) if map_ is not None else ())


########################################################################################################################
# GLOBAL
########################################################################################################################
class Global:
	"""
	A small tuple of values not attached to any set, used for reductions and for constants read by kernels.
	"""
	def __init__(self, dim: int = 1, value=None, name: str = 'global'):
		if dim < 1:
			raise DimensionMismatch(f'{name}: dim must be positive, got {dim}')
		self.dim = dim
		self.name = name
		self._value = np.zeros(dim, dtype=ScalarType)
		if value is not None:
			self.assign(value)

	def __repr__(self):
		return f'Global({self.name!r}, dim={self.dim})'

	@property
	def value(self) -> np.ndarray:
		return self._value.copy()

	def assign(self, value):
		values = np.asarray(value, dtype=ScalarType).reshape(-1)
		if values.size != self.dim:
			raise DimensionMismatch(f'{self.name}: expected {self.dim} values, got {values.size}')
		self._value[:] = values

	def __float__(self):
		return float(self._value[0])

	def __call__(self, access: Access):
		from op2.parloop import Arg
		return Arg(self, Access(access), ())


def global_reduce(mode: Access, partials) -> Union[float, np.ndarray]:
	"""
	Left fold of reduction partials in the order given.
	:param mode: SUM, MIN or MAX
	:param partials: ordered sequence of scalars or equally sized arrays
	:return: the reduced value
	"""
	mode = Access(mode)
	if mode not in _REDUCTION_UFUNC:
		raise IllegalAccess(f'{mode.value} is not a reduction')

	values = np.asarray(partials, dtype=ScalarType)
	if values.ndim == 0 or values.shape[0] == 0:
		raise EmptyPartials('cannot reduce an empty sequence of partials')

	# accumulate is a strict left fold, unlike reduce which may sum pairwise
	return _REDUCTION_UFUNC[mode].accumulate(values, axis=0)[-1]


########################################################################################################################
# SPARSITY
########################################################################################################################
@dataclass(frozen=True, eq=False)
class Sparsity:
	nrows: int
	ncols: int
	row_offsets: np.ndarray = field(repr=False)
	col_indices: np.ndarray = field(repr=False)

	@property
	def nnz(self) -> int:
		return int(self.row_offsets[-1])

	@cached_property
	def keys(self) -> np.ndarray:
		# globally sorted because rows ascend and columns ascend within each row
		rows = np.repeat(np.arange(self.nrows, dtype=np.int64), np.diff(self.row_offsets))
		return rows * self.ncols + self.col_indices

	@cached_property
	def fold_schedule(self) -> list[tuple[np.ndarray, np.ndarray]]:
		"""
		For the k-th stored entry of every row long enough: (rows, entry positions). Walking the schedule in
		order visits each row's entries from left to right.
		"""
		lengths = np.diff(self.row_offsets)
		schedule = []
		for k in range(int(lengths.max()) if self.nrows else 0):
			live = np.flatnonzero(lengths > k)
			schedule.append((live, self.row_offsets[live] + k))
		return schedule

	def positions(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
		"""
		Offsets into the value array of every (row, col) pair; raises OutsideSparsity on the first pair, in
		the order given, that is not part of the pattern.
		"""
		rows = np.asarray(rows, dtype=np.int64)
		cols = np.asarray(cols, dtype=np.int64)
		wanted = rows * self.ncols + cols
		found = np.searchsorted(self.keys, wanted)
		clipped = np.minimum(found, max(self.nnz - 1, 0))
		hit = (found < self.nnz) & (self.keys[clipped] == wanted) if self.nnz else np.zeros(wanted.shape, bool)
		hit &= (rows >= 0) & (rows < self.nrows) & (cols >= 0) & (cols < self.ncols)
		if not np.all(hit):
			first = np.flatnonzero(~hit.reshape(-1))[0]
			raise OutsideSparsity(int(rows.reshape(-1)[first]), int(cols.reshape(-1)[first]))
		return found


def expand_dofs(nodes: np.ndarray, dim: int) -> np.ndarray:
	"""
	Node indices to degree-of-freedom indices: node n owns [n*dim, (n+1)*dim). The last axis grows by dim.
	"""
	nodes = np.asarray(nodes, dtype=np.int64)
	if dim == 1:
		return nodes
	dofs = nodes[..., :, None] * dim + np.arange(dim)
	return dofs.reshape(nodes.shape[:-1] + (nodes.shape[-1] * dim,))


def last_writes(targets: np.ndarray) -> np.ndarray:
	"""
	Positions of the last occurrence of each distinct target, so a write with repeated targets keeps the
	value written last.
	"""
	targets = np.asarray(targets).reshape(-1)
	_, first = np.unique(targets[::-1], return_index=True)
	return np.sort(targets.size - 1 - first)


@lru_cache(maxsize=128)
def _build_sparsity(row_map: Map, col_map: Map, row_dim: int, col_dim: int) -> Sparsity:
	nrows = row_map.target.size * row_dim
	ncols = col_map.target.size * col_dim

	rows = expand_dofs(row_map.values2d, row_dim)
	cols = expand_dofs(col_map.values2d, col_dim)
	pairs = rows[:, :, None] * ncols + cols[:, None, :]
	keys = np.unique(pairs)

	# count entries per row, then fill the column array
	counts = np.bincount(keys // ncols, minlength=nrows) if keys.size else np.zeros(nrows, dtype=np.int64)
	row_offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
	col_indices = (keys % ncols).astype(np.int64)

	logger.debug(f'Built {nrows}x{ncols} sparsity with {keys.size} entries from {row_map!r} and {col_map!r}.')
	return Sparsity(nrows=nrows, ncols=ncols, row_offsets=row_offsets, col_indices=col_indices)


def build_sparsity(row_map: Map, col_map: Map, row_dim: int = 1, col_dim: int = 1) -> Sparsity:
	"""
	CSR pattern of the union of the local blocks reached through a pair of maps over the same source set.
	Patterns are cached per (row map, column map, dims).
	:param row_map: map to the row nodes
	:param col_map: map to the column nodes
	:param row_dim: degrees of freedom per row node
	:param col_dim: degrees of freedom per column node
	:return: the sparsity pattern
	"""
	if row_map.source is not col_map.source:
		raise SourceMismatch(f'{row_map!r} and {col_map!r} do not share a source set')
	return _build_sparsity(row_map, col_map, row_dim, col_dim)


########################################################################################################################
# MAT
########################################################################################################################
class Mat:
	"""
	Sparse matrix in CSR form over a fixed Sparsity. Kernels only ever write to it (WRITE or INC); host code
	reads it through spmv, diagonal and to_dense.
	"""
	def __init__(self, sparsity: Sparsity, name: str = 'mat'):
		self.sparsity = sparsity
		self.name = name
		self.values = np.zeros(sparsity.nnz, dtype=ScalarType)

	def __repr__(self):
		return f'Mat({self.name!r}, {self.shape[0]}x{self.shape[1]}, nnz={self.sparsity.nnz})'

	@property
	def shape(self) -> tuple[int, int]:
		return self.sparsity.nrows, self.sparsity.ncols

	def zero(self):
		self.values.fill(0.0)

	def addto(self, rows: Sequence[int], cols: Sequence[int], block, mode: Access = Access.inc):
		"""
		Insert a dense local block at the given global rows and columns.
		"""
		rows = np.asarray(rows, dtype=np.int64)
		cols = np.asarray(cols, dtype=np.int64)
		block = np.asarray(block, dtype=ScalarType).reshape(rows.size, cols.size)
		self.addto_batch(rows[None, :], cols[None, :], block[None, :, :], mode)

	def addto_batch(self, rows: np.ndarray, cols: np.ndarray, blocks: np.ndarray, mode: Access = Access.inc):
		"""
		Insert a batch of local blocks: rows (nb, R), cols (nb, C), blocks (nb, R, C). Blocks are applied in
		batch order, each in row-major order.
		"""
		mode = Access(mode)
		if mode not in MAT_ACCESS:
			raise IllegalAccess(f'{mode.value} is not a legal matrix insertion mode')

		nb, nr = rows.shape
		nc = cols.shape[1]
		full_rows = np.broadcast_to(rows[:, :, None], (nb, nr, nc))
		full_cols = np.broadcast_to(cols[:, None, :], (nb, nr, nc))
		pos = self.sparsity.positions(full_rows, full_cols).reshape(-1)
		flat = np.asarray(blocks, dtype=ScalarType).reshape(-1)
		if mode is Access.inc:
			np.add.at(self.values, pos, flat)
		else:
			keep = last_writes(pos)
			self.values[pos[keep]] = flat[keep]

	def diagonal(self) -> np.ndarray:
		n = min(self.shape)
		diag = np.zeros(n, dtype=ScalarType)
		rows = np.repeat(np.arange(self.shape[0]), np.diff(self.sparsity.row_offsets))
		on_diag = rows == self.sparsity.col_indices
		diag[rows[on_diag]] = self.values[on_diag]
		return diag

	def zero_rows(self, rows: Sequence[int], diag: float = 1.0):
		"""
		Zero the stored entries of the given rows and put `diag` on their diagonal, which must be stored.
		"""
		rows = np.unique(np.asarray(rows, dtype=np.int64))
		offsets = self.sparsity.row_offsets
		for r in rows:
			self.values[offsets[r]:offsets[r + 1]] = 0.0
		if rows.size:
			self.values[self.sparsity.positions(rows, rows)] = diag

	def to_dense(self) -> np.ndarray:
		dense = np.zeros(self.shape, dtype=ScalarType)
		rows = np.repeat(np.arange(self.shape[0]), np.diff(self.sparsity.row_offsets))
		dense[rows, self.sparsity.col_indices] = self.values
		return dense

	def spmv(self, x, out: Optional[np.ndarray] = None) -> np.ndarray:
		"""
		y = A x by CSR traversal. Every row is a left fold over its stored entries from left to right,
		starting from `out` when it is given (so that block products can continue a row sum) and from zero
		otherwise. The result does not depend on how rows are grouped.
		"""
		x = np.asarray(x, dtype=ScalarType)
		if x.shape != (self.shape[1],):
			raise DimensionMismatch(f'{self.name}: x has shape {x.shape}, expected ({self.shape[1]},)')
		if out is None:
			out = np.zeros(self.shape[0], dtype=ScalarType)
		elif out.shape != (self.shape[0],):
			raise DimensionMismatch(f'{self.name}: out has shape {out.shape}, expected ({self.shape[0]},)')

		products = self.values * x[self.sparsity.col_indices]
		for live, positions in self.sparsity.fold_schedule:
			out[live] += products[positions]
		return out

	def __call__(self, access: Access, maps: tuple[Map, Map]):
		from op2.parloop import Arg
		return Arg(self, Access(access), tuple(maps))


def mat_addto(mat: Mat, rows, cols, block, mode: Access = Access.inc):
	mat.addto(rows, cols, block, mode)


def mat_spmv(mat: Mat, x) -> np.ndarray:
	return mat.spmv(x)
