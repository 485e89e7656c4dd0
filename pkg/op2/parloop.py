import numpy as np
import threading

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from loguru import logger
from typing import (
	Optional,
	Union
)

from kernel_ir.exceptions import ShapeMismatch
from kernel_ir.kernel import Kernel
from op2.data import (
	DAT_ACCESS,
	GLOBAL_ACCESS,
	MAT_ACCESS,
	REDUCTION_IDENTITY,
	Dat,
	Global,
	Mat,
	ScalarType,
	expand_dofs,
	global_reduce,
	last_writes
)
from op2.exceptions import (
	DimensionMismatch,
	IllegalAccess,
	IndexOutOfRange,
	InvalidThreadCount,
	MapSourceMismatch
)
from op2.topology import (
	Map,
	Set,
	cached_coloring,
	ordered_levels
)
from schemas.enums import Access


########################################################################################################################
# ENGINE CONFIGURATION
########################################################################################################################
_config = {'threads': 1}
_pool_lock = threading.Lock()
_pool: Optional[ThreadPoolExecutor] = None
_pool_size = 0


def _checked_threads(threads) -> int:
	if isinstance(threads, bool) or not isinstance(threads, (int, np.integer)) or threads < 1:
		raise InvalidThreadCount(threads)
	return int(threads)


def configure(threads: int):
	"""
	Set the default number of workers used by parallel loops.
	:param threads: positive worker count
	"""
	_config['threads'] = threads = _checked_threads(threads)
	logger.debug(f'Parallel loops will use {threads} threads by default.')


def default_threads() -> int:
	return _config['threads']


def _executor(threads: int) -> ThreadPoolExecutor:
	global _pool, _pool_size
	with _pool_lock:
		if _pool is None or _pool_size < threads:
			if _pool is not None:
				_pool.shutdown(wait=True)
			_pool = ThreadPoolExecutor(max_workers=threads, thread_name_prefix='parloop')
			_pool_size = threads
		return _pool


########################################################################################################################
# ARGUMENTS
########################################################################################################################
@dataclass(frozen=True, eq=False)
class Arg:
	"""
	One kernel argument: the data, how the kernel touches it, and the maps used to reach it (none for direct
	Dats and Globals, one for indirect Dats, row and column maps for Mats).
	"""
	data: Union[Dat, Mat, Global]
	access: Access
	maps: tuple[Map, ...] = ()

	@property
	def indirect(self) -> bool:
		return bool(self.maps)

	def validate(self, iterset: Set):
		data, access = self.data, self.access
		if isinstance(data, Dat):
			if access not in DAT_ACCESS:
				raise IllegalAccess(f'{access.value} is not a legal access for {data!r}')
			if len(self.maps) > 1:
				raise IllegalAccess(f'{data!r} takes at most one map, got {len(self.maps)}')
			if not self.maps and data.set is not iterset:
				raise MapSourceMismatch(f'direct argument {data!r} is not defined on {iterset!r}')
			if self.maps and self.maps[0].target is not data.set:
				raise MapSourceMismatch(f'{self.maps[0]!r} does not point into the set of {data!r}')
		elif isinstance(data, Global):
			if access not in GLOBAL_ACCESS:
				raise IllegalAccess(f'{access.value} is not a legal access for {data!r}')
			if self.maps:
				raise IllegalAccess(f'{data!r} cannot be accessed through a map')
		elif isinstance(data, Mat):
			if access not in MAT_ACCESS:
				raise IllegalAccess(f'{access.value} is not a legal access for {data!r}: matrices are write-only')
			if len(self.maps) != 2:
				raise IllegalAccess(f'{data!r} needs a row map and a column map, got {len(self.maps)} maps')
			self.block_dims()
		else:
			raise IllegalAccess(f'{data!r} cannot be a parallel loop argument')

		for m in self.maps:
			if m.source is not iterset:
				raise MapSourceMismatch(f'{m!r} does not start from the iteration set {iterset!r}')

	def block_dims(self) -> tuple[int, int]:
		"""
		Degrees of freedom per row and column node of a Mat argument.
		"""
		(nrows, ncols), (rmap, cmap) = self.data.shape, self.maps
		rsize, csize = max(rmap.target.size, 1), max(cmap.target.size, 1)
		if nrows % rsize or ncols % csize:
			raise DimensionMismatch(f'{self.data!r} does not conform to {rmap!r} and {cmap!r}')
		return max(nrows // rsize, 1), max(ncols // csize, 1)

	def staged_shape(self) -> tuple[int, ...]:
		"""
		Shape of the per-instance buffer handed to the kernel.
		"""
		if isinstance(self.data, Mat):
			rdim, cdim = self.block_dims()
			return self.maps[0].arity * rdim, self.maps[1].arity * cdim
		if isinstance(self.data, Global):
			return (self.data.dim,)
		if self.maps:
			arity, dim = self.maps[0].arity, self.data.dim
			return (arity, dim) if dim > 1 else (arity,)
		return (self.data.dim,)

	@property
	def conflict_map(self) -> Optional[Map]:
		"""
		Map whose images must be disjoint within a color, if this argument writes through one.
		"""
		if isinstance(self.data, Mat):
			return self.maps[0]
		if isinstance(self.data, Dat) and self.maps and self.access is not Access.read:
			return self.maps[0]
		return None


########################################################################################################################
# PARALLEL LOOP
########################################################################################################################
class ParLoop:
	"""
	A kernel applied once per entity of an iteration set. Data reached through maps is gathered into
	per-instance buffers before the kernel runs and scattered back afterwards, as the access descriptors say.

	Kernel instances run on a fixed plan: the entities are colored so that no two entities of one color write
	the same data, colors run in ascending order, and each color is cut into contiguous chunks shared among
	the workers. Staged outputs are kept until every color has run and are then written back in visiting
	order (ascending entities by default), so every modified Dat and Mat ends up bit for bit as if the
	entities had run one at a time in that order, whatever the thread count. Loops that read indirect data
	they also write run on ordered levels instead, each level written back before the next one starts.
	Global reductions are a single left fold, in plan order, of one contribution per entity.
	"""
	def __init__(self, kernel: Kernel, iterset: Set, *args: Arg):
		self.kernel = kernel
		self.iterset = iterset
		self.args = tuple(args)

	def __repr__(self):
		return f'ParLoop({self.kernel.name!r}, {self.iterset!r}, {len(self.args)} args)'

	@property
	def source(self) -> Optional[str]:
		return self.kernel.source

	@property
	def reads_own_writes(self) -> bool:
		return any(isinstance(arg.data, Dat) and arg.indirect and arg.access is Access.rw for arg in self.args)

	def validate(self):
		"""
		Check the arguments against the iteration set and the kernel signature. Nothing is modified.
		"""
		for arg in self.args:
			arg.validate(self.iterset)

		# data modified by the loop may only appear once
		for k, arg in enumerate(self.args):
			for other in self.args[k + 1:]:
				if other.data is arg.data and (arg.access, other.access) != (Access.read, Access.read):
					raise IllegalAccess(f'{arg.data!r} is modified and appears in more than one argument')

		params = self.kernel.params
		if params is None:
			return
		if len(params) != len(self.args):
			raise ShapeMismatch(f'{self.kernel.name} takes {len(params)} parameters, got {len(self.args)} arguments')
		for param, arg in zip(params, self.args):
			staged = int(np.prod(arg.staged_shape()))
			if staged != param.size:
				raise ShapeMismatch(f'{self.kernel.name}: parameter {param.name!r} holds {param.size} values but '
									f'the argument stages {staged}')

	def _sequence(self, order) -> Optional[np.ndarray]:
		if order is None:
			return None
		order = np.asarray(order, dtype=np.int64).reshape(-1)
		size = self.iterset.size
		if order.size != size or not np.array_equal(np.sort(order), np.arange(size)):
			raise IndexOutOfRange(f'the visiting order must be a permutation of the {size} entities of '
								  f'{self.iterset!r}')
		return order

	def plan(self, order=None) -> list[np.ndarray]:
		"""
		Groups of entities in execution order: colors, or ordered levels when the loop reads indirect data it
		also writes. With an explicit visiting order and no such data, the whole set is a single group.
		"""
		order = self._sequence(order)
		conflicts = [arg.conflict_map for arg in self.args if arg.conflict_map is not None]
		if self.reads_own_writes:
			return ordered_levels(self.iterset, conflicts, order).groups()
		if order is not None:
			return [order] if order.size else []
		return cached_coloring(self.iterset, conflicts).groups()

	def execute(self, threads: Optional[int] = None, order=None):
		"""
		Run the loop.
		:param threads: worker count, the configured default when omitted
		:param order: visiting order, a permutation of the iteration set; ascending when omitted
		"""
		self.validate()
		threads = default_threads() if threads is None else _checked_threads(threads)
		order = self._sequence(order)
		plan = self.plan(order)

		rank = np.arange(self.iterset.size)
		if order is not None:
			rank[order] = np.arange(order.size)
		immediate = self.reads_own_writes

		logger.debug(f'Running {self.kernel.name} over {self.iterset!r}: {len(plan)} groups, {threads} threads.')

		contributions = {k: [] for k, arg in enumerate(self.args)
						 if isinstance(arg.data, Global) and arg.access is not Access.read}
		outputs = {k: [] for k, arg in enumerate(self.args)
				   if not isinstance(arg.data, Global) and arg.access is not Access.read}

		for entities in plan:
			chunks = [c for c in np.array_split(entities, threads) if c.size]
			if len(chunks) > 1:
				pool = _executor(threads)
				results = [f.result() for f in [pool.submit(self._run_chunk, c) for c in chunks]]
			else:
				results = [self._run_chunk(c) for c in chunks]

			for chunk, (partials, staged) in zip(chunks, results):
				for k, values in partials.items():
					contributions[k].append(values)
				for k, buffer in staged.items():
					outputs[k].append((chunk, buffer))

			if immediate:
				self._write_back(outputs, rank)
				outputs = {k: [] for k in outputs}

		self._write_back(outputs, rank)

		for k, parts in contributions.items():
			glob = self.args[k].data
			glob.assign(global_reduce(self.args[k].access, np.vstack([glob.value[None, :]] + parts)))

		for arg in self.args:
			if isinstance(arg.data, Dat) and arg.access is not Access.read:
				arg.data._bump()

	def _write_back(self, outputs: dict[int, list], rank: np.ndarray):
		"""
		Scatter staged outputs with their entities sorted by visiting rank.
		"""
		for k, pieces in outputs.items():
			if not pieces:
				continue
			entities = np.concatenate([chunk for chunk, _ in pieces])
			buffers = np.concatenate([buffer for _, buffer in pieces])
			ordered = np.argsort(rank[entities], kind='stable')
			self._scatter(self.args[k], entities[ordered], buffers[ordered])

	def _shape(self, arg: Arg, nb: int, k: int) -> tuple[int, ...]:
		params = self.kernel.params
		return (nb,) + (params[k].extents if params is not None else arg.staged_shape())

	def _run_chunk(self, entities: np.ndarray) -> tuple[dict[int, np.ndarray], dict[int, np.ndarray]]:
		nb = entities.size
		buffers = []
		for k, arg in enumerate(self.args):
			buffers.append(self._gather(arg, entities).reshape(self._shape(arg, nb, k)))

		self.kernel.run(nb, buffers)

		partials, staged = {}, {}
		for k, (arg, buffer) in enumerate(zip(self.args, buffers)):
			if isinstance(arg.data, Global) and arg.access is not Access.read:
				partials[k] = buffer.reshape(nb, arg.data.dim)
			elif arg.access is not Access.read:
				staged[k] = buffer
		return partials, staged

	@staticmethod
	def _gather(arg: Arg, entities: np.ndarray) -> np.ndarray:
		nb = entities.size
		data = arg.data
		if isinstance(data, Mat):
			return np.zeros((nb,) + arg.staged_shape(), dtype=ScalarType)
		if isinstance(data, Global):
			if arg.access is Access.read:
				return np.tile(data.value, (nb, 1))
			return np.full((nb, data.dim), REDUCTION_IDENTITY[arg.access], dtype=ScalarType)
		if arg.access in (Access.write, Access.inc):
			shape = (nb, arg.maps[0].arity, data.dim) if arg.maps else (nb, data.dim)
			return np.zeros(shape, dtype=ScalarType)
		if arg.maps:
			return data._data[arg.maps[0].values2d[entities]]
		return data._data[entities]

	@staticmethod
	def _scatter(arg: Arg, entities: np.ndarray, buffer: np.ndarray):
		data = arg.data
		if isinstance(data, Mat):
			rdim, cdim = arg.block_dims()
			rows = expand_dofs(arg.maps[0].values2d[entities], rdim)
			cols = expand_dofs(arg.maps[1].values2d[entities], cdim)
			data.addto_batch(rows, cols, buffer.reshape((entities.size,) + arg.staged_shape()), arg.access)
			return

		targets = arg.maps[0].values2d[entities].reshape(-1) if arg.maps else entities
		values = buffer.reshape(targets.size, data.dim)
		if arg.access is Access.inc:
			np.add.at(data._data, targets, values)
		else:
			keep = last_writes(targets)
			data._data[targets[keep]] = values[keep]


def par_loop(kernel: Kernel, iterset: Set, *args: Arg, threads: Optional[int] = None, order=None) -> ParLoop:
	"""
	Build and run a parallel loop, see ParLoop.execute for the keywords.
	:return: the executed loop
	"""
	loop = ParLoop(kernel, iterset, *args)
	loop.execute(threads, order)
	return loop
