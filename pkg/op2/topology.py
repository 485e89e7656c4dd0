import numpy as np

from collections import deque
from dataclasses import (
	dataclass,
	field
)
from functools import lru_cache
from loguru import logger
from typing import (
	Optional,
	Sequence
)

from op2.exceptions import (
	ArityMismatch,
	AsymmetricAdjacency,
	IndexOutOfRange,
	SourceMismatch
)


########################################################################################################################
# SETS AND MAPS
########################################################################################################################
@dataclass(frozen=True, eq=False)
class Set:
	"""
	An abstract collection of mesh entities: it only knows how many there are.
	"""
	size: int
	name: str = 'set'

	def __post_init__(self):
		if self.size < 0:
			raise ValueError(f'set size must be non-negative, got {self.size}')

	def __repr__(self):
		return f'Set({self.name!r}, size={self.size})'


@dataclass(frozen=True, eq=False)
class Map:
	"""
	Constant-arity indirection from each entity of `source` to `arity` entities of `target`.
	Build it through make_map, which validates the table.
	"""
	source: Set
	target: Set
	arity: int
	values: np.ndarray = field(repr=False)
	name: str = 'map'

	@property
	def values2d(self) -> np.ndarray:
		return self.values.reshape(self.source.size, self.arity)

	def rows(self, entities: np.ndarray) -> np.ndarray:
		"""
		Image of a batch of source entities, one row per entity.
		"""
		return self.values2d[entities]

	def __repr__(self):
		return f'Map({self.name!r}, {self.source.name}->{self.target.name}, arity={self.arity})'


def make_map(source: Set, target: Set, arity: int, values, name: str = 'map') -> Map:
	"""
	Validate an index table and wrap it in a Map.
	:param source: set whose entities are mapped
	:param target: set the indices point into
	:param arity: number of target entities per source entity
	:param values: flat or nested index table, row-major by source entity
	:param name: label for diagnostics
	:return: the validated Map
	"""
	if arity < 1:
		raise ArityMismatch(f'arity must be positive, got {arity}')

	table = np.array(values, dtype=np.int64).reshape(-1)
	if table.size != source.size * arity:
		raise ArityMismatch(f'{name}: expected {source.size} x {arity} = {source.size * arity} entries, '
							f'got {table.size}')

	bad = np.flatnonzero((table < 0) | (table >= target.size))
	if bad.size:
		first = int(bad[0])
		raise IndexOutOfRange(f'{name}: entry {int(table[first])} of source entity {first // arity} is outside '
							  f'[0, {target.size})')

	table.setflags(write=False)
	return Map(source=source, target=target, arity=arity, values=table, name=name)


def identity_map(s: Set, name: str = 'identity') -> Map:
	return make_map(s, s, 1, np.arange(s.size), name=name)


########################################################################################################################
# COLORING
########################################################################################################################
@dataclass(frozen=True, eq=False)
class Coloring:
	colors: np.ndarray = field(repr=False)
	num_colors: int

	def groups(self) -> list[np.ndarray]:
		"""
		Entities of each color, colors ascending and entities ascending inside a color.
		"""
		order = np.argsort(self.colors, kind='stable')
		counts = np.bincount(self.colors, minlength=self.num_colors)
		return np.split(order, np.cumsum(counts)[:-1]) if self.num_colors else []


def color_iteration(iterset: Set, conflict_maps: Sequence[Map]) -> Coloring:
	"""
	Greedy first-fit coloring of an iteration set. Entities are visited in ascending order and take the
	smallest color not already used by an entity sharing a target index under any of the conflict maps.
	Maps pointing into the same target set share the record of used colors, so entities reaching the same
	target entity through different maps are kept apart as well.
	:param iterset: set to be colored
	:param conflict_maps: maps whose images must not overlap within a color
	:return: a Coloring with one color per entity
	"""
	for m in conflict_maps:
		if m.source is not iterset:
			raise SourceMismatch(f'{m!r} does not start from {iterset!r}')

	colors = np.zeros(iterset.size, dtype=np.int64)
	if not conflict_maps or iterset.size == 0:
		return Coloring(colors=colors, num_colors=1 if iterset.size else 0)

	# one bitmask of used colors per target entity, shared by maps into the same target set
	used_by_target = {}
	tables = []
	for m in conflict_maps:
		used = used_by_target.setdefault(id(m.target), [0] * m.target.size)
		tables.append((used, m.values2d.tolist()))

	for e in range(iterset.size):
		mask = 0
		for used, rows in tables:
			for t in rows[e]:
				mask |= used[t]
		color = (~mask & (mask + 1)).bit_length() - 1
		colors[e] = color
		bit = 1 << color
		for used, rows in tables:
			for t in rows[e]:
				used[t] |= bit

	num_colors = int(colors.max()) + 1
	logger.debug(f'Colored {iterset!r} with {num_colors} colors.')
	return Coloring(colors=colors, num_colors=num_colors)


@lru_cache(maxsize=256)
def _cached_coloring(iterset: Set, maps: tuple[Map, ...]) -> Coloring:
	return color_iteration(iterset, list(maps))


def cached_coloring(iterset: Set, conflict_maps: Sequence[Map]) -> Coloring:
	"""
	Coloring cached on the identity of the iteration set and of the conflict maps. The cache holds strong
	references, so identities cannot be recycled while an entry is alive.
	"""
	unique = []
	for m in conflict_maps:
		if not any(m is u for u in unique):
			unique.append(m)
	return _cached_coloring(iterset, tuple(unique))


def ordered_levels(iterset: Set, conflict_maps: Sequence[Map], order: Optional[np.ndarray] = None) -> Coloring:
	"""
	Levels of a visiting sequence: every entity lands one level above the latest entity visited before it
	that shares a target index. Entities of one level never share a target, and entities sharing a target
	keep their visiting order when the levels run in ascending order.
	:param iterset: set to be leveled
	:param conflict_maps: maps whose images must not overlap within a level
	:param order: visiting sequence, ascending entities when omitted
	:return: a Coloring with one level per entity
	"""
	for m in conflict_maps:
		if m.source is not iterset:
			raise SourceMismatch(f'{m!r} does not start from {iterset!r}')

	levels = np.zeros(iterset.size, dtype=np.int64)
	if not conflict_maps or iterset.size == 0:
		return Coloring(colors=levels, num_colors=1 if iterset.size else 0)

	last_by_target = {}
	tables = []
	for m in conflict_maps:
		last = last_by_target.setdefault(id(m.target), [-1] * m.target.size)
		tables.append((last, m.values2d.tolist()))

	sequence = range(iterset.size) if order is None else np.asarray(order, dtype=np.int64).tolist()
	for e in sequence:
		level = 1 + max((last[t] for last, rows in tables for t in rows[e]), default=-1)
		levels[e] = level
		for last, rows in tables:
			for t in rows[e]:
				last[t] = level

	num_levels = int(levels.max()) + 1
	logger.debug(f'Split {iterset!r} into {num_levels} ordered levels.')
	return Coloring(colors=levels, num_colors=num_levels)


########################################################################################################################
# REORDERING
########################################################################################################################
def _neighbor_sets(n: int, adjacency: Sequence[Sequence[int]]) -> list[set[int]]:
	if len(adjacency) != n:
		raise AsymmetricAdjacency(f'expected {n} neighbor lists, got {len(adjacency)}')

	neighbors = []
	for v, row in enumerate(adjacency):
		row = {int(w) for w in row}
		bad = [w for w in row if w < 0 or w >= n]
		if bad:
			raise IndexOutOfRange(f'vertex {v} lists neighbors {bad} outside [0, {n})')
		row.discard(v)
		neighbors.append(row)

	for v, row in enumerate(neighbors):
		for w in row:
			if v not in neighbors[w]:
				raise AsymmetricAdjacency(f'{w} is a neighbor of {v} but not the other way round')

	return neighbors


def rcm_order(n: int, adjacency: Sequence[Sequence[int]]) -> np.ndarray:
	"""
	Reverse Cuthill-McKee ordering. Components are seeded, in turn, by the unvisited vertex of lowest degree
	(ties by index); the breadth-first search enqueues unvisited neighbors by ascending degree, ties by
	index; the whole order is reversed at the end.
	:param n: number of vertices
	:param adjacency: symmetric neighbor lists, one per vertex
	:return: permutation array, entry k is the old index of the vertex placed at position k
	"""
	neighbors = _neighbor_sets(n, adjacency)
	degree = [len(row) for row in neighbors]

	def by_degree(v: int) -> tuple[int, int]:
		return degree[v], v

	visited = [False] * n
	order = []
	for seed in sorted(range(n), key=by_degree):
		if visited[seed]:
			continue
		visited[seed] = True
		queue = deque([seed])
		while queue:
			v = queue.popleft()
			order.append(v)
			for w in sorted((w for w in neighbors[v] if not visited[w]), key=by_degree):
				visited[w] = True
				queue.append(w)

	return np.array(order[::-1], dtype=np.int64)


def adjacency_from_map(m: Map) -> list[np.ndarray]:
	"""
	Symmetric adjacency of the target set induced by a map: two targets are neighbors when some source
	entity reaches both.
	"""
	rows = m.values2d
	n = m.target.size
	if m.arity < 2 or rows.shape[0] == 0:
		return [np.empty(0, dtype=np.int64) for _ in range(n)]

	a, b = np.meshgrid(np.arange(m.arity), np.arange(m.arity), indexing='ij')
	off_diagonal = a != b
	left = rows[:, a[off_diagonal]].reshape(-1)
	right = rows[:, b[off_diagonal]].reshape(-1)
	keep = left != right
	keys = np.unique(left[keep] * n + right[keep])

	starts = np.searchsorted(keys // n, np.arange(n + 1))
	return [keys[starts[v]:starts[v + 1]] % n for v in range(n)]


def bandwidth(adjacency: Sequence[Sequence[int]], order: Optional[np.ndarray] = None) -> int:
	"""
	Largest distance between the positions of two neighbors, optionally after renumbering by `order`
	(as returned by rcm_order).
	"""
	n = len(adjacency)
	position = np.arange(n)
	if order is not None:
		position = np.empty(n, dtype=np.int64)
		position[np.asarray(order)] = np.arange(n)

	widest = 0
	for v, row in enumerate(adjacency):
		if len(row):
			widest = max(widest, int(np.max(np.abs(position[np.asarray(row)] - position[v]))))
	return widest
