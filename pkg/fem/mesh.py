import itertools
import numpy as np
import os

from dataclasses import (
	dataclass,
	field
)
from functools import cached_property
from loguru import logger
from typing import (
	Optional,
	Sequence,
	Union
)

from fem.exceptions import (
	InvalidSubdivision,
	NonManifold,
	ParseError
)
from op2.data import Dat
from op2.topology import (
	Map,
	Set,
	adjacency_from_map,
	make_map,
	rcm_order
)
from schemas.enums import CellType


SIMPLEX = {2: CellType.triangle, 3: CellType.tetrahedron}


########################################################################################################################
# MESH
########################################################################################################################
@dataclass(eq=False)
class Mesh:
	"""
	Simplicial mesh as sets, maps and a coordinate field. Local facet k of a cell is the facet opposite its
	local vertex k; exterior facets are stored with their vertices in ascending order, sorted
	lexicographically, together with the incident cell, the local facet index in that cell and a marker
	(0 when unmarked).
	"""
	dim: int
	vertices: Set
	cells: Set
	exterior_facets: Set
	cell_vertex_map: Map
	facet_vertex_map: Map
	facet_cell: np.ndarray = field(repr=False)
	facet_local: np.ndarray = field(repr=False)
	facet_markers: np.ndarray = field(repr=False)
	coordinates: Dat = field(repr=False)
	vertex_permutation: Optional[np.ndarray] = field(default=None, repr=False)
	name: str = 'mesh'

	@property
	def cell_type(self) -> CellType:
		return SIMPLEX[self.dim]

	@cached_property
	def facet_cell_map(self) -> Map:
		return make_map(self.exterior_facets, self.cells, 1, self.facet_cell, name=f'{self.name}_facet_cell')

	def cell_volumes(self) -> np.ndarray:
		"""
		Signed cell measures: positive for cells whose vertices follow the reference orientation.
		"""
		x = self.coordinates.data_ro[self.cell_vertex_map.values2d]
		edges = x[:, 1:, :] - x[:, :1, :]
		return np.linalg.det(edges) / (2.0 if self.dim == 2 else 6.0)

	def marked_facets(self, markers: Union[int, Sequence[int]]) -> np.ndarray:
		markers = [markers] if isinstance(markers, (int, np.integer)) else list(markers)
		return np.flatnonzero(np.isin(self.facet_markers, markers))

	def coordinates_function(self):
		"""
		The coordinate field as a Function on the vector P1 space of this mesh. It shares the Dat, so
		changes made through the Function move the mesh.
		"""
		from fem.function import Function
		from fem.functionspace import VectorFunctionSpace
		return Function(VectorFunctionSpace(self, 1), dat=self.coordinates)


def build_mesh(coordinates, cells, markers: Union[None, dict, callable] = None, name: str = 'mesh') -> Mesh:
	"""
	Assemble sets, maps and the coordinate field of a simplicial mesh, deriving the exterior facets.
	:param coordinates: (nv, dim) vertex coordinates
	:param cells: (nc, dim + 1) vertex indices per cell
	:param markers: facet markers, either a dict from sorted vertex tuple to id or a callable receiving the
	(nf, dim, dim) facet vertex coordinates and returning one id per facet
	:param name: label for diagnostics
	:return: the Mesh
	"""
	coordinates = np.asarray(coordinates, dtype=np.float64)
	cells = np.asarray(cells, dtype=np.int64)
	nv, dim = coordinates.shape
	nc, nvc = cells.shape if cells.size else (0, dim + 1)

	vertices = Set(nv, f'{name}_vertices')
	cell_set = Set(nc, f'{name}_cells')
	cell_vertex_map = make_map(cell_set, vertices, dim + 1, cells, name=f'{name}_cell_vertex')

	# facet k of a cell drops local vertex k
	local = np.array([[v for v in range(dim + 1) if v != k] for k in range(dim + 1)])
	facets = np.sort(cells.reshape(nc, dim + 1)[:, local], axis=2).reshape(-1, dim)
	keys, first, counts = np.unique(facets, axis=0, return_index=True, return_counts=True)
	if np.any(counts > 2):
		bad = keys[np.argmax(counts > 2)]
		raise NonManifold(f'facet {tuple(int(v) for v in bad)} is shared by more than two cells')

	exterior = counts == 1
	facet_vertices = keys[exterior]
	facet_cell = first[exterior] // (dim + 1)
	facet_local = first[exterior] % (dim + 1)

	if markers is None:
		facet_markers = np.zeros(len(facet_vertices), dtype=np.int64)
	elif isinstance(markers, dict):
		facet_markers = np.array([markers.get(tuple(int(v) for v in f), 0) for f in facet_vertices], dtype=np.int64)
	else:
		facet_markers = np.asarray(markers(coordinates[facet_vertices]), dtype=np.int64).reshape(-1)

	facet_set = Set(len(facet_vertices), f'{name}_exterior_facets')
	facet_vertex_map = make_map(facet_set, vertices, dim, facet_vertices, name=f'{name}_facet_vertex')

	return Mesh(dim=dim, vertices=vertices, cells=cell_set, exterior_facets=facet_set,
				cell_vertex_map=cell_vertex_map, facet_vertex_map=facet_vertex_map,
				facet_cell=facet_cell, facet_local=facet_local, facet_markers=facet_markers,
				coordinates=Dat(vertices, dim, coordinates, name=f'{name}_coordinates'), name=name)


def box_markers(lower: Sequence[float], upper: Sequence[float]):
	"""
	Marker function for axis-aligned boxes: 2a + 1 for the face where coordinate a is at its lower bound,
	2a + 2 where it is at its upper bound.
	"""
	def mark(facet_coordinates: np.ndarray) -> np.ndarray:
		ids = np.zeros(facet_coordinates.shape[0], dtype=np.int64)
		for axis, (lo, hi) in enumerate(zip(lower, upper)):
			ids[np.all(facet_coordinates[:, :, axis] == lo, axis=1)] = 2 * axis + 1
			ids[np.all(facet_coordinates[:, :, axis] == hi, axis=1)] = 2 * axis + 2
		return ids

	return mark


########################################################################################################################
# GENERATORS
########################################################################################################################
def rectangle_mesh(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0, name: str = 'rectangle') -> Mesh:
	"""
	Structured triangulation of [0, lx] x [0, ly]. Vertex (i, j) is numbered j * (nx + 1) + i and every grid
	square is cut along its SW-NE diagonal into (SW, SE, NE) and (SW, NE, NW). Markers: 1 x=0, 2 x=lx,
	3 y=0, 4 y=ly.
	"""
	if nx < 1 or ny < 1:
		raise InvalidSubdivision(f'subdivisions must be at least 1, got {nx} x {ny}')

	i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
	coordinates = np.column_stack([(i * lx / nx).ravel(), (j * ly / ny).ravel()])
	coordinates[i.ravel() == nx, 0] = lx
	coordinates[j.ravel() == ny, 1] = ly

	ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
	sw = (cj * (nx + 1) + ci).ravel()
	se, nw = sw + 1, sw + nx + 1
	ne = nw + 1
	cells = np.stack([np.column_stack([sw, se, ne]), np.column_stack([sw, ne, nw])], axis=1).reshape(-1, 3)

	mesh = build_mesh(coordinates, cells, box_markers((0.0, 0.0), (lx, ly)), name=name)
	logger.debug(f'Generated {nx}x{ny} rectangle mesh with {mesh.cells.size} cells.')
	return mesh


def unit_square_mesh(n: int) -> Mesh:
	return rectangle_mesh(n, n, name=f'unit_square_{n}')


def unit_cube_mesh(n: int) -> Mesh:
	"""
	Structured tetrahedralization of the unit cube: every grid cube is cut into 6 tetrahedra along paths
	from its lowest to its highest corner, one per ordering of the axes. Markers 1..6 for x=0, x=1, y=0,
	y=1, z=0, z=1.
	"""
	if n < 1:
		raise InvalidSubdivision(f'subdivisions must be at least 1, got {n}')

	k, j, i = np.meshgrid(np.arange(n + 1), np.arange(n + 1), np.arange(n + 1), indexing='ij')
	coordinates = np.column_stack([(i / n).ravel(), (j / n).ravel(), (k / n).ravel()])

	stride = np.array([1, n + 1, (n + 1) ** 2])
	ck, cj, ci = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing='ij')
	origin = (ck * stride[2] + cj * stride[1] + ci).ravel()

	local = []
	for order in itertools.permutations(range(3)):
		corner = np.zeros(3, dtype=np.int64)
		path = [corner.copy()]
		for axis in order:
			corner[axis] += 1
			path.append(corner.copy())
		path = np.array(path)
		if np.linalg.det((path[1:] - path[0]).astype(float)) < 0:
			path[[2, 3]] = path[[3, 2]]
		local.append(path @ stride)

	cells = (origin[:, None, None] + np.array(local)[None, :, :]).reshape(-1, 4)
	mesh = build_mesh(coordinates, cells, box_markers((0.0,) * 3, (1.0,) * 3), name=f'unit_cube_{n}')
	logger.debug(f'Generated unit cube mesh with {mesh.cells.size} cells.')
	return mesh


########################################################################################################################
# FILE FORMAT
########################################################################################################################
def _content_lines(path: str) -> list[tuple[int, list[str]]]:
	lines = []
	with open(path) as handle:
		for number, raw in enumerate(handle, start=1):
			tokens = raw.split('#', 1)[0].split()
			if tokens:
				lines.append((number, tokens))
	return lines


def read_mesh(path: str) -> Mesh:
	"""
	Read a mesh from the whitespace-separated text format: a header `dim nv nc`, nv coordinate lines,
	nc cell lines of dim + 1 zero-based vertex indices, then optionally `facets nf` followed by nf lines of
	marker and dim vertex indices. `#` starts a comment.
	:param path: file to read
	:return: the Mesh
	"""
	lines = _content_lines(path)
	if not lines:
		raise ParseError(1, 'empty mesh file')

	def numbers(k: int, count: int, kind):
		number, tokens = lines[k]
		if len(tokens) != count:
			raise ParseError(number, f'expected {count} values, got {len(tokens)}')
		try:
			return [kind(t) for t in tokens]
		except ValueError:
			raise ParseError(number, f'cannot read {tokens} as {kind.__name__} values') from None

	dim, nv, nc = numbers(0, 3, int)
	if dim not in SIMPLEX:
		raise ParseError(lines[0][0], f'dimension must be 2 or 3, got {dim}')
	if len(lines) < 1 + nv + nc:
		raise ParseError(lines[-1][0], f'expected {nv} vertices and {nc} cells, file ends early')

	coordinates = [numbers(1 + v, dim, float) for v in range(nv)]
	cells = []
	for c in range(nc):
		cell = numbers(1 + nv + c, dim + 1, int)
		if any(not 0 <= v < nv for v in cell):
			raise ParseError(lines[1 + nv + c][0], f'vertex index outside [0, {nv}) in cell {cell}')
		cells.append(cell)

	markers = {}
	k = 1 + nv + nc
	if k < len(lines):
		number, tokens = lines[k]
		if len(tokens) != 2 or tokens[0] != 'facets':
			raise ParseError(number, f'expected "facets nf", got {" ".join(tokens)}')
		nf = numbers(k, 2, lambda t: int(t) if t != 'facets' else 0)[1]
		if len(lines) != k + 1 + nf:
			raise ParseError(lines[-1][0], f'expected {nf} facet lines')
		for f in range(nf):
			marker, *facet = numbers(k + 1 + f, dim + 1, int)
			if any(not 0 <= v < nv for v in facet):
				raise ParseError(lines[k + 1 + f][0], f'vertex index outside [0, {nv}) in facet {facet}')
			markers[tuple(sorted(facet))] = marker

	mesh = build_mesh(np.array(coordinates).reshape(nv, dim), np.array(cells, dtype=np.int64).reshape(nc, dim + 1),
					  markers, name=os.path.splitext(os.path.basename(path))[0])

	known = {tuple(int(v) for v in f) for f in mesh.facet_vertex_map.values2d}
	stray = [f for f in markers if f not in known]
	if stray:
		raise ParseError(lines[k][0], f'marked facets {stray} are not exterior facets')

	logger.info(f'Read mesh {path} with {mesh.vertices.size} vertices and {mesh.cells.size} cells.')
	return mesh


def write_mesh(mesh: Mesh, path: str):
	"""
	Write a mesh in the format read_mesh accepts, including every exterior facet with its marker.
	"""
	with open(path, 'w') as handle:
		handle.write(f'{mesh.dim} {mesh.vertices.size} {mesh.cells.size}\n')
		for x in mesh.coordinates.data_ro.reshape(-1, mesh.dim):
			handle.write(' '.join(repr(float(c)) for c in x) + '\n')
		for cell in mesh.cell_vertex_map.values2d:
			handle.write(' '.join(str(int(v)) for v in cell) + '\n')
		handle.write(f'facets {mesh.exterior_facets.size}\n')
		for marker, facet in zip(mesh.facet_markers, mesh.facet_vertex_map.values2d):
			handle.write(' '.join(str(int(v)) for v in [marker, *facet]) + '\n')

	logger.debug(f'Wrote mesh {mesh.name} to {path}.')


########################################################################################################################
# REORDERING
########################################################################################################################
def reorder(mesh: Mesh) -> Mesh:
	"""
	Renumber the vertices by reverse Cuthill-McKee over the vertex adjacency of the cells. Cells keep their
	order and local vertex order; coordinates, maps and facet markers follow the new numbering. The new mesh
	records `vertex_permutation`, entry k being the old index of new vertex k.
	"""
	order = rcm_order(mesh.vertices.size, adjacency_from_map(mesh.cell_vertex_map))
	new_id = np.empty_like(order)
	new_id[order] = np.arange(order.size)

	markers = {tuple(sorted(int(new_id[v]) for v in f)): int(m)
			   for f, m in zip(mesh.facet_vertex_map.values2d, mesh.facet_markers)}
	coordinates = mesh.coordinates.data_ro.reshape(-1, mesh.dim)[order]
	cells = new_id[mesh.cell_vertex_map.values2d]

	reordered = build_mesh(coordinates, cells, markers, name=f'{mesh.name}_rcm')
	reordered.vertex_permutation = order
	logger.debug(f'Reordered mesh {mesh.name} by reverse Cuthill-McKee.')
	return reordered
