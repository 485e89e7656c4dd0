import numpy as np

from dataclasses import (
	dataclass,
	field
)
from functools import lru_cache
from loguru import logger
from typing import (
	Optional,
	Sequence,
	Union
)

from fem.element import (
	FACET_CELL,
	ReferenceElement,
	lagrange_element
)
from fem.exceptions import SpaceMismatch
from fem.mesh import Mesh
from op2.topology import (
	Map,
	Set,
	make_map
)


########################################################################################################################
# NODE NUMBERING
########################################################################################################################
@dataclass(frozen=True, eq=False)
class SpaceTopology:
	"""
	Node numbering of a Lagrange space on a mesh. P1 nodes are the mesh vertices (same Set, same Map); P2
	appends one node per unique edge, edges keyed by their sorted vertex pair in lexicographic order.
	"""
	mesh: Mesh
	degree: int
	node_set: Set
	cell_node_map: Map
	facet_node_map: Map
	edges: np.ndarray = field(repr=False)
	_subsets: dict = field(default_factory=dict, repr=False)

	def node_coordinates(self) -> np.ndarray:
		x = self.mesh.coordinates.data_ro.reshape(-1, self.mesh.dim)
		if self.degree == 1:
			return x.copy()
		return np.vstack([x, (x[self.edges[:, 0]] + x[self.edges[:, 1]]) / 2.0])

	def facet_subset(self, markers: tuple[int, ...]) -> tuple[Set, Map, Map]:
		"""
		The exterior facets carrying one of the markers, as an iteration set with its facet-node and
		facet-vertex maps. Cached per marker tuple.
		"""
		if markers not in self._subsets:
			mesh = self.mesh
			chosen = mesh.marked_facets(markers)
			label = '_'.join(str(m) for m in markers)
			subset = Set(chosen.size, f'{mesh.name}_facets_{label}')
			nodes = make_map(subset, self.node_set, self.facet_node_map.arity, self.facet_node_map.values2d[chosen],
							 name=f'{subset.name}_nodes_P{self.degree}')
			vertices = make_map(subset, mesh.vertices, mesh.dim, mesh.facet_vertex_map.values2d[chosen],
								name=f'{subset.name}_vertices')
			self._subsets[markers] = (subset, nodes, vertices)
		return self._subsets[markers]


@lru_cache(maxsize=64)
def space_topology(mesh: Mesh, degree: int) -> SpaceTopology:
	if degree == 1:
		return SpaceTopology(mesh=mesh, degree=1, node_set=mesh.vertices, cell_node_map=mesh.cell_vertex_map,
							 facet_node_map=mesh.facet_vertex_map, edges=np.empty((0, 2), dtype=np.int64))

	# only triangles reach this point: the element rejects P2 on tetrahedra
	lagrange_element(mesh.cell_type, degree)
	cells = mesh.cell_vertex_map.values2d
	nv, nc = mesh.vertices.size, mesh.cells.size

	# local edge k is opposite local vertex k
	opposite = np.array([[1, 2], [0, 2], [0, 1]])
	cell_edges = np.sort(cells[:, opposite], axis=2).reshape(-1, 2)
	edges, edge_id = np.unique(cell_edges, axis=0, return_inverse=True)
	edge_id = edge_id.reshape(nc, 3)

	node_set = Set(nv + edges.shape[0], f'{mesh.name}_nodes_P2')
	cell_nodes = np.hstack([cells, nv + edge_id])
	cell_node_map = make_map(mesh.cells, node_set, 6, cell_nodes, name=f'{mesh.name}_cell_node_P2')

	# facet vertices are ascending, so the pair is already an edge key
	facets = mesh.facet_vertex_map.values2d
	facet_edge = np.searchsorted(edges[:, 0] * nv + edges[:, 1], facets[:, 0] * nv + facets[:, 1])
	facet_nodes = np.column_stack([facets, nv + facet_edge])
	facet_node_map = make_map(mesh.exterior_facets, node_set, 3, facet_nodes, name=f'{mesh.name}_facet_node_P2')

	logger.debug(f'Numbered {node_set.size} P2 nodes on {mesh.name} ({edges.shape[0]} edges).')
	return SpaceTopology(mesh=mesh, degree=2, node_set=node_set, cell_node_map=cell_node_map,
						 facet_node_map=facet_node_map, edges=edges)


########################################################################################################################
# FUNCTION SPACES
########################################################################################################################
class FunctionSpace:
	"""
	Continuous Lagrange space of degree 1 or 2 with `dim` components per node. Spaces built on the same mesh and
	degree share their node set and maps.
	"""
	def __init__(self, mesh: Mesh, degree: int = 1, dim: int = 1, name: Optional[str] = None):
		self.mesh = mesh
		self.degree = degree
		self.dim = dim
		self.element: ReferenceElement = lagrange_element(mesh.cell_type, degree)
		self.topology = space_topology(mesh, degree)
		self.name = name or f'P{degree}' + (f'^{dim}' if dim > 1 else '')

	def __repr__(self):
		return f'FunctionSpace({self.name!r} on {self.mesh.name})'

	@property
	def node_set(self) -> Set:
		return self.topology.node_set

	@property
	def cell_node_map(self) -> Map:
		return self.topology.cell_node_map

	@property
	def facet_node_map(self) -> Map:
		return self.topology.facet_node_map

	@property
	def facet_element(self) -> ReferenceElement:
		return lagrange_element(FACET_CELL[self.mesh.cell_type], self.degree)

	@property
	def node_count(self) -> int:
		return self.node_set.size

	@property
	def dof_count(self) -> int:
		return self.node_set.size * self.dim

	def node_coordinates(self) -> np.ndarray:
		return self.topology.node_coordinates()

	def boundary_nodes(self, markers: Union[int, Sequence[int]]) -> np.ndarray:
		"""
		Sorted nodes lying on the exterior facets that carry any of the markers.
		"""
		facets = self.mesh.marked_facets(markers)
		return np.unique(self.facet_node_map.values2d[facets])

	def compatible(self, other: 'FunctionSpace') -> bool:
		return (isinstance(other, FunctionSpace) and other.mesh is self.mesh and other.degree == self.degree
				and other.dim == self.dim)

	def split(self) -> tuple['FunctionSpace', ...]:
		return (self,)


def VectorFunctionSpace(mesh: Mesh, degree: int = 1, dim: Optional[int] = None) -> FunctionSpace:
	return FunctionSpace(mesh, degree, dim or mesh.dim, name=f'VP{degree}')


class MixedFunctionSpace:
	"""
	Concatenation of scalar spaces on one mesh. Degrees of freedom are numbered space by space, so block i of a
	flat vector occupies [offsets[i], offsets[i + 1]).
	"""
	def __init__(self, spaces: Sequence[FunctionSpace]):
		spaces = tuple(spaces)
		if not spaces:
			raise SpaceMismatch('a mixed space needs at least one subspace')
		if any(s.mesh is not spaces[0].mesh for s in spaces):
			raise SpaceMismatch('all subspaces of a mixed space must live on the same mesh')
		self.spaces = spaces
		self.mesh = spaces[0].mesh
		self.offsets = np.concatenate(([0], np.cumsum([s.dof_count for s in spaces]))).astype(np.int64)
		self._monolithic = None

	def __repr__(self):
		return f'MixedFunctionSpace({" x ".join(s.name for s in self.spaces)})'

	def __len__(self):
		return len(self.spaces)

	def __getitem__(self, i: int) -> FunctionSpace:
		return self.spaces[i]

	def split(self) -> tuple[FunctionSpace, ...]:
		return self.spaces

	@property
	def dof_count(self) -> int:
		return int(self.offsets[-1])

	@property
	def monolithic(self) -> tuple[Set, Map]:
		"""
		Single node set and cell map over the concatenated numbering, for assembling all blocks in one loop.
		"""
		if any(s.dim != 1 for s in self.spaces):
			raise SpaceMismatch('monolithic numbering needs scalar subspaces')
		if self._monolithic is None:
			node_set = Set(self.dof_count, 'mixed_nodes')
			values = np.hstack([s.cell_node_map.values2d + off for s, off in zip(self.spaces, self.offsets)])
			cell_map = make_map(self.mesh.cells, node_set, values.shape[1], values, name='mixed_cell_node')
			self._monolithic = (node_set, cell_map)
		return self._monolithic
