import numpy as np
import pytest

from fem.assembly import assemble
from fem.exceptions import (
	InvalidSubdivision,
	NonManifold,
	ParseError
)
from fem.form import stiffness
from fem.functionspace import FunctionSpace
from fem.mesh import (
	build_mesh,
	read_mesh,
	rectangle_mesh,
	reorder,
	unit_cube_mesh,
	unit_square_mesh,
	write_mesh
)
from op2.topology import (
	adjacency_from_map,
	bandwidth
)


TWO_TRIANGLES = '''# two triangles sharing the edge 1-2
2 4 2
0.0 0.0
1.0 0.0
0.0 1.0
1.0 1.0
0 1 2
1 3 2
'''


def write_text(tmp_path, text: str, name: str = 'mesh.txt') -> str:
	path = tmp_path / name
	path.write_text(text)
	return str(path)


# GENERATORS ###########################################################################################################
@pytest.mark.parametrize('n, vertices, cells, facets', [(1, 4, 2, 4), (2, 9, 8, 8)])
def test_unit_square_counts(n, vertices, cells, facets):
	mesh = unit_square_mesh(n)
	assert (mesh.vertices.size, mesh.cells.size, mesh.exterior_facets.size) == (vertices, cells, facets)


@pytest.mark.parametrize('n, vertices, cells, facets', [(1, 8, 6, 12), (2, 27, 48, 48)])
def test_unit_cube_counts(n, vertices, cells, facets):
	mesh = unit_cube_mesh(n)
	assert (mesh.vertices.size, mesh.cells.size, mesh.exterior_facets.size) == (vertices, cells, facets)


def test_generated_cells_are_positively_oriented():
	assert np.all(unit_square_mesh(3).cell_volumes() > 0.0)
	assert np.all(unit_cube_mesh(2).cell_volumes() > 0.0)
	assert np.isclose(unit_cube_mesh(2).cell_volumes().sum(), 1.0)


def test_unit_square_markers():
	mesh = unit_square_mesh(2)
	x = mesh.coordinates.data_ro
	for marker, axis, value in ((1, 0, 0.0), (2, 0, 1.0), (3, 1, 0.0), (4, 1, 1.0)):
		facets = mesh.marked_facets(marker)
		assert facets.size == 2
		assert np.all(x[mesh.facet_vertex_map.values2d[facets], axis] == value)


def test_unit_cube_markers():
	mesh = unit_cube_mesh(1)
	for marker in range(1, 7):
		assert mesh.marked_facets(marker).size == 2


def test_rectangle_extent():
	mesh = rectangle_mesh(3, 2, 2.0, 0.5)
	assert mesh.coordinates.data_ro.max(axis=0).tolist() == [2.0, 0.5]
	assert np.isclose(mesh.cell_volumes().sum(), 1.0)


def test_subdivisions_must_be_positive():
	with pytest.raises(InvalidSubdivision):
		unit_square_mesh(0)
	with pytest.raises(InvalidSubdivision):
		unit_cube_mesh(0)


def test_facet_shared_by_three_cells():
	with pytest.raises(NonManifold):
		build_mesh([[0, 0], [1, 0], [0, 1], [1, 1], [-1, 0]], [[0, 1, 2], [1, 3, 2], [1, 2, 4]])


# FILE FORMAT ##########################################################################################################
def test_read_two_triangles(tmp_path):
	mesh = read_mesh(write_text(tmp_path, TWO_TRIANGLES))
	assert mesh.cells.size == 2
	assert mesh.exterior_facets.size == 4


def test_read_single_triangle_with_markers(tmp_path):
	text = '2 3 1\n0 0\n1 0\n0 1\n0 1 2\nfacets 1\n7 1 2\n'
	mesh = read_mesh(write_text(tmp_path, text))
	assert mesh.exterior_facets.size == 3
	assert sorted(mesh.facet_markers.tolist()) == [0, 0, 7]


def test_read_rejects_vertex_out_of_range(tmp_path):
	with pytest.raises(ParseError) as error:
		read_mesh(write_text(tmp_path, TWO_TRIANGLES.replace('1 3 2', '1 9 2')))
	assert error.value.line == 8


def test_read_rejects_truncated_file(tmp_path):
	with pytest.raises(ParseError):
		read_mesh(write_text(tmp_path, '2 4 2\n0 0\n1 0\n'))


def test_write_then_read_keeps_markers(tmp_path, square2):
	path = str(tmp_path / 'square.txt')
	write_mesh(square2, path)
	again = read_mesh(path)
	assert again.facet_markers.tolist() == square2.facet_markers.tolist()
	assert np.array_equal(again.coordinates.data_ro, square2.coordinates.data_ro)


# REORDERING ###########################################################################################################
def test_reorder_keeps_counts():
	mesh = reorder(unit_square_mesh(1))
	assert (mesh.vertices.size, mesh.cells.size) == (4, 2)


def test_reorder_permutes_the_stiffness_matrix():
	mesh = unit_square_mesh(4)
	reordered = reorder(mesh)
	perm = reordered.vertex_permutation
	A = assemble(stiffness(FunctionSpace(mesh, 1))).to_dense()
	B = assemble(stiffness(FunctionSpace(reordered, 1))).to_dense()
	assert np.allclose(B, A[np.ix_(perm, perm)], rtol=0.0, atol=1e-14)


def test_reorder_narrows_a_shuffled_strip(rng):
	strip = rectangle_mesh(12, 1)
	shuffle = rng.permutation(strip.vertices.size)
	new_id = np.empty_like(shuffle)
	new_id[shuffle] = np.arange(shuffle.size)
	shuffled = build_mesh(strip.coordinates.data_ro[shuffle], new_id[strip.cell_vertex_map.values2d])

	before = bandwidth(adjacency_from_map(shuffled.cell_vertex_map))
	after = bandwidth(adjacency_from_map(reorder(shuffled).cell_vertex_map))
	assert after <= before
	assert after <= 3


def test_reorder_keeps_boundary_markers():
	mesh = unit_square_mesh(3)
	reordered = reorder(mesh)
	x = reordered.coordinates.data_ro
	facets = reordered.marked_facets(1)
	assert facets.size == 3
	assert np.all(x[reordered.facet_vertex_map.values2d[facets], 0] == 0.0)
