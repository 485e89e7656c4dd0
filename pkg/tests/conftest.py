import numpy as np
import pytest

from fem.functionspace import FunctionSpace
from fem.mesh import (
	build_mesh,
	unit_cube_mesh,
	unit_square_mesh
)
from helpers.settings import get_settings


# MESHES ###############################################################################################################
@pytest.fixture
def triangle():
	"""
	The reference triangle, one cell with area 1/2.
	"""
	return build_mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]], name='triangle')


@pytest.fixture
def square2():
	return unit_square_mesh(2)


@pytest.fixture
def square4():
	return unit_square_mesh(4)


@pytest.fixture
def cube1():
	return unit_cube_mesh(1)


@pytest.fixture
def p1_square4(square4):
	return FunctionSpace(square4, 1)


@pytest.fixture
def p2_square4(square4):
	return FunctionSpace(square4, 2)


@pytest.fixture
def rng():
	return np.random.default_rng(2)


# SETTINGS #############################################################################################################
@pytest.fixture
def bench_env(tmp_path, monkeypatch):
	"""
	Settings pointing the order database to a temporary folder.
	"""
	monkeypatch.setenv('BENCH_DB_PATH', str(tmp_path / 'orders.db'))
	monkeypatch.setenv('BENCH_THREADS', '1')
	get_settings.cache_clear()
	yield get_settings()
	get_settings.cache_clear()
