import numpy as np

from typing import (
	Optional,
	Sequence
)

from op2.data import (
	Mat,
	ScalarType,
	Sparsity
)
from op2.exceptions import DimensionMismatch


class NestedMat:
	"""
	A block matrix kept as a table of Mats, None standing for a zero block. A flat vector is split into blocks
	by the row and column offsets; block row i of the product is the left fold of its blocks from left to right,
	each block row of a block folding its stored entries in order.
	"""
	def __init__(self, blocks: Sequence[Sequence[Optional[Mat]]], row_sizes: Optional[Sequence[int]] = None,
				 col_sizes: Optional[Sequence[int]] = None, name: str = 'nested'):
		self.blocks = [list(row) for row in blocks]
		self.name = name
		if not self.blocks or any(len(row) != len(self.blocks[0]) for row in self.blocks):
			raise DimensionMismatch(f'{name}: blocks must form a non-empty rectangular table')

		rows = self._sizes([[b.shape[0] if b is not None else None for b in row] for row in self.blocks], row_sizes,
						   'row')
		cols = self._sizes([[b.shape[1] if b is not None else None for b in row] for row in zip(*self.blocks)],
						   col_sizes, 'column')
		self.row_offsets = np.concatenate(([0], np.cumsum(rows))).astype(np.int64)
		self.col_offsets = np.concatenate(([0], np.cumsum(cols))).astype(np.int64)

	def _sizes(self, candidates: list[list[Optional[int]]], given: Optional[Sequence[int]], what: str) -> list[int]:
		sizes = []
		for k, seen in enumerate(candidates):
			known = {s for s in seen if s is not None}
			if given is not None:
				known.add(int(given[k]))
			if len(known) != 1:
				raise DimensionMismatch(f'{self.name}: block {what} {k} has sizes {sorted(known) or "unknown"}')
			sizes.append(known.pop())
		return sizes

	def __repr__(self):
		return f'NestedMat({self.name!r}, {len(self.blocks)}x{len(self.blocks[0])} blocks, shape={self.shape})'

	@property
	def shape(self) -> tuple[int, int]:
		return int(self.row_offsets[-1]), int(self.col_offsets[-1])

	def split(self, x, offsets: Optional[np.ndarray] = None) -> list[np.ndarray]:
		offsets = self.col_offsets if offsets is None else offsets
		x = np.asarray(x, dtype=ScalarType)
		if x.shape != (int(offsets[-1]),):
			raise DimensionMismatch(f'{self.name}: vector of shape {x.shape} does not match {int(offsets[-1])} entries')
		return [x[offsets[k]:offsets[k + 1]] for k in range(len(offsets) - 1)]

	@staticmethod
	def join(parts: Sequence[np.ndarray]) -> np.ndarray:
		return np.concatenate([np.asarray(p, dtype=ScalarType) for p in parts])

	def apply(self, parts: Sequence[np.ndarray]) -> list[np.ndarray]:
		"""
		Blockwise product y_i = sum_j A_ij x_j, zero blocks skipped.
		"""
		if len(parts) != len(self.col_offsets) - 1:
			raise DimensionMismatch(f'{self.name}: expected {len(self.col_offsets) - 1} blocks, got {len(parts)}')
		out = []
		for i, row in enumerate(self.blocks):
			y = np.zeros(int(self.row_offsets[i + 1] - self.row_offsets[i]), dtype=ScalarType)
			for block, x in zip(row, parts):
				if block is not None:
					block.spmv(x, out=y)
			out.append(y)
		return out

	def spmv(self, x, out: Optional[np.ndarray] = None) -> np.ndarray:
		y = self.join(self.apply(self.split(x)))
		if out is not None:
			out[...] = y
			return out
		return y

	def diagonal(self) -> np.ndarray:
		parts = []
		for i, row in enumerate(self.blocks):
			size = int(self.row_offsets[i + 1] - self.row_offsets[i])
			block = row[i] if i < len(row) else None
			parts.append(block.diagonal()[:size] if block is not None else np.zeros(size, dtype=ScalarType))
		return self.join(parts)

	def to_mat(self) -> Mat:
		"""
		The same matrix flattened into one CSR Mat. Every row keeps its entries in ascending column order, which
		is also block order, so its product folds the same values in the same order as the nested product.
		"""
		rows, cols, values = [], [], []
		for i, row in enumerate(self.blocks):
			for j, block in enumerate(row):
				if block is None:
					continue
				pattern = block.sparsity
				local_rows = np.repeat(np.arange(pattern.nrows), np.diff(pattern.row_offsets))
				rows.append(local_rows + self.row_offsets[i])
				cols.append(pattern.col_indices + self.col_offsets[j])
				values.append(block.values)

		nrows, ncols = self.shape
		rows = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
		cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
		values = np.concatenate(values) if values else np.empty(0, dtype=ScalarType)
		order = np.argsort(rows * ncols + cols, kind='stable')

		counts = np.bincount(rows, minlength=nrows)
		offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
		sparsity = Sparsity(nrows=nrows, ncols=ncols, row_offsets=offsets, col_indices=cols[order].astype(np.int64))
		mat = Mat(sparsity, name=f'{self.name}_flat')
		mat.values[:] = values[order]
		return mat

	def to_dense(self) -> np.ndarray:
		return self.to_mat().to_dense()


def block_spmv(blocks: Sequence[Sequence[Optional[Mat]]], x: Sequence[np.ndarray]) -> list[np.ndarray]:
	"""
	Product of a block table with a tuple of block vectors.
	:param blocks: table of Mats, None for zero blocks
	:param x: one vector per block column
	:return: one vector per block row
	"""
	sizes = [len(part) for part in x]
	return NestedMat(blocks, col_sizes=sizes).apply(x)
