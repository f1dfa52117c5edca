"""Owning distributed data structures.

DistributedVector block-partitions n elements into ceil(n/p)-sized
segments, one per locale.  The dense and sparse matrices share a tile
grid produced by a TilingDescriptor: the matrix is cut into tiles and
each tile is assigned to a locale by the 2-D block-cyclic owner rule
``locale(i, j) = (i mod pr) * pc + (j mod pc)`` over a pr x pc processor
grid.  Matrix iteration follows the GraphBLAS convention and yields
(row, col, value) tuples; segments are the tiles in row-major tile order,
so segment concatenation equals global iteration for every container.

Construction is driver-side only.  After construction, distinct segments
or tiles may be used concurrently from their owning locales; driver-side
global get/set is unsynchronized with in-flight tasks, so wait first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Distribution, SegmentDescriptor
from . import mmio


class VectorSegment:
    """One contiguous piece of a distributed vector, on a single locale."""

    __slots__ = ("handle", "start", "length")

    def __init__(self, handle, start: int, length: int):
        self.handle = handle
        self.start = start
        self.length = length

    @property
    def rank(self):
        return self.handle.locale

    @property
    def runtime(self):
        return self.handle.runtime

    writable = True

    def __len__(self):
        return self.length

    def get(self, i: int):
        return self.handle.read(self.start + self._check(i))

    def set(self, i: int, value):
        self.handle.write(self.start + self._check(i), value)

    def __iter__(self):
        span = self.local_span()
        for i in range(self.length):
            yield span[i].item()

    def eval_array(self) -> np.ndarray:
        return self.local_span()

    def store_array(self, values):
        span = self.local_span()
        span[...] = values

    def local_span(self) -> np.ndarray:
        return self.handle.span()[self.start : self.start + self.length]

    def slice(self, start: int, length: int) -> "VectorSegment":
        if not (0 <= start and start + length <= self.length):
            raise IndexError(f"slice [{start}, {start + length}) outside segment of {self.length}")
        return VectorSegment(self.handle, self.start + start, length)

    def _check(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(f"index {i} out of range [0, {self.length})")
        return i

    def __repr__(self):
        return f"VectorSegment(rank={self.rank}, length={self.length})"


class DistributedVector:
    """A one-dimensional array partitioned over the runtime's locales.

    By default n elements over P locales get the block partition: P
    segments with room for ceil(n/P) elements each, the tail truncated
    (possibly to zero-length segments, which keep segment i on locale i).
    ``partition`` overrides this with a segment count or an explicit list
    of segment lengths.

    Global indexing does the segment arithmetic internally; iteration
    walks segment by segment.  Both are for convenience and carry no
    performance promise; bulk work should go through segments().
    """

    def __init__(self, runtime, n: int, init=0.0, dtype=None, partition=None):
        if n < 0:
            raise ValueError("vector length must be non-negative")
        if dtype is None:
            dtype = np.result_type(init)
        self.runtime = runtime
        self.n = n
        self.dtype = np.dtype(dtype)
        self.distribution = self._make_distribution(n, partition, runtime.locale_count)
        self.storage = []
        for d in self.distribution.descriptors:
            handle = runtime.allocate(d.rank, d.length, self.dtype)
            if d.length and init != 0:
                handle.span()[...] = init
            self.storage.append(handle)
        # Uniform block partitions allow O(1) index arithmetic.
        self._block = None
        if partition is None and n > 0:
            self._block = math.ceil(n / runtime.locale_count)
        self._starts = np.array(
            [d.global_offset for d in self.distribution.descriptors], dtype=np.int64
        )

    @staticmethod
    def _make_distribution(n, partition, locale_count) -> Distribution:
        if partition is None:
            return Distribution.block(n, locale_count, locale_count)
        if isinstance(partition, int):
            return Distribution.block(n, partition, locale_count)
        dist = Distribution.from_lengths(partition, locale_count)
        if dist.total_length != n:
            raise ValueError(
                f"partition lengths sum to {dist.total_length}, expected {n}"
            )
        return dist

    @classmethod
    def from_numpy(cls, runtime, array, partition=None) -> "DistributedVector":
        array = np.asarray(array)
        if array.ndim != 1:
            raise ValueError("from_numpy expects a 1-D array")
        vec = cls(runtime, len(array), init=0, dtype=array.dtype, partition=partition)
        for seg, d in zip(vec.segments(), vec.distribution.descriptors):
            if d.length:
                seg.local_span()[...] = array[d.global_offset : d.global_offset + d.length]
        return vec

    @classmethod
    def like_distribution(cls, runtime, distribution: Distribution, dtype) -> "DistributedVector":
        """Fresh zero vector with exactly the given distribution."""
        vec = cls.__new__(cls)
        vec.runtime = runtime
        vec.n = distribution.total_length
        vec.dtype = np.dtype(dtype)
        vec.distribution = distribution
        vec.storage = [
            runtime.allocate(d.rank, d.length, vec.dtype)
            for d in distribution.descriptors
        ]
        vec._block = None
        vec._starts = np.array(
            [d.global_offset for d in distribution.descriptors], dtype=np.int64
        )
        return vec

    def segments(self) -> list[VectorSegment]:
        return [
            VectorSegment(h, 0, d.length)
            for h, d in zip(self.storage, self.distribution.descriptors)
        ]

    def __len__(self):
        return self.n

    def _locate(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} out of range [0, {self.n})")
        if self._block is not None:
            seg = i // self._block
            return seg, i - seg * self._block
        seg = int(np.searchsorted(self._starts, i, side="right")) - 1
        return seg, i - int(self._starts[seg])

    def __getitem__(self, i: int):
        seg, off = self._locate(i)
        return self.storage[seg].read(off)

    def __setitem__(self, i: int, value):
        seg, off = self._locate(i)
        self.storage[seg].write(off, value)

    def __iter__(self):
        for seg in self.segments():
            yield from seg

    def to_numpy(self) -> np.ndarray:
        out = np.empty(self.n, dtype=self.dtype)
        for h, d in zip(self.storage, self.distribution.descriptors):
            if d.length:
                out[d.global_offset : d.global_offset + d.length] = h.span()
        return out

    def __repr__(self):
        return (
            f"DistributedVector(n={self.n}, dtype={self.dtype}, "
            f"segments={self.distribution.lengths()})"
        )


# ---------------------------------------------------------------------------
# Matrix tiling


@dataclass(frozen=True)
class TilingDescriptor:
    """How a matrix is cut into tiles and mapped onto locales.

    ``kind`` is one of block_cyclic, block_row, block_column, explicit.
    block_row and block_column resolve to one band of rows/columns per
    locale; block_cyclic fills in a near-square processor grid and an
    even tile split when the parameters are omitted.
    """

    kind: str
    tile_shape: tuple[int, int] | None = None
    processor_grid: tuple[int, int] | None = None

    KINDS = ("block_cyclic", "block_row", "block_column", "explicit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown tiling kind {self.kind!r}")
        if self.kind == "explicit" and (self.tile_shape is None or self.processor_grid is None):
            raise ValueError("explicit tiling requires tile_shape and processor_grid")

    @classmethod
    def block_cyclic(cls, tile_shape=None, processor_grid=None):
        return cls("block_cyclic", tile_shape, processor_grid)

    @classmethod
    def block_row(cls):
        return cls("block_row")

    @classmethod
    def block_column(cls):
        return cls("block_column")

    @classmethod
    def explicit(cls, tile_shape, processor_grid):
        return cls("explicit", tuple(tile_shape), tuple(processor_grid))

    def resolve(self, shape: tuple[int, int], locale_count: int) -> "ResolvedTiling":
        m, k = shape
        if self.kind == "block_row":
            grid = (locale_count, 1)
            tile = (max(1, math.ceil(m / locale_count)), max(1, k))
        elif self.kind == "block_column":
            grid = (1, locale_count)
            tile = (max(1, m), max(1, math.ceil(k / locale_count)))
        else:
            grid = self.processor_grid or _near_square_grid(locale_count)
            tile = self.tile_shape or (
                max(1, math.ceil(m / grid[0])),
                max(1, math.ceil(k / grid[1])),
            )
        return ResolvedTiling(tuple(tile), tuple(grid), locale_count)


def _near_square_grid(p: int) -> tuple[int, int]:
    pr = int(math.isqrt(p))
    while p % pr:
        pr -= 1
    return (pr, p // pr)


@dataclass(frozen=True)
class ResolvedTiling:
    tile_shape: tuple[int, int]
    processor_grid: tuple[int, int]
    locale_count: int

    def __post_init__(self):
        tr, tc = self.tile_shape
        pr, pc = self.processor_grid
        if tr < 1 or tc < 1:
            raise ValueError(f"tile shape components must be >= 1, got {self.tile_shape}")
        if pr < 1 or pc < 1:
            raise ValueError(f"processor grid components must be >= 1, got {self.processor_grid}")
        if pr * pc > self.locale_count:
            raise ValueError(
                f"processor grid {pr}x{pc} exceeds {self.locale_count} locales"
            )

    def locale_of(self, i: int, j: int) -> int:
        pr, pc = self.processor_grid
        return (i % pr) * pc + (j % pc)

    def grid_shape(self, shape: tuple[int, int]) -> tuple[int, int]:
        m, k = shape
        tr, tc = self.tile_shape
        return (math.ceil(m / tr) if m else 0, math.ceil(k / tc) if k else 0)


class TileSegment:
    """A 2-D remote view of one dense tile.

    Iterates GraphBLAS-style as (row, col, value) tuples with global
    indices, row-major within the tile.  The backing storage is row-major
    with the tile's column count as row stride.
    """

    __slots__ = ("handle", "rows", "cols", "row0", "col0")

    def __init__(self, handle, rows, cols, row0, col0):
        self.handle = handle
        self.rows = rows
        self.cols = cols
        self.row0 = row0
        self.col0 = col0

    @property
    def rank(self):
        return self.handle.locale

    @property
    def runtime(self):
        return self.handle.runtime

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def row_stride(self):
        return self.cols

    def __len__(self):
        return self.rows * self.cols

    def local_span(self) -> np.ndarray:
        return self.handle.span().reshape(self.rows, self.cols)

    def get(self, i: int):
        r, c = divmod(i, self.cols)
        return (self.row0 + r, self.col0 + c, self.handle.read(i))

    def __iter__(self):
        span = self.local_span()
        for r in range(self.rows):
            for c in range(self.cols):
                yield (self.row0 + r, self.col0 + c, span[r, c].item())

    def __repr__(self):
        return (
            f"TileSegment(rank={self.rank}, origin=({self.row0}, {self.col0}), "
            f"shape={self.rows}x{self.cols})"
        )


class DistributedDenseMatrix:
    """Dense m x k matrix cut into locale-owned tiles.

    Edge tiles are clipped to the matrix bounds.  ``tile`` exposes a tile
    as a remote 2-D view; ``get_tile`` returns a freshly copied, locale
    independent ndarray and ``get_tile_async`` its asynchronous variant.
    """

    def __init__(self, runtime, shape, tiling: TilingDescriptor | None = None, init=0.0, dtype=np.float64):
        m, k = shape
        if m < 0 or k < 0:
            raise ValueError("matrix shape components must be non-negative")
        self.runtime = runtime
        self.shape = (int(m), int(k))
        self.dtype = np.dtype(dtype)
        tiling = tiling or TilingDescriptor.block_cyclic()
        self.tiling = tiling.resolve(self.shape, runtime.locale_count)
        gr, gc = self.tiling.grid_shape(self.shape)
        self.grid = (gr, gc)
        tr, tc = self.tiling.tile_shape
        self._tiles = []
        for i in range(gr):
            row = []
            rows = min(tr, m - i * tr)
            for j in range(gc):
                cols = min(tc, k - j * tc)
                handle = runtime.allocate(self.tiling.locale_of(i, j), rows * cols, self.dtype)
                if init != 0 and rows * cols:
                    handle.span()[...] = init
                row.append(TileSegment(handle, rows, cols, i * tr, j * tc))
            self._tiles.append(row)

    @classmethod
    def from_numpy(cls, runtime, array, tiling=None) -> "DistributedDenseMatrix":
        array = np.asarray(array)
        if array.ndim != 2:
            raise ValueError("from_numpy expects a 2-D array")
        mat = cls(runtime, array.shape, tiling, init=0, dtype=array.dtype)
        for t in mat.tiles():
            t.local_span()[...] = array[t.row0 : t.row0 + t.rows, t.col0 : t.col0 + t.cols]
        return mat

    def tile(self, i: int, j: int) -> TileSegment:
        gr, gc = self.grid
        if not (0 <= i < gr and 0 <= j < gc):
            raise IndexError(f"tile ({i}, {j}) outside {gr}x{gc} tile grid")
        return self._tiles[i][j]

    def get_tile(self, i: int, j: int) -> np.ndarray:
        return self.tile(i, j).local_span().copy()

    def get_tile_async(self, i: int, j: int):
        t = self.tile(i, j)
        return self.runtime.run_transfer(lambda: t.local_span().copy())

    def tiles(self) -> list[TileSegment]:
        return [t for row in self._tiles for t in row]

    def segments(self) -> list[TileSegment]:
        return self.tiles()

    def _locate(self, i: int, j: int):
        m, k = self.shape
        if not (0 <= i < m and 0 <= j < k):
            raise IndexError(f"element ({i}, {j}) outside {m}x{k} matrix")
        tr, tc = self.tiling.tile_shape
        return self._tiles[i // tr][j // tc], i % tr, j % tc

    def __getitem__(self, idx):
        t, r, c = self._locate(*idx)
        return t.handle.read(r * t.cols + c)

    def __setitem__(self, idx, value):
        t, r, c = self._locate(*idx)
        t.handle.write(r * t.cols + c, value)

    def __iter__(self):
        for t in self.tiles():
            yield from t

    def __len__(self):
        return self.shape[0] * self.shape[1]

    def to_numpy(self) -> np.ndarray:
        out = np.empty(self.shape, dtype=self.dtype)
        for t in self.tiles():
            out[t.row0 : t.row0 + t.rows, t.col0 : t.col0 + t.cols] = t.local_span()
        return out

    def __repr__(self):
        return (
            f"DistributedDenseMatrix(shape={self.shape}, grid={self.grid}, "
            f"tile={self.tiling.tile_shape}, procs={self.tiling.processor_grid})"
        )


class SparseTileSegment:
    """One tile of a block-CSR sparse matrix.

    Stores a CSR block (row offsets, in-tile column indices, values) on the
    tile's locale and iterates its stored entries as global
    (row, col, value) tuples in row-major order.
    """

    __slots__ = ("rowptr", "colind", "values", "rows", "cols", "row0", "col0")

    def __init__(self, rowptr, colind, values, rows, cols, row0, col0):
        self.rowptr = rowptr
        self.colind = colind
        self.values = values
        self.rows = rows
        self.cols = cols
        self.row0 = row0
        self.col0 = col0
        self._validate()

    def _validate(self):
        rp = self.rowptr.span()
        if len(rp) != self.rows + 1 or rp[0] != 0 or rp[-1] != self.nnz:
            raise ValueError("malformed CSR row offsets")
        if np.any(np.diff(rp) < 0):
            raise ValueError("CSR row offsets must be nondecreasing")
        ci = self.colind.span()
        if self.nnz and (ci.min() < 0 or ci.max() >= self.cols):
            raise ValueError("CSR column index outside tile width")

    @property
    def rank(self):
        return self.values.locale

    @property
    def runtime(self):
        return self.values.runtime

    @property
    def nnz(self) -> int:
        return self.values.length

    def __len__(self):
        return self.nnz

    def get(self, i: int):
        if not 0 <= i < self.nnz:
            raise IndexError(f"stored-element index {i} out of range [0, {self.nnz})")
        row = int(np.searchsorted(self.rowptr.span(), i, side="right")) - 1
        return (
            self.row0 + row,
            self.col0 + self.colind.read(i),
            self.values.read(i),
        )

    def __iter__(self):
        rp = self.rowptr.span()
        ci = self.colind.span()
        vals = self.values.span()
        for r in range(self.rows):
            for p in range(rp[r], rp[r + 1]):
                yield (self.row0 + r, self.col0 + int(ci[p]), vals[p].item())

    def csr_arrays(self):
        return self.rowptr.span(), self.colind.span(), self.values.span()

    def __repr__(self):
        return f"SparseTileSegment(rank={self.rank}, nnz={self.nnz}, shape={self.rows}x{self.cols})"


class DistributedSparseMatrix:
    """Block-CSR sparse matrix over the same tile grid as the dense matrix.

    Iteration yields stored elements as (row, col, value) tuples: tiles in
    row-major tile order, entries in CSR row-major order within each tile.
    Duplicate input entries are summed at construction.
    """

    def __init__(self, runtime, shape, tuples, tiling: TilingDescriptor | None = None, dtype=np.float64):
        m, k = shape
        if m < 0 or k < 0:
            raise ValueError("matrix shape components must be non-negative")
        self.runtime = runtime
        self.shape = (int(m), int(k))
        self.dtype = np.dtype(dtype)
        tiling = tiling or TilingDescriptor.block_cyclic()
        self.tiling = tiling.resolve(self.shape, runtime.locale_count)
        self.grid = self.tiling.grid_shape(self.shape)

        rows, cols, vals = _split_tuples(tuples, self.dtype)
        if len(rows) and (
            rows.min() < 0 or cols.min() < 0 or rows.max() >= m or cols.max() >= k
        ):
            bad = int(np.argmax((rows < 0) | (cols < 0) | (rows >= m) | (cols >= k)))
            raise ValueError(
                f"entry ({rows[bad]}, {cols[bad]}) out of bounds for {m}x{k} matrix"
            )
        rows, cols, vals = _sum_duplicates(rows, cols, vals)

        tr, tc = self.tiling.tile_shape
        gr, gc = self.grid
        tile_ids = (rows // tr) * gc + (cols // tc) if len(rows) else rows
        self._tiles = []
        for i in range(gr):
            row_tiles = []
            trows = min(tr, m - i * tr)
            for j in range(gc):
                tcols = min(tc, k - j * tc)
                mask = tile_ids == i * gc + j
                row_tiles.append(
                    self._build_tile(
                        rows[mask] - i * tr,
                        cols[mask] - j * tc,
                        vals[mask],
                        trows,
                        tcols,
                        i * tr,
                        j * tc,
                        self.tiling.locale_of(i, j),
                    )
                )
            self._tiles.append(row_tiles)

    def _build_tile(self, r, c, v, rows, cols, row0, col0, locale) -> SparseTileSegment:
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        rowptr = np.zeros(rows + 1, dtype=np.int64)
        np.add.at(rowptr, r + 1, 1)
        np.cumsum(rowptr, out=rowptr)
        hp = self.runtime.allocate(locale, rows + 1, np.int64)
        hc = self.runtime.allocate(locale, len(c), np.int64)
        hv = self.runtime.allocate(locale, len(v), self.dtype)
        hp.span()[...] = rowptr
        hc.span()[...] = c
        hv.span()[...] = v
        return SparseTileSegment(hp, hc, hv, rows, cols, row0, col0)

    @classmethod
    def from_tuples(cls, runtime, shape, tuples, tiling=None, dtype=np.float64):
        return cls(runtime, shape, tuples, tiling, dtype)

    @classmethod
    def load_matrix_market(cls, runtime, path, tiling=None) -> "DistributedSparseMatrix":
        shape, rows, cols, vals, field = mmio.read_matrix_market(path)
        dtype = np.int64 if field == "integer" else np.float64
        return cls(runtime, shape, zip(rows, cols, vals), tiling, dtype)

    @property
    def nnz(self) -> int:
        return sum(t.nnz for t in self.tiles())

    def tile(self, i: int, j: int) -> SparseTileSegment:
        gr, gc = self.grid
        if not (0 <= i < gr and 0 <= j < gc):
            raise IndexError(f"tile ({i}, {j}) outside {gr}x{gc} tile grid")
        return self._tiles[i][j]

    def tiles(self) -> list[SparseTileSegment]:
        return [t for row in self._tiles for t in row]

    def segments(self) -> list[SparseTileSegment]:
        return self.tiles()

    def __iter__(self):
        for t in self.tiles():
            yield from t

    def __len__(self):
        return self.nnz

    def __repr__(self):
        return f"DistributedSparseMatrix(shape={self.shape}, nnz={self.nnz}, grid={self.grid})"


def _split_tuples(tuples, dtype):
    rows, cols, vals = [], [], []
    for r, c, v in tuples:
        rows.append(r)
        cols.append(c)
        vals.append(v)
    return (
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=dtype),
    )


def _sum_duplicates(rows, cols, vals):
    if not len(rows):
        return rows, cols, vals
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    new = np.ones(len(rows), dtype=bool)
    new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    groups = np.cumsum(new) - 1
    out_vals = np.zeros(int(groups[-1]) + 1, dtype=vals.dtype)
    np.add.at(out_vals, groups, vals)
    return rows[new], cols[new], out_vals
