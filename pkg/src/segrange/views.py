"""Lazily evaluated views over segmented, remote, and plain ranges.

Views hold their bases by reference, never copy elements, and re-expose
``segments()`` whenever a base is segmented, so views stack recursively
and still plug into the segment-parallel algorithms.  Constructing a view
reads no elements.

``zip`` honours a process-wide mode: ``relaxed`` (default) realigns
non-aligned inputs by cutting at the union of their segment boundaries,
``strict`` refuses to create such zips (NonAlignedZip), matching
execution models where fine-grained cross-segment access is too costly.
"""

from __future__ import annotations

import builtins

import numpy as np

from . import core
from .core import has_segments, segments_of

_zip_mode = "relaxed"

MODES = ("relaxed", "strict")


class NonAlignedZip(ValueError):
    """Strict-mode zip over segmented ranges that are not aligned."""


def get_zip_mode() -> str:
    return _zip_mode


def set_zip_mode(mode: str) -> None:
    global _zip_mode
    if mode not in MODES:
        raise ValueError(f"zip mode must be one of {MODES}, got {mode!r}")
    _zip_mode = mode


def _base_len(base) -> int:
    return len(base)


def _base_get(base, i: int):
    get = getattr(base, "get", None)
    if get is not None and not isinstance(base, np.ndarray):
        return get(i)
    v = base[i]
    return v.item() if isinstance(v, np.generic) else v


class LocalPiece:
    """Adapter presenting a plain 1-D array slice as an (unranked) segment.

    Pieces wrapping a converted copy of the caller's data (lists, tuples)
    are read-only so writes fail loudly instead of landing in the copy.
    """

    __slots__ = ("array", "writable")

    rank = None
    runtime = None

    def __init__(self, array, writable: bool = True):
        self.array = array
        self.writable = writable

    def __len__(self):
        return len(self.array)

    def get(self, i: int):
        v = self.array[i]
        return v.item() if isinstance(v, np.generic) else v

    def set(self, i: int, value):
        if not self.writable:
            raise TypeError("cannot write through a sequence converted to a local piece")
        self.array[i] = value

    def eval_array(self):
        return self.array

    def store_array(self, values):
        if not self.writable:
            raise TypeError("cannot write through a sequence converted to a local piece")
        self.array[...] = values

    def slice(self, start: int, length: int) -> "LocalPiece":
        return LocalPiece(self.array[start : start + length], self.writable)

    def __iter__(self):
        for i in range(len(self.array)):
            yield self.get(i)


class _GenericSlice:
    """Sub-view of an arbitrary range/segment that lacks a native slice."""

    __slots__ = ("base", "start", "length")

    writable = False

    def __init__(self, base, start, length):
        self.base = base
        self.start = start
        self.length = length

    @property
    def rank(self):
        return getattr(self.base, "rank", None)

    @property
    def runtime(self):
        return getattr(self.base, "runtime", None)

    def __len__(self):
        return self.length

    def get(self, i: int):
        return _base_get(self.base, self.start + i)

    def eval_array(self):
        ev = getattr(self.base, "eval_array", None)
        if ev is not None:
            vals = ev()
            if isinstance(vals, tuple):
                return tuple(v[self.start : self.start + self.length] for v in vals)
            return vals[self.start : self.start + self.length]
        return np.asarray([self.get(i) for i in range(self.length)])

    def slice(self, start: int, length: int) -> "_GenericSlice":
        return _GenericSlice(self.base, self.start + start, length)

    def __iter__(self):
        for i in range(self.length):
            yield self.get(i)


def _slice_piece(piece, start: int, length: int):
    native = getattr(piece, "slice", None)
    if native is not None:
        return native(start, length)
    return _GenericSlice(piece, start, length)


def _as_piece(base, length: int):
    """Single segment-like piece covering the first `length` elements."""
    if isinstance(base, np.ndarray):
        return LocalPiece(base[:length])
    if isinstance(base, (list, tuple)):
        return LocalPiece(np.asarray(base)[:length], writable=False)
    if hasattr(base, "slice") and hasattr(base, "get"):
        return base if length == len(base) else base.slice(0, length)
    return _GenericSlice(base, 0, length)


# ---------------------------------------------------------------------------
# transform


def _apply_elementwise(fn, piece):
    """fn over a piece's values as an array, falling back to a scalar loop.

    The vectorized attempt is only kept when it yields a well-shaped 1-D
    numeric array; anything else (exceptions from branching code, scalar
    broadcasts, object results) falls back to applying fn per element.
    fn must be pure, so both routes compute the same values.
    """
    n = len(piece)
    values = piece.eval_array() if hasattr(piece, "eval_array") else None
    if values is not None:
        try:
            out = fn(values)
        except Exception:
            out = None
        if isinstance(out, np.ndarray) and out.shape == (n,) and out.dtype != object:
            return out
    return np.asarray([fn(e) for e in piece])


class TransformSegment:
    """A base segment with an elementwise function applied, same rank."""

    __slots__ = ("base", "fn")

    writable = False

    def __init__(self, base, fn):
        self.base = base
        self.fn = fn

    @property
    def rank(self):
        return getattr(self.base, "rank", None)

    @property
    def runtime(self):
        return getattr(self.base, "runtime", None)

    def __len__(self):
        return len(self.base)

    def get(self, i: int):
        return self.fn(self.base.get(i))

    def eval_array(self):
        return _apply_elementwise(self.fn, self.base)

    def slice(self, start: int, length: int) -> "TransformSegment":
        return TransformSegment(_slice_piece(self.base, start, length), self.fn)

    def __iter__(self):
        for e in self.base:
            yield self.fn(e)


class TransformView:
    """Lazy elementwise map over a base range.

    Value at i is fn(base value at i); segments mirror the base's segments
    with the same lengths and ranks.  Read-only.
    """

    __slots__ = ("base", "fn", "is_segmented")

    def __init__(self, base, fn):
        self.base = base
        self.fn = fn
        self.is_segmented = has_segments(base)

    @property
    def rank(self):
        return getattr(self.base, "rank", None) if not self.is_segmented else None

    @property
    def runtime(self):
        return core.runtime_of(self.base)

    def __len__(self):
        return _base_len(self.base)

    def get(self, i: int):
        return self.fn(_base_get(self.base, i))

    def __getitem__(self, i: int):
        return self.get(i)

    def segments(self):
        return [TransformSegment(s, self.fn) for s in segments_of(self.base)]

    def __iter__(self):
        if self.is_segmented:
            for seg in self.segments():
                yield from seg
        else:
            for i in range(len(self)):
                yield self.get(i)


def transform(base, fn) -> TransformView:
    return TransformView(base, fn)


# ---------------------------------------------------------------------------
# trim / take / drop


def trim_segments(segments, f: int, l: int) -> list:
    """Restrict a segment list to global element positions [f, l).

    Fully covered segments pass through unmodified, boundary segments are
    sliced (keeping their rank), and no zero-length segments are emitted.
    """
    segments = list(segments)
    total = sum(len(s) for s in segments)
    if not 0 <= f <= l <= total:
        raise IndexError(f"trim bounds [{f}, {l}) invalid for total length {total}")
    out = []
    pos = 0
    for s in segments:
        n = len(s)
        lo, hi = max(f, pos), min(l, pos + n)
        if hi > lo:
            if lo == pos and hi == pos + n:
                out.append(s)
            else:
                out.append(_slice_piece(s, lo - pos, hi - lo))
        pos += n
    return out


class _TrimmedView:
    """Shared machinery for take and drop: a [start, stop) window."""

    __slots__ = ("base", "start", "stop", "is_segmented")

    def __init__(self, base, start, stop):
        self.base = base
        self.start = start
        self.stop = stop
        self.is_segmented = has_segments(base)

    @property
    def rank(self):
        return getattr(self.base, "rank", None) if not self.is_segmented else None

    @property
    def runtime(self):
        return core.runtime_of(self.base)

    def __len__(self):
        return self.stop - self.start

    def get(self, i: int):
        if not 0 <= i < len(self):
            raise IndexError(f"index {i} out of range [0, {len(self)})")
        return _base_get(self.base, self.start + i)

    def __getitem__(self, i: int):
        return self.get(i)

    def segments(self):
        return trim_segments(segments_of(self.base), self.start, self.stop)

    def __iter__(self):
        if self.is_segmented:
            for seg in self.segments():
                yield from seg
        else:
            for i in range(len(self)):
                yield self.get(i)


class TakeView(_TrimmedView):
    def __init__(self, base, count: int):
        if count < 0:
            raise ValueError("take count must be non-negative")
        n = _base_len(base)
        super().__init__(base, 0, min(count, n))


class DropView(_TrimmedView):
    def __init__(self, base, count: int):
        if count < 0:
            raise ValueError("drop count must be non-negative")
        n = _base_len(base)
        super().__init__(base, min(count, n), n)


def take(base, count: int) -> TakeView:
    return TakeView(base, count)


def drop(base, count: int) -> DropView:
    return DropView(base, count)


# ---------------------------------------------------------------------------
# zip


class ZipSegment:
    """Corresponding pieces of several bases, elementwise tupled.

    Every component spans the same global positions and lies wholly in one
    segment of its base, so the zip piece has a well-defined rank: that of
    the first component with one (the first remote base, by convention).
    Writes go through per-component stores and require writable components.
    """

    __slots__ = ("components",)

    def __init__(self, components):
        self.components = tuple(components)

    @property
    def rank(self):
        for c in self.components:
            r = getattr(c, "rank", None)
            if r is not None:
                return r
        return None

    @property
    def runtime(self):
        for c in self.components:
            rt = getattr(c, "runtime", None)
            if rt is not None:
                return rt
        return None

    def __len__(self):
        return len(self.components[0]) if self.components else 0

    def get(self, i: int):
        return tuple(c.get(i) for c in self.components)

    def set(self, i: int, value):
        if len(value) != len(self.components):
            raise ValueError(
                f"expected a {len(self.components)}-tuple, got {len(value)} values"
            )
        for c, v in builtins.zip(self.components, value):
            if v is None:
                continue
            setter = getattr(c, "set", None)
            if setter is None:
                raise TypeError(f"zip component {type(c).__name__} is read-only")
            setter(i, v)

    def eval_array(self):
        return tuple(c.eval_array() for c in self.components)

    def store_arrays(self, values):
        if len(values) != len(self.components):
            raise ValueError(
                f"expected a {len(self.components)}-tuple, got {len(values)} arrays"
            )
        for c, v in builtins.zip(self.components, values):
            if v is None:
                continue
            if isinstance(c, ZipSegment):
                c.store_arrays(v)
                continue
            store = getattr(c, "store_array", None)
            if store is None:
                raise TypeError(f"zip component {type(c).__name__} is read-only")
            store(v)

    def slice(self, start: int, length: int) -> "ZipSegment":
        return ZipSegment(tuple(_slice_piece(c, start, length) for c in self.components))

    def __iter__(self):
        for tup in builtins.zip(*self.components):
            yield tup

    def __repr__(self):
        return f"ZipSegment(rank={self.rank}, length={len(self)}, arity={len(self.components)})"


def realign_segments(segment_lists) -> list[ZipSegment]:
    """Produce a common segmentation for several segment lists.

    Sweeps all lists in lockstep, repeatedly emitting a zipped chunk whose
    length is the minimum remaining extent in any list's current segment.
    The output boundaries are exactly the union of the inputs' internal
    segment boundaries.  All lists must cover the same total length.
    """
    lists = [list(lst) for lst in segment_lists]
    totals = [sum(len(p) for p in lst) for lst in lists]
    if len(set(totals)) > 1:
        raise ValueError(f"cannot realign ranges of different lengths: {totals}")
    total = totals[0] if totals else 0
    idx = [0] * len(lists)
    off = [0] * len(lists)
    out = []
    pos = 0
    while pos < total:
        for b, lst in enumerate(lists):
            while off[b] == len(lst[idx[b]]):
                idx[b] += 1
                off[b] = 0
        chunk = min(len(lst[idx[b]]) - off[b] for b, lst in enumerate(lists))
        components = []
        for b, lst in enumerate(lists):
            piece = lst[idx[b]]
            if off[b] == 0 and chunk == len(piece):
                components.append(piece)
            else:
                components.append(_slice_piece(piece, off[b], chunk))
            off[b] += chunk
        out.append(ZipSegment(components))
        pos += chunk
    return out


class ZipView:
    """Elementwise tupling of two or more ranges, truncated to the shortest.

    Segmented as soon as any base is; its segments are produced by trimming
    every base to the common length and realigning at the union of their
    boundaries (which degenerates to a plain per-segment pairing for
    aligned bases).  In strict mode, segmented bases must be aligned up
    front or construction fails.
    """

    __slots__ = ("bases", "mode", "n", "is_segmented")

    def __init__(self, bases, mode=None):
        if len(bases) < 2:
            raise TypeError("zip needs at least two ranges")
        if mode is not None and mode not in MODES:
            raise ValueError(f"zip mode must be one of {MODES}, got {mode!r}")
        self.bases = tuple(bases)
        self.mode = mode or get_zip_mode()
        self.n = min(_base_len(b) for b in self.bases)
        self.is_segmented = any(has_segments(b) for b in self.bases)
        if self.mode == "strict" and self.is_segmented:
            shapes = [
                [(len(p), getattr(p, "rank", None)) for p in trim_segments(segments_of(b), 0, self.n)]
                for b in self.bases
                if has_segments(b)
            ]
            if not core.aligned_shapes(shapes):
                raise NonAlignedZip(
                    "strict mode forbids zipping non-aligned segmented ranges; "
                    "realign the data or use relaxed mode"
                )

    @property
    def rank(self):
        if self.is_segmented:
            return None
        for b in self.bases:
            r = getattr(b, "rank", None)
            if r is not None:
                return r
        return None

    @property
    def runtime(self):
        return core.runtime_of(*self.bases)

    def __len__(self):
        return self.n

    def get(self, i: int):
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} out of range [0, {self.n})")
        return tuple(_base_get(b, i) for b in self.bases)

    def __getitem__(self, i: int):
        return self.get(i)

    def segments(self) -> list[ZipSegment]:
        lists = []
        for b in self.bases:
            if has_segments(b):
                lists.append(trim_segments(segments_of(b), 0, self.n))
            else:
                lists.append([_as_piece(b, self.n)] if self.n else [])
        return realign_segments(lists)

    def __iter__(self):
        if self.is_segmented:
            for seg in self.segments():
                yield from seg
        else:
            for i in range(self.n):
                yield self.get(i)

    def __repr__(self):
        return f"ZipView(arity={len(self.bases)}, n={self.n}, mode={self.mode!r})"


def zip(*bases, mode=None) -> ZipView:  # noqa: A001 - mirrors the view name
    return ZipView(bases, mode=mode)
