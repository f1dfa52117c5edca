"""Locality and segmentation contracts.

A *locale* is a region of memory local to one execution agent.  A *remote
range* is a sequence living wholly in one locale; it exposes a ``rank``
(the locale id) and, for contiguous storage, a ``local_span`` giving direct
access to its elements.  A *segmented range* exposes ``segments()``, an
ordered list of remote ranges whose concatenation is the whole sequence.

Everything here is duck-typed.  A segment object participates in the model
by providing (all optional past the first two):

``rank``
    locale id of the segment, or ``None`` for plain local data
``__len__``
    element count
``get(i)`` / ``set(i, v)``
    elementwise access by in-segment index
``eval_array()``
    the segment's values as a numpy array (a tuple of arrays for zips)
``store_array(values)``
    bulk overwrite, only on writable segments
``slice(start, length)``
    a sub-view of the segment, same rank
``local_span()``
    the backing contiguous numpy span, only on raw storage segments
``runtime``
    owning runtime, or ``None``
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

LocaleId = int


class OffLocaleAccess(RuntimeError):
    """Raised when a local span is requested from the wrong locale.

    This signals a misplaced task: bulk element access must happen on the
    locale that owns the storage.
    """


# Locale of the currently executing task, set by runtime workers.  The
# driver thread has no locale.
_tls = threading.local()


def current_locale():
    """Locale id of the task calling this, or ``None`` on the driver."""
    return getattr(_tls, "locale", None)


def _set_current_locale(locale):
    _tls.locale = locale


@dataclass(frozen=True)
class SegmentDescriptor:
    """Placement of one segment: locale, global start offset, length."""

    rank: LocaleId
    global_offset: int
    length: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be non-negative")
        if self.length < 0:
            raise ValueError("segment length must be non-negative")
        if self.global_offset < 0:
            raise ValueError("global offset must be non-negative")


@dataclass(frozen=True)
class Distribution:
    """An ordered tiling of the global index space [0, total_length).

    Descriptors are sorted by offset and cover the index space exactly,
    with no gaps or overlaps.  Zero-length descriptors are permitted (they
    keep locale/segment correspondence positional for partitions like
    n=4 over 8 locales) except in the n=0 case, which has no descriptors.
    """

    total_length: int
    descriptors: tuple[SegmentDescriptor, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "descriptors", tuple(self.descriptors))
        if self.total_length < 0:
            raise ValueError("total_length must be non-negative")
        offset = 0
        for d in self.descriptors:
            if d.global_offset != offset:
                raise ValueError(
                    "descriptors must tile the index space: expected offset "
                    f"{offset}, got {d.global_offset}"
                )
            offset += d.length
        if offset != self.total_length:
            raise ValueError(
                f"descriptor lengths sum to {offset}, expected {self.total_length}"
            )

    @classmethod
    def block(cls, n: int, p: int, locale_count: int | None = None) -> "Distribution":
        """Default block partition: p segments of ceil(n/p) elements each.

        Segment i has length ``min(s, max(0, n - i*s))`` with ``s = ceil(n/p)``,
        so trailing segments may be short or empty.  Segment i lives on locale
        ``i mod locale_count``.  n == 0 yields no segments at all.
        """
        if n < 0:
            raise ValueError("n must be non-negative")
        if p < 1:
            raise ValueError("p must be at least 1")
        lc = locale_count if locale_count is not None else p
        if n == 0:
            return cls(0, ())
        s = math.ceil(n / p)
        descs = []
        offset = 0
        for i in range(p):
            length = min(s, max(0, n - i * s))
            descs.append(SegmentDescriptor(i % lc, offset, length))
            offset += length
        return cls(n, tuple(descs))

    @classmethod
    def from_lengths(cls, lengths, locale_count: int) -> "Distribution":
        """Explicit partition from a list of segment lengths."""
        descs = []
        offset = 0
        for i, length in enumerate(lengths):
            descs.append(SegmentDescriptor(i % locale_count, offset, int(length)))
            offset += int(length)
        return cls(offset, tuple(descs))

    def lengths(self) -> list[int]:
        return [d.length for d in self.descriptors]

    def segment_of(self, i: int) -> tuple[int, int]:
        """Map a global index to (segment index, in-segment offset)."""
        if not 0 <= i < self.total_length:
            raise IndexError(f"index {i} out of range [0, {self.total_length})")
        # Linear scan is fine for the handful of segments we deal with;
        # containers keep a faster uniform-block shortcut.
        for k, d in enumerate(self.descriptors):
            if i < d.global_offset + d.length:
                return k, i - d.global_offset
        raise AssertionError("descriptor tiling violated")


def rank_of(r) -> LocaleId:
    """Locale of a remote range.

    Views over a single remote base report the base's rank; zips of remote
    ranges report the first remote base's rank.  Raises TypeError for
    inputs with no locale (plain arrays, segmented ranges, local zips).
    """
    rank = getattr(r, "rank", None)
    if rank is None:
        raise TypeError(f"{type(r).__name__} is not a remote range (no rank)")
    return rank


def has_segments(r) -> bool:
    # Views always carry a segments() method but only count as segmented
    # when their base does; they advertise that through is_segmented.
    flag = getattr(r, "is_segmented", None)
    if flag is not None:
        return bool(flag)
    return callable(getattr(r, "segments", None))


def segments_of(r) -> list:
    """The ordered remote segments of a segmented range.

    Their concatenation equals the global element sequence of ``r``.
    """
    if not has_segments(r):
        raise TypeError(f"{type(r).__name__} is not a segmented range (no segments())")
    return list(r.segments())


def local_view(segment, current: LocaleId | None = None):
    """Plain contiguous span over a segment's storage, on its own locale.

    ``current`` defaults to the locale of the running task.  Requesting the
    span from any other locale (or from the driver) raises OffLocaleAccess:
    the task was placed on the wrong agent.
    """
    span_fn = getattr(segment, "local_span", None)
    if span_fn is None:
        raise TypeError(f"{type(segment).__name__} has no local storage span")
    if current is None:
        current = current_locale()
    owner = rank_of(segment)
    if current != owner:
        raise OffLocaleAccess(
            f"segment lives on locale {owner}, access attempted from "
            f"{'the driver' if current is None else f'locale {current}'}"
        )
    return span_fn()


def _segment_shape(segs) -> list[tuple[int, LocaleId | None]]:
    return [(len(s), getattr(s, "rank", None)) for s in segs]


def is_aligned(*ranges) -> bool:
    """True iff all inputs have the same number of segments and, at every
    segment index, equal lengths and equal ranks.

    Rank equality is strict integer equality.  Alignment is what lets
    algorithms pair segments positionally (direct zips, in-place scan
    output) without any realignment pass.
    """
    if len(ranges) < 2:
        raise TypeError("is_aligned needs at least two ranges")
    shapes = [_segment_shape(segments_of(r)) for r in ranges]
    first = shapes[0]
    return all(s == first for s in shapes[1:])


def aligned_shapes(shape_lists) -> bool:
    """is_aligned over precomputed (length, rank) lists."""
    if not shape_lists:
        return True
    first = shape_lists[0]
    return all(s == first for s in shape_lists[1:])


def runtime_of(*objs):
    """First discoverable owning runtime among ranges/segments, else None."""
    for obj in objs:
        rt = getattr(obj, "runtime", None)
        if rt is not None:
            return rt
    for obj in objs:
        if has_segments(obj):
            for seg in segments_of(obj):
                rt = getattr(seg, "runtime", None)
                if rt is not None:
                    return rt
    return None
