"""Segment-parallel algorithms over the segmented-range contract.

Every algorithm here is a collective driver-side call: one driver thread
decomposes the input into segments, launches one task per segment on the
segment's locale, and waits.  Tasks only touch their own segment (or
chunk), which is what makes scheduling irrelevant to the results.

Elementwise functions passed to for_each receive an element (a tuple for
zipped inputs) and return the replacement value, or None to leave the
element alone.  With ``vectorized=True`` the function instead receives the
segment's values as numpy arrays and is invoked once per segment, which is
the fast path for numeric kernels; the default path guarantees exactly one
invocation per element.

reduce and the scans assume the operator is associative (and commutative
across segments); this is documented, not verified.  Results for floats
therefore match a sequential fold only up to reassociation error.
"""

from __future__ import annotations

import functools
import operator
from dataclasses import dataclass

import numpy as np

from . import views as _views
from .containers import DistributedVector
from .core import has_segments, is_aligned, runtime_of, segments_of
from .views import LocalPiece, ZipSegment, ZipView, _apply_elementwise, realign_segments


@dataclass(frozen=True)
class BinaryOp:
    """A binary operator with optional identity and numpy ufunc fast path."""

    fn: callable
    identity: object = None
    ufunc: object = None
    name: str = ""

    def __call__(self, a, b):
        return self.fn(a, b)


add = BinaryOp(operator.add, 0, np.add, "add")
multiply = BinaryOp(operator.mul, 1, np.multiply, "multiply")
minimum = BinaryOp(min, None, np.minimum, "minimum")
maximum = BinaryOp(max, None, np.maximum, "maximum")


def as_binary_op(op) -> BinaryOp:
    if isinstance(op, BinaryOp):
        return op
    if callable(op):
        return BinaryOp(op)
    raise TypeError(f"expected a BinaryOp or callable, got {type(op).__name__}")


def _pieces(r) -> list:
    """The input as a list of segment-like pieces (empty ones dropped).

    Zips decompose through their own segments() even when no base is
    segmented, so their pieces stay writable tuple proxies.
    """
    if has_segments(r) or isinstance(r, ZipView):
        segs = r.segments() if isinstance(r, ZipView) else segments_of(r)
    else:
        segs = [_views._as_piece(r, len(r))]
    return [s for s in segs if len(s)]


def _run_per_segment(rt, jobs) -> list:
    """jobs: (locale or None, thunk) pairs.  Results in job order."""
    if rt is None:
        return [fn() for _, fn in jobs]
    tickets = [rt.submit(loc if loc is not None else 0, fn) for loc, fn in jobs]
    return rt.wait_all(tickets)


# ---------------------------------------------------------------------------
# for_each


def for_each(r, fn, vectorized: bool = False) -> None:
    """Apply fn once per element, in parallel over segments.

    fn's non-None return value replaces the element; for zipped inputs it
    must be a tuple, with None components skipping that base.  All effects
    are visible once for_each returns.
    """
    pieces = _pieces(r)
    if not pieces:
        return
    rt = runtime_of(r)
    jobs = [(seg.rank, _for_each_task(seg, fn, vectorized)) for seg in pieces]
    _run_per_segment(rt, jobs)


def _for_each_task(seg, fn, vectorized):
    if vectorized:

        def task():
            out = fn(seg.eval_array())
            if out is None:
                return
            if isinstance(seg, ZipSegment):
                seg.store_arrays(out)
            else:
                seg.store_array(out)

    else:

        def task():
            for i, e in enumerate(seg):
                out = fn(e)
                if out is not None:
                    _set_element(seg, i, out)

    return task


def _set_element(seg, i, value):
    setter = getattr(seg, "set", None)
    if setter is None:
        raise TypeError(f"cannot write through read-only {type(seg).__name__}")
    setter(i, value)


# ---------------------------------------------------------------------------
# reduce


def reduce(r, init=0, op=add):
    """Fold all elements onto init.

    Per-segment partial reductions run in parallel; the driver combines
    them in ascending segment order, so exact element types give identical
    results for every locale count.
    """
    op = as_binary_op(op)
    pieces = _pieces(r)
    rt = runtime_of(r)
    jobs = [(seg.rank, _reduce_task(seg, op)) for seg in pieces]
    partials = _run_per_segment(rt, jobs)
    acc = init
    for p in partials:
        acc = op.fn(acc, p)
    return acc.item() if isinstance(acc, np.generic) else acc


def _reduce_task(seg, op):
    def task():
        arr = seg.eval_array()
        if isinstance(arr, tuple):
            raise TypeError("reduce needs scalar elements; apply a transform to the zip first")
        if op.ufunc is not None and arr.dtype != object:
            return op.ufunc.reduce(arr)
        return functools.reduce(op.fn, arr.tolist())

    return task


# ---------------------------------------------------------------------------
# scans


def inclusive_scan(r, out, op=add) -> None:
    """out[i] = fold of r[0..i].

    Aligned input and output are scanned segment-in-place: a parallel local
    scan per segment, a driver-side scan of the per-segment totals, then a
    parallel pass adding each segment's incoming offset.  Non-aligned pairs
    stage through a temporary vector aligned with the output.
    """
    _scan_entry(r, out, as_binary_op(op), exclusive=False, init=None)


def exclusive_scan(r, out, init, op=add) -> None:
    """out[0] = init, out[i] = op(init, fold of r[0..i)) for i >= 1."""
    _scan_entry(r, out, as_binary_op(op), exclusive=True, init=init)


def _scan_entry(r, out, op, exclusive, init):
    if len(r) != len(out):
        raise ValueError(f"scan length mismatch: input {len(r)}, output {len(out)}")
    r_seg, o_seg = has_segments(r), has_segments(out)
    if not o_seg:
        if isinstance(out, np.ndarray) and not r_seg:
            src = r if isinstance(r, np.ndarray) else np.asarray(list(r))
            _local_scan_into(src, out, op, exclusive, init)
            return
        raise TypeError("scan output must be a segmented range or a numpy array")
    if r is out or (r_seg and is_aligned(r, out)):
        _scan_aligned(r, out, op, exclusive, init)
        return
    if not isinstance(out, DistributedVector):
        raise TypeError("non-aligned scan needs a DistributedVector output")
    temp = DistributedVector.like_distribution(out.runtime, out.distribution, out.dtype)
    copy(r, temp)
    _scan_aligned(temp, out, op, exclusive, init)


def _local_scan_into(src, out, op, exclusive, init):
    inc = _accumulate(np.asarray(src), op)
    if exclusive:
        out[1:] = inc[:-1]
        if len(out):
            out[0] = init
            out[1:] = _combine(op, init, out[1:])
    else:
        out[...] = inc


def _accumulate(arr, op):
    if op.ufunc is not None and arr.dtype != object:
        return op.ufunc.accumulate(arr)
    vals = arr.tolist()
    acc = []
    cur = None
    for v in vals:
        cur = v if cur is None else op.fn(cur, v)
        acc.append(cur)
    return np.asarray(acc, dtype=arr.dtype)


def _combine(op, scalar, arr):
    if op.ufunc is not None and arr.dtype != object:
        return op.ufunc(scalar, arr)
    return np.asarray([op.fn(scalar, v) for v in arr.tolist()], dtype=arr.dtype)


def _scan_aligned(r, out, op, exclusive, init) -> list:
    """Aligned-scan engine; returns the per-segment input totals.

    The returned list is the partial-sums intermediate (None for empty
    segments) recorded after the local-scan phase and before the driver
    combines them into offsets.
    """
    in_segs = segments_of(r)
    out_segs = segments_of(out)
    rt = runtime_of(out, r)

    jobs = []
    live = []
    for k, (s_in, s_out) in enumerate(zip(in_segs, out_segs)):
        if len(s_in):
            live.append(k)
            jobs.append((s_out.rank, _local_scan_task(s_in, s_out, op, exclusive)))
    results = _run_per_segment(rt, jobs)
    partials = [None] * len(in_segs)
    for k, p in zip(live, results):
        partials[k] = p

    # Scan of the partial sums: offsets[k] folds everything before segment k.
    offsets = []
    prefix = None
    for p in partials:
        offsets.append(prefix)
        if p is not None:
            prefix = p if prefix is None else op.fn(prefix, p)

    jobs = []
    for k in live:
        s_out = out_segs[k]
        off = offsets[k]
        if exclusive:
            seed = init if off is None else op.fn(init, off)
            jobs.append((s_out.rank, _seed_task(s_out, op, seed)))
        elif off is not None:
            jobs.append((s_out.rank, _offset_task(s_out, op, off)))
    _run_per_segment(rt, jobs)
    return partials


def _local_scan_task(s_in, s_out, op, exclusive):
    def task():
        inc = _accumulate(np.asarray(s_in.eval_array()), op)
        if exclusive:
            shifted = np.empty_like(inc)
            shifted[0] = inc[0]  # placeholder, replaced by the seed pass
            shifted[1:] = inc[:-1]
            s_out.store_array(shifted)
        else:
            s_out.store_array(inc)
        return inc[-1].item() if isinstance(inc[-1], np.generic) else inc[-1]

    return task


def _offset_task(s_out, op, off):
    def task():
        s_out.store_array(_combine(op, off, s_out.eval_array()))

    return task


def _seed_task(s_out, op, seed):
    def task():
        vals = s_out.eval_array()
        new = np.empty_like(vals)
        new[0] = seed
        if len(vals) > 1:
            new[1:] = _combine(op, seed, vals[1:])
        s_out.store_array(new)

    return task


# ---------------------------------------------------------------------------
# sort


def sort(r, key=None) -> None:
    """In-place distributed sample sort, ascending (by key if given).

    Locally sorts every segment, picks n-1 evenly spaced samples per
    segment (n = segment count), selects global splitters from the pooled
    samples, counts and redistributes elements into per-locale chunks with
    bulk copies, sorts each chunk, and copies the chunks back over the
    segments in order.  Ties go to the first chunk whose splitter is >=
    the element, so duplicate-heavy inputs stay well-defined.
    """
    segs = segments_of(r)
    for s in segs:
        if not hasattr(s, "local_span"):
            raise TypeError("sort needs raw writable storage segments")
    n_chunks = len(segs)
    total = sum(len(s) for s in segs)
    if total <= 1 or n_chunks == 0:
        return
    rt = runtime_of(r)
    dtype = segs[0].local_span().dtype

    def local_sort(span):
        if key is None:
            span.sort()
        else:
            span[...] = span[np.argsort(_key_values(span, key), kind="stable")]

    live = [s for s in segs if len(s)]
    _run_per_segment(rt, [(s.rank, _sort_span_task(s, local_sort)) for s in live])

    if n_chunks == 1:
        return

    # Evenly spaced order statistics of each sorted segment; short segments
    # contribute everything they have.
    samples = []
    for s in live:
        span = s.local_span()
        m = len(span)
        if m < n_chunks - 1:
            samples.append(span.copy())
        else:
            pos = [(j + 1) * m // n_chunks for j in range(n_chunks - 1)]
            samples.append(span[pos])
    pool = np.concatenate(samples)
    pool = pool[np.argsort(_key_values(pool, key), kind="stable")]
    m = len(pool)
    splitters = pool[[(j + 1) * m // n_chunks for j in range(n_chunks - 1)]]
    split_keys = _key_values(splitters, key)

    counts = np.zeros((n_chunks, n_chunks), dtype=np.int64)
    count_jobs = [(s.rank, _count_task(s, split_keys, key, n_chunks)) for s in live]
    for (k, s), row in zip(
        [(i, s) for i, s in enumerate(segs) if len(s)],
        _run_per_segment(rt, count_jobs),
    ):
        counts[k] = row

    chunk_sizes = counts.sum(axis=0)
    write_offsets = np.zeros_like(counts)
    write_offsets[1:] = np.cumsum(counts, axis=0)[:-1]

    if rt is None:
        raise TypeError("sort needs runtime-backed segments")
    chunks = [
        rt.allocate(segs[j].rank, int(chunk_sizes[j]), dtype) for j in range(n_chunks)
    ]

    # Redistribute: each segment's elements destined for chunk j form one
    # contiguous run of the locally sorted data.
    tickets = []
    for k, s in enumerate(segs):
        if not len(s):
            continue
        span = s.local_span()
        bounds = np.concatenate(([0], np.cumsum(counts[k])))
        for j in range(n_chunks):
            lo, hi = int(bounds[j]), int(bounds[j + 1])
            if hi > lo:
                w = int(write_offsets[k][j])
                tickets.append(
                    rt.copy_async(span[lo:hi], chunks[j].span()[w : w + (hi - lo)])
                )
    rt.wait_all(tickets)

    _run_per_segment(
        rt,
        [
            (chunks[j].locale, _sort_handle_task(chunks[j], local_sort))
            for j in range(n_chunks)
            if chunk_sizes[j]
        ],
    )

    # Chunks concatenated are the sorted data; sweep them back over the
    # segment storage with bulk copies.
    tickets = []
    seg_iter = ((s, s.local_span()) for s in segs if len(s))
    seg_pos = 0
    cur = next(seg_iter, None)
    for j in range(n_chunks):
        src = chunks[j].span()
        src_pos = 0
        while src_pos < len(src):
            s, span = cur
            room = len(span) - seg_pos
            step = min(room, len(src) - src_pos)
            tickets.append(
                rt.copy_async(src[src_pos : src_pos + step], span[seg_pos : seg_pos + step])
            )
            src_pos += step
            seg_pos += step
            if seg_pos == len(span):
                cur = next(seg_iter, None)
                seg_pos = 0
    rt.wait_all(tickets)
    for c in chunks:
        c.free()


def _sort_span_task(seg, local_sort):
    def task():
        local_sort(seg.local_span())

    return task


def _sort_handle_task(handle, local_sort):
    def task():
        local_sort(handle.span())

    return task


def _count_task(seg, split_keys, key, n_chunks):
    def task():
        kv = _key_values(seg.local_span(), key)
        idx = np.searchsorted(split_keys, kv, side="left")
        return np.bincount(idx, minlength=n_chunks)

    return task


def _key_values(arr, key):
    if key is None:
        return arr
    return _apply_elementwise(key, LocalPiece(arr))


# ---------------------------------------------------------------------------
# copy


def copy(src, dst) -> None:
    """Elementwise copy between ranges of equal length.

    Aligned segmented pairs copy segment by segment; everything else is
    decomposed into matching chunks at the union of both sides' segment
    boundaries (the realignment chunking) and copied in bulk.  Sources may
    be lazy views; their chunks are materialized on the fly.
    """
    if len(src) != len(dst):
        raise ValueError(f"copy length mismatch: source {len(src)}, destination {len(dst)}")
    if len(src) == 0:
        return
    rt = runtime_of(dst, src)
    s_seg, d_seg = has_segments(src), has_segments(dst)
    if s_seg and d_seg and is_aligned(src, dst):
        pairs = [
            (s, d)
            for s, d in zip(segments_of(src), segments_of(dst))
            if len(s)
        ]
    else:
        src_list = segments_of(src) if s_seg else [_views._as_piece(src, len(src))]
        dst_list = segments_of(dst) if d_seg else [_views._as_piece(dst, len(dst))]
        pairs = [tuple(ch.components) for ch in realign_segments([src_list, dst_list])]

    def transfer(s, d):
        def run():
            d.store_array(s.eval_array())

        return run

    if rt is None:
        for s, d in pairs:
            d.store_array(s.eval_array())
    else:
        rt.wait_all([rt.run_transfer(transfer(s, d)) for s, d in pairs])
