import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from segrange import (
    Distribution,
    DistributedVector,
    OffLocaleAccess,
    SegmentDescriptor,
    is_aligned,
    local_view,
    rank_of,
    segments_of,
    views,
)


class TestDistribution:
    def test_block_10_over_3(self):
        d = Distribution.block(10, 3)
        assert d.lengths() == [4, 4, 2]
        assert [s.rank for s in d.descriptors] == [0, 1, 2]

    def test_block_emits_trailing_empty_segments(self):
        d = Distribution.block(4, 8)
        assert d.lengths() == [1, 1, 1, 1, 0, 0, 0, 0]
        # locale correspondence stays positional
        assert [s.rank for s in d.descriptors] == list(range(8))

    def test_block_empty_has_no_segments(self):
        assert Distribution.block(0, 3).descriptors == ()

    def test_tiling_validation(self):
        with pytest.raises(ValueError):
            Distribution(5, (SegmentDescriptor(0, 0, 2), SegmentDescriptor(1, 3, 2)))
        with pytest.raises(ValueError):
            Distribution(5, (SegmentDescriptor(0, 0, 2), SegmentDescriptor(1, 2, 2)))
        with pytest.raises(ValueError):
            SegmentDescriptor(0, 0, -1)

    @given(st.integers(0, 100), st.integers(1, 16))
    def test_block_rule_matches_hand_oracle(self, n, p):
        d = Distribution.block(n, p)
        assert d.lengths() == oracles.block_lengths(n, p)
        assert sum(d.lengths()) == n

    @given(st.integers(1, 100), st.integers(1, 16))
    def test_segment_of_agrees_with_linear_search(self, n, p):
        d = Distribution.block(n, p)
        for i in (0, n // 2, n - 1):
            seg, off = d.segment_of(i)
            assert d.descriptors[seg].global_offset + off == i
            assert off < d.descriptors[seg].length


class TestRankOf:
    def test_rank_of_raw_segment(self, rt4):
        v = DistributedVector(rt4, 8)
        seg = segments_of(v)[3]
        assert rank_of(seg) == 3
        assert rank_of(seg) == rank_of(seg)  # stable

    def test_transform_over_segment_preserves_rank(self, rt4):
        seg = segments_of(DistributedVector(rt4, 8))[3]
        assert rank_of(views.transform(seg, lambda x: x + 1)) == 3

    def test_zip_of_remote_and_local_takes_first_remote_rank(self, rt3):
        seg = segments_of(DistributedVector(rt3, 9))[2]
        z = views.zip(seg, np.zeros(3))
        assert rank_of(z) == 2
        z = views.zip(np.zeros(3), seg)
        assert rank_of(z) == 2

    def test_non_remote_input_rejected(self):
        with pytest.raises(TypeError):
            rank_of(np.zeros(4))
        with pytest.raises(TypeError):
            rank_of(views.zip(np.zeros(3), np.zeros(3)))


class TestSegmentsOf:
    def test_vector_segments(self, rt3):
        v = DistributedVector(rt3, 10)
        assert [(len(s), s.rank) for s in segments_of(v)] == [(4, 0), (4, 1), (2, 2)]

    def test_empty_vector(self, rt3):
        assert segments_of(DistributedVector(rt3, 0)) == []

    def test_transform_view_mirrors_base(self, rt3):
        v = DistributedVector(rt3, 10)
        t = views.transform(v, lambda x: -x)
        assert [(len(s), s.rank) for s in segments_of(t)] == [
            (len(s), s.rank) for s in segments_of(v)
        ]

    def test_plain_array_is_not_segmented(self):
        with pytest.raises(TypeError):
            segments_of(np.zeros(4))

    def test_concatenation_law_for_vectors(self, rt_pool):
        for p in (1, 2, 3, 7):
            rt = rt_pool(p)
            for n in (0, 1, 2, 5, 17):
                v = DistributedVector.from_numpy(rt, np.arange(n, dtype=np.float64))
                flat = [e for s in segments_of(v) for e in s]
                assert flat == list(v)
                assert flat == list(range(n))


class TestLocalView:
    def test_on_locale_span(self, rt3):
        v = DistributedVector.from_numpy(rt3, np.arange(9, dtype=np.float64))
        seg = segments_of(v)[1]
        span = rt3.submit(1, lambda: local_view(seg).copy()).wait()
        assert span.tolist() == [3.0, 4.0, 5.0]

    def test_wrong_locale_raises(self, rt3):
        seg = segments_of(DistributedVector(rt3, 9))[1]
        with pytest.raises(OffLocaleAccess):
            rt3.submit(0, lambda: local_view(seg)).wait()

    def test_driver_access_raises(self, rt3):
        seg = segments_of(DistributedVector(rt3, 9))[1]
        with pytest.raises(OffLocaleAccess):
            local_view(seg)

    def test_explicit_current_locale(self, rt3):
        seg = segments_of(DistributedVector(rt3, 9))[1]
        assert len(local_view(seg, current=1)) == 3

    def test_empty_segment_on_matching_locale(self, rt_pool):
        rt = rt_pool(8)
        seg = segments_of(DistributedVector(rt, 4))[6]
        assert len(seg) == 0
        span = rt.submit(6, lambda: local_view(seg)).wait()
        assert len(span) == 0

    def test_segment_without_storage(self, rt3):
        seg = segments_of(DistributedVector(rt3, 9))[0]
        t = views.transform(seg, lambda x: x)
        with pytest.raises(TypeError):
            local_view(t, current=0)


class TestIsAligned:
    def test_same_constructor_aligns(self, rt3):
        a = DistributedVector(rt3, 11)
        b = DistributedVector(rt3, 11)
        assert is_aligned(a, b)
        assert is_aligned(b, a)  # symmetric
        assert is_aligned(a, a)  # reflexive

    def test_different_lengths_do_not_align(self, rt_pool):
        rt = rt_pool(2)
        a = DistributedVector(rt, 8, partition=[4, 4])
        b = DistributedVector(rt, 8, partition=[3, 5])
        assert not is_aligned(a, b)

    def test_drop_breaks_alignment(self, rt3):
        v = DistributedVector(rt3, 9)
        assert not is_aligned(v, views.drop(v, 1))

    def test_aligned_implies_pairwise_equal_segments(self, rt3):
        a = DistributedVector(rt3, 10)
        b = DistributedVector(rt3, 10)
        assert is_aligned(a, b)
        for sa, sb in zip(segments_of(a), segments_of(b)):
            assert len(sa) == len(sb) and sa.rank == sb.rank

    def test_needs_two_inputs(self, rt3):
        with pytest.raises(TypeError):
            is_aligned(DistributedVector(rt3, 4))
