import operator

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
import segrange as sr
from segrange import DistributedVector, Runtime, views
from segrange.algorithms import BinaryOp, _scan_aligned, add, as_binary_op, multiply


def dvec(rt, values, partition=None, dtype=np.float64):
    return DistributedVector.from_numpy(rt, np.asarray(values, dtype=dtype), partition)


class TestForEach:
    def test_increment(self, rt3):
        v = dvec(rt3, [0, 1, 2])
        sr.for_each(v, lambda x: x + 1)
        assert v.to_numpy().tolist() == [1.0, 2.0, 3.0]

    def test_stream_pattern_over_zip(self, rt3):
        rng = np.random.default_rng(1)
        a_data, b_data = rng.random(23), rng.random(23)
        a = dvec(rt3, a_data)
        b = dvec(rt3, b_data)
        sr.for_each(views.zip(a, b), lambda t: (t[0] + t[1], None))
        expected = [x + y for x, y in zip(a_data.tolist(), b_data.tolist())]
        assert a.to_numpy().tolist() == expected

    def test_empty_range_submits_no_tasks(self, rt3, monkeypatch):
        calls = []
        original = rt3.submit

        def spy(locale, fn, *a, **k):
            calls.append(locale)
            return original(locale, fn, *a, **k)

        monkeypatch.setattr(rt3, "submit", spy)
        sr.for_each(DistributedVector(rt3, 0), lambda x: x)
        assert calls == []

    def test_applied_exactly_once_per_element(self, rt_pool):
        for p in (1, 4, 7):
            rt = rt_pool(p)
            count = {"n": 0}

            def fn(x):
                count["n"] += 1
                return None

            sr.for_each(DistributedVector(rt, 13), fn)
            assert count["n"] == 13

    def test_vectorized_matches_elementwise(self, rt3):
        data = np.linspace(-1, 1, 17)
        a, b = dvec(rt3, data), dvec(rt3, data)
        sr.for_each(a, lambda x: 3 * x + 1)
        sr.for_each(b, lambda x: 3 * x + 1, vectorized=True)
        assert np.array_equal(a.to_numpy(), b.to_numpy())

    def test_vectorized_zip_writeback(self, rt3):
        a = dvec(rt3, np.zeros(9))
        b = dvec(rt3, np.arange(9))
        sr.for_each(views.zip(a, b), lambda t: (t[1] * 2, None), vectorized=True)
        assert a.to_numpy().tolist() == [2.0 * i for i in range(9)]

    def test_read_only_target_rejected(self, rt3):
        t = views.transform(dvec(rt3, [1, 2]), lambda x: x)
        with pytest.raises((TypeError, sr.AggregateTaskError)):
            sr.for_each(t, lambda x: x + 1)

    def test_reading_transform_is_fine(self, rt3):
        seen = []
        t = views.transform(dvec(rt3, [1, 2, 3]), lambda x: 10 * x)
        sr.for_each(views.take(t, 2), lambda x: seen.append(x))
        assert sorted(seen) == [10.0, 20.0]

    def test_plain_array_input(self):
        arr = np.arange(5, dtype=np.float64)
        sr.for_each(arr, lambda x: x + 1)
        assert arr.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_pure_local_zip_runs_without_runtime(self):
        a = np.zeros(4)
        b = np.arange(4, dtype=np.float64)
        sr.for_each(views.zip(a, b), lambda t: (t[1] + 1, None))
        assert a.tolist() == [1.0, 2.0, 3.0, 4.0]


class TestReduce:
    def test_sum_1_to_100(self, rt_pool):
        for p in (1, 2, 3, 4, 7):
            v = DistributedVector.from_numpy(rt_pool(p), np.arange(1, 101, dtype=np.int64))
            assert sr.reduce(v, 0) == 5050

    def test_float_product_tolerance(self, rt_pool):
        rng = np.random.default_rng(5)
        data = 1.0 + rng.random(200) / 100
        results = []
        for p in (1, 4):
            v = dvec(rt_pool(p), data)
            results.append(sr.reduce(v, 1.0, multiply))
        assert oracles.rel_err(results[1], results[0]) < 1e-12

    def test_empty_returns_init(self, rt3):
        assert sr.reduce(DistributedVector(rt3, 0), 17) == 17

    def test_matches_sequential_fold(self, rt_pool):
        rng = np.random.default_rng(9)
        data = rng.random(1003)
        expected = oracles.fold(data.tolist(), operator.add, 0.0)
        for p in (1, 3, 7):
            got = sr.reduce(dvec(rt_pool(p), data), 0.0)
            assert oracles.rel_err(got, expected) < 1e-12

    def test_python_op_path(self, rt3):
        v = dvec(rt3, [3, 1, 4, 1, 5], dtype=np.int64)
        got = sr.reduce(v, 0, BinaryOp(lambda a, b: a + b))
        assert got == 14

    def test_custom_callable_promoted(self, rt3):
        v = dvec(rt3, [2, 3, 4], dtype=np.int64)
        assert sr.reduce(v, 0, operator.add) == 9

    def test_min_max(self, rt3):
        v = dvec(rt3, [5, -2, 9, 3], dtype=np.int64)
        assert sr.reduce(v, 10**9, sr.minimum) == -2
        assert sr.reduce(v, -(10**9), sr.maximum) == 9

    def test_zip_elements_rejected(self, rt3):
        a, b = dvec(rt3, [1, 2]), dvec(rt3, [3, 4])
        with pytest.raises((TypeError, sr.AggregateTaskError)):
            sr.reduce(views.zip(a, b), 0)

    def test_reduce_over_view_pipeline(self, rt3):
        x = dvec(rt3, [1, 2, 3])
        y = dvec(rt3, [4, 5, 6])
        z = views.transform(views.zip(x, y), lambda t: t[0] * t[1])
        assert sr.reduce(z, 0.0) == 32.0


class TestInclusiveScan:
    def test_hand_example_p2(self, rt_pool):
        rt = rt_pool(2)
        v = dvec(rt, [1, 2, 3, 4], dtype=np.int64)
        out = DistributedVector(rt, 4, init=0, dtype=np.int64)
        partials = _scan_aligned(v, out, add, exclusive=False, init=None)
        assert out.to_numpy().tolist() == [1, 3, 6, 10]
        assert partials == [3, 7]  # per-segment sums before the driver scan

    def test_single_element(self, rt3):
        v = dvec(rt3, [42])
        out = DistributedVector(rt3, 1)
        sr.inclusive_scan(v, out)
        assert out.to_numpy().tolist() == [42.0]

    def test_in_place_equals_out_of_place(self, rt3):
        data = np.arange(11, dtype=np.int64)
        a = dvec(rt3, data, dtype=np.int64)
        out = DistributedVector(rt3, 11, init=0, dtype=np.int64)
        sr.inclusive_scan(a, out)
        b = dvec(rt3, data, dtype=np.int64)
        sr.inclusive_scan(b, b)
        assert np.array_equal(out.to_numpy(), b.to_numpy())

    def test_non_aligned_stages_through_temp(self, rt_pool):
        rt = rt_pool(2)
        v = dvec(rt, range(10), partition=[7, 3], dtype=np.int64)
        out = DistributedVector(rt, 10, init=0, dtype=np.int64, partition=[4, 6])
        sr.inclusive_scan(v, out)
        assert out.to_numpy().tolist() == oracles.inclusive_scan(list(range(10)), operator.add)

    def test_empty(self, rt3):
        sr.inclusive_scan(DistributedVector(rt3, 0), DistributedVector(rt3, 0))

    def test_length_mismatch(self, rt3):
        with pytest.raises(ValueError):
            sr.inclusive_scan(DistributedVector(rt3, 3), DistributedVector(rt3, 4))

    def test_matches_oracle_with_empty_segments(self, rt_pool):
        rt = rt_pool(7)
        data = list(range(1, 5))  # n < P forces empty segments
        v = dvec(rt, data, dtype=np.int64)
        out = DistributedVector(rt, 4, init=0, dtype=np.int64)
        sr.inclusive_scan(v, out)
        assert out.to_numpy().tolist() == [1, 3, 6, 10]

    def test_python_op(self, rt3):
        v = dvec(rt3, [2, 3, 4], dtype=np.int64)
        out = DistributedVector(rt3, 3, init=0, dtype=np.int64)
        sr.inclusive_scan(v, out, BinaryOp(operator.mul, 1))
        assert out.to_numpy().tolist() == [2, 6, 24]

    def test_scan_from_view(self, rt3):
        v = dvec(rt3, [1, 2, 3, 4], dtype=np.int64)
        t = views.transform(v, lambda x: x * 10)
        out = DistributedVector(rt3, 4, init=0, dtype=np.int64)
        sr.inclusive_scan(t, out)
        assert out.to_numpy().tolist() == [10, 30, 60, 100]

    @given(st.lists(st.integers(-50, 50), max_size=40), st.integers(1, 7))
    @settings(max_examples=30)
    def test_property_matches_oracle(self, data, p):
        with Runtime(p, worker_mode="inline") as rt:
            v = dvec(rt, data, dtype=np.int64)
            out = DistributedVector(rt, len(data), init=0, dtype=np.int64)
            sr.inclusive_scan(v, out)
            assert out.to_numpy().tolist() == oracles.inclusive_scan(data, operator.add)

    def test_white_box_partials(self, rt_pool):
        rng = np.random.default_rng(13)
        for _ in range(25):
            p = int(rng.integers(1, 8))
            n = int(rng.integers(0, 50))
            data = rng.integers(-9, 9, n).astype(np.int64)
            rt = rt_pool(p)
            v = DistributedVector.from_numpy(rt, data)
            out = DistributedVector(rt, n, init=0, dtype=np.int64)
            partials = _scan_aligned(v, out, add, exclusive=False, init=None)
            expected = []
            for seg in v.distribution.descriptors:
                chunk = data[seg.global_offset : seg.global_offset + seg.length]
                expected.append(None if not len(chunk) else int(chunk.sum()))
            assert partials == expected


class TestExclusiveScan:
    def test_basic(self, rt3):
        v = dvec(rt3, [1, 2, 3, 4], dtype=np.int64)
        out = DistributedVector(rt3, 4, init=0, dtype=np.int64)
        sr.exclusive_scan(v, out, 0)
        assert out.to_numpy().tolist() == [0, 1, 3, 6]

    def test_nonzero_init(self, rt_pool):
        for p in (1, 2, 5):
            rt = rt_pool(p)
            v = dvec(rt, [1, 1], dtype=np.int64)
            out = DistributedVector(rt, 2, init=0, dtype=np.int64)
            sr.exclusive_scan(v, out, 10)
            assert out.to_numpy().tolist() == [10, 11]

    def test_consistency_with_inclusive(self, rt_pool):
        rng = np.random.default_rng(21)
        for p in (1, 3, 7):
            rt = rt_pool(p)
            data = rng.integers(-20, 20, 31).astype(np.int64)
            v = DistributedVector.from_numpy(rt, data)
            inc = DistributedVector(rt, 31, init=0, dtype=np.int64)
            exc = DistributedVector(rt, 31, init=0, dtype=np.int64)
            sr.inclusive_scan(v, inc)
            sr.exclusive_scan(v, exc, 0)
            combined = [e + x for e, x in zip(exc.to_numpy().tolist(), data.tolist())]
            assert combined == inc.to_numpy().tolist()

    @given(st.lists(st.integers(-50, 50), max_size=40), st.integers(1, 7), st.integers(-5, 5))
    @settings(max_examples=30)
    def test_property_matches_oracle(self, data, p, init):
        with Runtime(p, worker_mode="inline") as rt:
            v = dvec(rt, data, dtype=np.int64)
            out = DistributedVector(rt, len(data), init=0, dtype=np.int64)
            sr.exclusive_scan(v, out, init)
            assert out.to_numpy().tolist() == oracles.exclusive_scan(data, operator.add, init)


class TestSort:
    def test_reverse_sorted(self, rt3):
        v = dvec(rt3, list(reversed(range(10))))
        sr.sort(v)
        assert v.to_numpy().tolist() == [float(i) for i in range(10)]

    def test_random_u64_matches_sorted_oracle(self, rt4):
        from segrange.repro import splitmix64

        keys = splitmix64(99, 0, 100_000)
        v = DistributedVector.from_numpy(rt4, keys)
        sr.sort(v)
        assert v.to_numpy().tolist() == sorted(keys.tolist())

    def test_all_equal(self, rt_pool):
        for p in (1, 4, 7):
            v = DistributedVector.from_numpy(rt_pool(p), np.full(500, 3.0))
            sr.sort(v)
            assert (v.to_numpy() == 3.0).all()

    def test_two_valued(self, rt4):
        rng = np.random.default_rng(2)
        data = rng.choice([1.0, 2.0], size=1000)
        v = DistributedVector.from_numpy(rt4, data)
        sr.sort(v)
        out = v.to_numpy()
        assert (np.diff(out) >= 0).all()
        assert (out == 1.0).sum() == (data == 1.0).sum()

    def test_presorted(self, rt4):
        v = dvec(rt4, range(100))
        sr.sort(v)
        assert v.to_numpy().tolist() == [float(i) for i in range(100)]

    def test_multiset_preserved(self, rt_pool):
        from collections import Counter

        rng = np.random.default_rng(8)
        data = rng.integers(0, 50, 777).astype(np.int64)
        for p in (1, 4, 7):
            v = DistributedVector.from_numpy(rt_pool(p), data)
            sr.sort(v)
            out = v.to_numpy()
            assert (np.diff(out) >= 0).all()
            assert Counter(out.tolist()) == Counter(data.tolist())

    def test_key_function(self, rt3):
        v = dvec(rt3, [-5, 3, -1, 4, -2])
        sr.sort(v, key=lambda x: np.abs(x))
        assert [abs(x) for x in v.to_numpy()] == [1, 2, 3, 4, 5]

    def test_short_segments(self, rt_pool):
        rt = rt_pool(7)
        v = dvec(rt, [3, 1, 2])  # n < P: some segments empty
        sr.sort(v)
        assert v.to_numpy().tolist() == [1.0, 2.0, 3.0]

    def test_sort_view_rejected(self, rt3):
        t = views.transform(dvec(rt3, [2, 1]), lambda x: x)
        with pytest.raises(TypeError):
            sr.sort(t)

    def test_zero_length_middle_segments(self, rt4):
        rng = np.random.default_rng(6)
        data = rng.integers(0, 99, 8).astype(np.int64)
        v = DistributedVector.from_numpy(rt4, data, partition=[0, 5, 0, 3])
        sr.sort(v)
        assert v.to_numpy().tolist() == sorted(data.tolist())

    @given(st.lists(st.integers(-100, 100), max_size=60), st.integers(1, 7))
    @settings(max_examples=30)
    def test_property(self, data, p):
        with Runtime(p, worker_mode="inline") as rt:
            v = dvec(rt, data, dtype=np.int64)
            sr.sort(v)
            assert v.to_numpy().tolist() == sorted(data)


class TestCopy:
    def test_local_round_trip(self, rt3):
        src = np.arange(10, dtype=np.float64)
        v = DistributedVector(rt3, 10)
        back = np.zeros(10)
        sr.copy(src, v)
        sr.copy(v, back)
        assert np.array_equal(src, back)

    def test_repartition(self, rt_pool):
        data = np.arange(23, dtype=np.float64)
        v3 = DistributedVector.from_numpy(rt_pool(3), data)
        v4 = DistributedVector(rt_pool(4), 23)
        sr.copy(v3, v4)
        assert np.array_equal(v4.to_numpy(), data)

    def test_zero_length(self, rt3):
        sr.copy(DistributedVector(rt3, 0), DistributedVector(rt3, 0))

    def test_length_mismatch(self, rt3):
        with pytest.raises(ValueError):
            sr.copy(DistributedVector(rt3, 3), DistributedVector(rt3, 4))

    def test_aligned_fast_path(self, rt3):
        a = dvec(rt3, range(12))
        b = DistributedVector(rt3, 12)
        assert sr.is_aligned(a, b)
        sr.copy(a, b)
        assert np.array_equal(b.to_numpy(), a.to_numpy())

    def test_copy_from_view(self, rt3):
        v = dvec(rt3, range(8))
        t = views.transform(v, lambda x: x * x)
        out = DistributedVector(rt3, 8)
        sr.copy(t, out)
        assert out.to_numpy().tolist() == [float(i * i) for i in range(8)]

    def test_copy_from_zip_chunking(self, rt_pool):
        rt = rt_pool(2)
        a = dvec(rt, range(8), partition=[4, 4])
        b = dvec(rt, range(8), partition=[3, 5])
        t = views.transform(views.zip(a, b), lambda p: p[0] + p[1])
        out = DistributedVector(rt, 8, partition=[2, 6])
        sr.copy(t, out)
        assert out.to_numpy().tolist() == [2.0 * i for i in range(8)]


class TestPIndependence:
    def test_integer_results_identical_across_p(self, rt_pool):
        rng = np.random.default_rng(17)
        data = rng.integers(-1000, 1000, 501).astype(np.int64)
        sums = set()
        scans = set()
        for p in (1, 2, 3, 4, 7):
            rt = rt_pool(p)
            v = DistributedVector.from_numpy(rt, data)
            sums.add(sr.reduce(v, 0))
            out = DistributedVector(rt, len(data), init=0, dtype=np.int64)
            sr.inclusive_scan(v, out)
            scans.add(tuple(out.to_numpy().tolist()))
        assert len(sums) == 1 and len(scans) == 1

    def test_scan_last_equals_reduce(self, rt4):
        rng = np.random.default_rng(23)
        data = rng.integers(0, 100, 97).astype(np.int64)
        v = DistributedVector.from_numpy(rt4, data)
        out = DistributedVector(rt4, 97, init=0, dtype=np.int64)
        sr.inclusive_scan(v, out)
        assert out[96] == sr.reduce(v, 0)
