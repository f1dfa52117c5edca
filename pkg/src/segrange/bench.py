"""Benchmark kernels with sequential-oracle verification.

Each benchmark builds seeded inputs, times only the kernel (data
generation and verification excluded, internal copies included), and can
verify its output against an oracle written with plain arrays and loops,
independent of the library's algorithms.  Outputs are checksummed for
regression tracking, and reruns with the same spec and seed produce the
same checksum.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf as _erf

from . import algorithms, repro, views
from .algorithms import add
from .containers import DistributedDenseMatrix, DistributedVector, TilingDescriptor
from .containers import _near_square_grid
from .core import local_view
from .runtime import Runtime
from .views import get_zip_mode, set_zip_mode

BENCH_NAMES = ("dot", "reduce", "inclusive_scan", "black_scholes", "stream", "gemm", "sort")

DEFAULT_SIZES = {name: 10**7 for name in BENCH_NAMES}
DEFAULT_SIZES["gemm"] = 512

REL_TOL = 1e-12
GEMM_REL_TOL = 1e-10
GEMM_VERIFY_MAX = 512
STREAM_ALPHA = 3.0

# Strike range sits below the spot range so prices stay O(10) and the
# relative verification tolerance is meaningful (no cancellation to zero).
BS_RANGES = {
    "spot": (90.0, 110.0),
    "strike": (70.0, 90.0),
    "rate": (0.0, 0.05),
    "volatility": (0.1, 0.4),
    "expiry": (0.25, 2.0),
}


@dataclass(frozen=True)
class BenchSpec:
    name: str
    size: int
    locales: int
    reps: int = 3
    seed: int = 1
    check: bool = False
    mode: str = "relaxed"

    def __post_init__(self):
        if self.name not in BENCH_NAMES:
            raise ValueError(f"unknown bench {self.name!r}; one of {BENCH_NAMES}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.size < 0:
            raise ValueError("size must be non-negative")


@dataclass
class BenchResult:
    spec: BenchSpec
    seconds: list[float] = field(default_factory=list)
    checksum: str = ""
    verified: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def median_seconds(self) -> float:
        s = sorted(self.seconds)
        return s[len(s) // 2] if s else float("nan")


# ---------------------------------------------------------------------------
# kernels


def dot_product(x, y):
    """The zip | transform | reduce pipeline, not a bespoke kernel."""
    z = views.transform(views.zip(x, y), lambda t: t[0] * t[1])
    return algorithms.reduce(z, 0.0, add)


def stream_triad(a, b, c, alpha=STREAM_ALPHA):
    """a[i] = b[i] + alpha * c[i] over a zipped view."""
    algorithms.for_each(
        views.zip(a, b, c),
        lambda t: (t[1] + alpha * t[2], None, None),
        vectorized=True,
    )


def norm_cdf(x):
    return 0.5 * (1.0 + _erf(x / np.sqrt(2.0)))


def black_scholes_call(spot, strike, rate, volatility, expiry):
    """European call price, vectorized; degenerate volatility gives the
    discounted intrinsic value."""
    spot = np.asarray(spot, dtype=np.float64)
    vol = volatility * np.sqrt(expiry)
    discount = np.exp(-rate * expiry)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(spot / strike) + (rate + 0.5 * volatility**2) * expiry) / vol
        d2 = d1 - vol
        price = spot * norm_cdf(d1) - strike * discount * norm_cdf(d2)
    return np.where(vol > 0, price, np.maximum(spot - strike * discount, 0.0))


def black_scholes_prices(out, spot, strike, rate, volatility, expiry):
    """Fill out with call prices, elementwise over the zipped inputs."""
    algorithms.for_each(
        views.zip(out, spot, strike, rate, volatility, expiry),
        lambda t: (black_scholes_call(t[1], t[2], t[3], t[4], t[5]),
                   None, None, None, None, None),
        vectorized=True,
    )


def gemm_tiling(d: int, locales: int) -> TilingDescriptor:
    """Square tiles sized to give each locale a few tiles to cycle over."""
    pr, pc = _near_square_grid(locales)
    t = max(1, math.ceil(d / (2 * max(pr, pc)))) if d else 1
    return TilingDescriptor.block_cyclic((t, t), (pr, pc))


def distributed_gemm(a, b, c):
    """C = A * B, tile by tile.

    The task for each C tile runs on the tile's locale, pulls the needed A
    and B tiles with get_tile_async, and multiply-accumulates locally.
    All three matrices must share a square tile shape.
    """
    (m, ka), (kb, n) = a.shape, b.shape
    if ka != kb or c.shape != (m, n):
        raise ValueError(f"gemm shape mismatch: {a.shape} x {b.shape} -> {c.shape}")
    if a.tiling.tile_shape != b.tiling.tile_shape or a.tiling.tile_shape != c.tiling.tile_shape:
        raise ValueError("gemm needs one shared tile shape across A, B, C")
    if a.tiling.tile_shape[0] != a.tiling.tile_shape[1]:
        raise ValueError("gemm needs square tiles")
    inner = a.grid[1]
    rt = c.runtime

    def tile_task(i, j):
        def task():
            target = c.tile(i, j)
            acc = np.zeros((target.rows, target.cols), dtype=c.dtype)
            for l in range(inner):
                ta = a.get_tile_async(i, l)
                tb = b.get_tile_async(l, j)
                acc += ta.wait() @ tb.wait()
            local_view(target)[...] = acc

        return task

    tickets = [
        rt.submit(c.tile(i, j).rank, tile_task(i, j))
        for i in range(c.grid[0])
        for j in range(c.grid[1])
    ]
    rt.wait_all(tickets)


# ---------------------------------------------------------------------------
# sequential oracles (plain arrays and loops, nothing from the library)


def oracle_dot(x, y) -> float:
    total = 0.0
    for a, b in zip(x.tolist(), y.tolist()):
        total += a * b
    return total


def oracle_triad(a, b, c, alpha=STREAM_ALPHA) -> bool:
    bl, cl, al = b.tolist(), c.tolist(), a.tolist()
    return all(al[i] == bl[i] + alpha * cl[i] for i in range(len(al)))


def oracle_black_scholes(spot, strike, rate, volatility, expiry) -> float:
    vol = volatility * math.sqrt(expiry)
    discount = math.exp(-rate * expiry)
    if vol <= 0.0:
        return max(spot - strike * discount, 0.0)
    d1 = (math.log(spot / strike) + (rate + 0.5 * volatility * volatility) * expiry) / vol
    d2 = d1 - vol
    phi = lambda v: 0.5 * (1.0 + math.erf(v / math.sqrt(2.0)))
    return spot * phi(d1) - strike * discount * phi(d2)


def oracle_gemm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    _, n = b.shape
    out = np.zeros((m, n), dtype=np.float64)
    for i in range(m):
        row = np.zeros(n, dtype=np.float64)
        for l in range(k):
            row += a[i, l] * b[l]
        out[i] = row
    return out


def rel_close(actual, expected, tol) -> bool:
    return bool(np.isclose(np.asarray(actual), np.asarray(expected), rtol=tol, atol=0.0).all())


# ---------------------------------------------------------------------------
# benchmark drivers


def _timed(reps, kernel, reset=None) -> tuple[list[float], object]:
    seconds = []
    result = None
    for _ in range(reps):
        if reset is not None:
            reset()
        t0 = time.perf_counter()
        result = kernel()
        seconds.append(time.perf_counter() - t0)
    return seconds, result


def bench_dot(spec: BenchSpec, rt: Runtime) -> BenchResult:
    n = spec.size
    xs = repro.unit_doubles(spec.seed, 0, n)
    ys = repro.unit_doubles(spec.seed, n, n)
    x = DistributedVector.from_numpy(rt, xs)
    y = DistributedVector.from_numpy(rt, ys)
    seconds, value = _timed(spec.reps, lambda: dot_product(x, y))
    res = BenchResult(spec, seconds, repro.checksum(np.float64(value)))
    if spec.check:
        res.verified = rel_close(value, oracle_dot(xs, ys), REL_TOL) if n else value == 0.0
    return res


def bench_reduce(spec: BenchSpec, rt: Runtime) -> BenchResult:
    n = spec.size
    v = DistributedVector.from_numpy(rt, np.arange(n, dtype=np.int64))
    seconds, value = _timed(spec.reps, lambda: algorithms.reduce(v, 0, add))
    res = BenchResult(spec, seconds, repro.checksum(np.int64(value)))
    if spec.check:
        res.verified = value == n * (n - 1) // 2
    return res


def bench_inclusive_scan(spec: BenchSpec, rt: Runtime) -> BenchResult:
    n = spec.size
    v = DistributedVector.from_numpy(rt, np.arange(n, dtype=np.int64))
    out = DistributedVector(rt, n, init=0, dtype=np.int64)
    seconds, _ = _timed(spec.reps, lambda: algorithms.inclusive_scan(v, out, add))
    data = out.to_numpy()
    res = BenchResult(spec, seconds, repro.checksum(data))
    if spec.check:
        oracle = np.fromiter(itertools.accumulate(range(n)), dtype=np.int64, count=n)
        res.verified = bool(np.array_equal(data, oracle))
    return res


def bench_black_scholes(spec: BenchSpec, rt: Runtime) -> BenchResult:
    n = spec.size
    cols = {}
    for idx, (name, (lo, hi)) in enumerate(BS_RANGES.items()):
        cols[name] = repro.uniform_doubles(spec.seed, idx * n, n, lo, hi)
    vecs = {name: DistributedVector.from_numpy(rt, arr) for name, arr in cols.items()}
    out = DistributedVector(rt, n, dtype=np.float64)
    seconds, _ = _timed(
        spec.reps,
        lambda: black_scholes_prices(
            out, vecs["spot"], vecs["strike"], vecs["rate"],
            vecs["volatility"], vecs["expiry"],
        ),
    )
    data = out.to_numpy()
    res = BenchResult(spec, seconds, repro.checksum(data))
    if spec.check:
        expected = [
            oracle_black_scholes(
                cols["spot"][i], cols["strike"][i], cols["rate"][i],
                cols["volatility"][i], cols["expiry"][i],
            )
            for i in range(n)
        ]
        res.verified = rel_close(data, np.asarray(expected), REL_TOL)
    return res


def bench_stream(spec: BenchSpec, rt: Runtime) -> BenchResult:
    n = spec.size
    bs = repro.unit_doubles(spec.seed, 0, n)
    cs = repro.unit_doubles(spec.seed, n, n)
    a = DistributedVector(rt, n, dtype=np.float64)
    b = DistributedVector.from_numpy(rt, bs)
    c = DistributedVector.from_numpy(rt, cs)
    seconds, _ = _timed(spec.reps, lambda: stream_triad(a, b, c))
    data = a.to_numpy()
    res = BenchResult(spec, seconds, repro.checksum(data))
    med = sorted(seconds)[len(seconds) // 2]
    res.extra["bytes_per_second"] = 24.0 * n / med if med > 0 else float("inf")
    if spec.check:
        res.verified = oracle_triad(data, bs, cs)
    return res


def bench_gemm(spec: BenchSpec, rt: Runtime) -> BenchResult:
    d = spec.size
    tiling = gemm_tiling(d, rt.locale_count)
    am = repro.unit_doubles(spec.seed, 0, d * d).reshape(d, d)
    bm = repro.unit_doubles(spec.seed, d * d, d * d).reshape(d, d)
    a = DistributedDenseMatrix.from_numpy(rt, am, tiling)
    b = DistributedDenseMatrix.from_numpy(rt, bm, tiling)
    c = DistributedDenseMatrix(rt, (d, d), tiling, dtype=np.float64)
    seconds, _ = _timed(spec.reps, lambda: distributed_gemm(a, b, c))
    data = c.to_numpy()
    res = BenchResult(spec, seconds, repro.checksum(data))
    if spec.check:
        if d <= GEMM_VERIFY_MAX:
            res.verified = rel_close(data, oracle_gemm(am, bm), GEMM_REL_TOL)
        else:
            res.extra["note"] = f"verification skipped above d={GEMM_VERIFY_MAX}"
    return res


def bench_sort(spec: BenchSpec, rt: Runtime) -> BenchResult:
    n = spec.size
    keys = repro.splitmix64(spec.seed, 0, n)
    v = DistributedVector(rt, n, dtype=np.uint64)

    def reset():
        algorithms.copy(keys, v)

    seconds, _ = _timed(spec.reps, lambda: algorithms.sort(v), reset=reset)
    data = v.to_numpy()
    res = BenchResult(spec, seconds, repro.checksum(data))
    if spec.check:
        res.verified = data.tolist() == sorted(keys.tolist())
    return res


BENCHES = {
    "dot": bench_dot,
    "reduce": bench_reduce,
    "inclusive_scan": bench_inclusive_scan,
    "black_scholes": bench_black_scholes,
    "stream": bench_stream,
    "gemm": bench_gemm,
    "sort": bench_sort,
}


def run_spec(spec: BenchSpec) -> BenchResult:
    previous_mode = get_zip_mode()
    set_zip_mode(spec.mode)
    try:
        with Runtime(spec.locales) as rt:
            return BENCHES[spec.name](spec, rt)
    finally:
        set_zip_mode(previous_mode)


CSV_HEADER = "bench,size,locales,rep,seconds,checksum,verified"


def csv_rows(results) -> list[str]:
    rows = [CSV_HEADER]
    for r in results:
        for i, sec in enumerate(r.seconds):
            verified = "" if r.verified is None else ("true" if r.verified else "false")
            rows.append(
                f"{r.spec.name},{r.spec.size},{r.spec.locales},{i},{sec:.9f},"
                f"{r.checksum},{verified}"
            )
    return rows


def emit_csv(results, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(csv_rows(results)) + "\n")
