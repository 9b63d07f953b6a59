"""Benchmark suites: acceptance-style experiments plus a numba-vs-numpy
kernel comparison.

Every suite returns rows (instance, algo, value, opt, ratio, time_ms),
sorted for reproducible output.  Timing is opt-in: with measure_time=False
(the default used by the CLI unless --timings is passed) the time_ms column
is 0 so that repeated runs produce byte-identical CSVs.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import accel, bipartite, core, gen, gf2, jl, mw, oracle
from . import revenue as revenue_mod

SUITES = ("small", "mw", "jl", "revenue", "maxcover", "accel")


@dataclass(frozen=True)
class BenchRow:
    instance: str
    algo: str
    value: float
    opt: float
    ratio: float
    time_ms: float

    def to_csv(self) -> str:
        return (f"{self.instance},{self.algo},{self.value:.12g},{self.opt:.12g},"
                f"{self.ratio:.12g},{self.time_ms:.12g}")


CSV_HEADER = "instance,algo,value,opt,ratio,time_ms"


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled

    def time(self, fn):
        t0 = time.perf_counter()
        out = fn()
        dt = (time.perf_counter() - t0) * 1000.0
        return out, dt if self.enabled else 0.0


def _suite_instances(seed: int, count: int):
    for i in range(count):
        rng = np.random.default_rng(seed * 1000 + i)
        m = int(rng.integers(2, 6))
        n = int(rng.integers(1, 4))
        S = int(rng.integers(2, 5))
        k = int(rng.integers(1, min(S, 3) + 1))
        yield f"rand-{i:03d}", gen.random_instance(m, n, S, k, seed=seed * 7777 + i)


def suite_small(seed: int, clock: _Clock, count: int = 25) -> list[BenchRow]:
    rows = []
    for name, inst in _suite_instances(seed, count):
        opt = oracle.opt_welfare(inst).value
        sch, dt = clock.time(lambda: bipartite.solve_welfare(inst))
        w = core.welfare(inst, sch)
        rows.append(BenchRow(name, "greedy", w, opt, w / opt if opt else 1.0, dt))
        sch, dt = clock.time(
            lambda: bipartite.solve_welfare(inst, solver="cg", samples=32, steps=16, seed=seed)
        )
        w = core.welfare(inst, sch)
        rows.append(BenchRow(name, "cg", w, opt, w / opt if opt else 1.0, dt))
    return rows


def suite_mw(seed: int, clock: _Clock, count: int = 10) -> list[BenchRow]:
    rows = []
    eps = 0.2
    for i in range(count):
        d = 64 if i % 2 == 0 else 1024
        n = 2 + (i % 7)
        sample = gen.random_geometric(d, n, seed=seed * 31 + i, nonneg=True)
        rep, dt = clock.time(
            lambda: mw.mw_guarantee_check_known(sample.omega[None, :], sample.valuations, eps)
        )
        r = rep.rows[0]
        ratio = r.welfare / r.opt if r.opt else 1.0
        rows.append(BenchRow(f"mw-d{d}-{i:02d}", "mw-known", r.welfare, r.opt, ratio, dt))
    return rows


def suite_jl(seed: int, clock: _Clock, count: int = 10) -> list[BenchRow]:
    rows = []
    d, eps, n = 256, 0.3, 2
    for i in range(count):
        sample = gen.random_geometric(d, n, seed=seed * 57 + i, mode="subspace", k=2)
        val = jl.SubspaceValuation(sample.bases[0])
        k = val.dim
        t_scale = 1024 / (jl.T_CONSTANT * k * k * math.log(3 * n / eps) / eps**4)
        def run():
            sig = jl.jl_signal(sample.omega, k, eps, n, seed=seed * 911 + i, t_scale=t_scale)
            return jl.estimate_value_from_signal(sig, val)
        est, dt = clock.time(run)
        true = jl.subspace_value(sample.omega, val)
        rows.append(BenchRow(f"jl-{i:02d}", "jl", est, true, 1.0 - abs(est - true), dt))
    return rows


def suite_revenue(seed: int, clock: _Clock, count: int = 15) -> list[BenchRow]:
    rows = []
    for name, inst in _suite_instances(seed, count):
        opt = oracle.opt_revenue_det(inst).value
        plan, dt = clock.time(lambda: revenue_mod.solve_revenue(inst))
        ratio = plan.revenue / opt if opt > 0 else 1.0
        rows.append(BenchRow(name, "solve-revenue", plan.revenue, opt, ratio, dt))
    return rows


def suite_maxcover(seed: int, clock: _Clock, count: int = 10) -> list[BenchRow]:
    rows = []
    for i in range(count):
        rng = np.random.default_rng(seed * 131 + i)
        m = int(rng.integers(3, 7))
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, min(n, 3) + 1))
        spec = gen.random_cover_spec(m, n, k, seed=seed * 193 + i)
        inst = gen.from_max_cover(spec)
        opt = oracle.opt_welfare(inst).value
        sch, dt = clock.time(lambda: bipartite.solve_welfare(inst))
        w = core.welfare(inst, sch)
        rows.append(BenchRow(f"cover-{i:02d}", "greedy", w, opt, w / opt if opt else 1.0, dt))
    return rows


def suite_accel(seed: int, clock: _Clock) -> list[BenchRow]:
    """Same kernels on both backends; value column is a result checksum."""
    backends = ["numpy"] + (["numba"] if accel.HAVE_NUMBA else [])
    rng = np.random.default_rng(seed)

    d, T = 512, 512
    omega_unit = rng.standard_normal(d)
    omega_unit /= np.linalg.norm(omega_unit)
    omega_simplex = gen.simplex_point(rng, 128)
    chunk = rng.uniform(-1, 1, size=(20000, 128))
    inst = gen.random_instance(7, 3, 4, 3, seed=seed)

    def jl_kernel(be):
        h = jl.make_rwise_hash(seed, r=8, T=T, d=d)
        return float(jl.project_vectors(h, omega_unit, backend=be).sum())

    def mw_kernel(be):
        return float(mw.mw_signal_bayes(omega_simplex, chunk, 0.2, 0.1, 2, backend=be).T)

    def oracle_kernel(be):
        return oracle.opt_welfare(inst, backend=be).value

    def tables_kernel(be):
        gf2._TABLE_CACHE.pop(18, None)
        exp, _ = gf2.field_tables(18, backend=be)
        return float(exp[:1024].sum())

    kernels = [
        ("kern-jl-project", jl_kernel),
        ("kern-mw-scan", mw_kernel),
        ("kern-oracle-search", oracle_kernel),
        ("kern-gf-tables", tables_kernel),
    ]
    rows = []
    for name, fn in kernels:
        ref = None
        for be in backends:
            value, dt = clock.time(lambda: fn(be))
            if ref is None:
                ref = value
            rows.append(BenchRow(name, be, value, ref, value / ref if ref else 1.0, dt))
    return rows


def run_suite(suite: str, seed: int, measure_time: bool = False) -> list[BenchRow]:
    clock = _Clock(measure_time)
    if suite == "small":
        rows = suite_small(seed, clock)
    elif suite == "mw":
        rows = suite_mw(seed, clock)
    elif suite == "jl":
        rows = suite_jl(seed, clock)
    elif suite == "revenue":
        rows = suite_revenue(seed, clock)
    elif suite == "maxcover":
        rows = suite_maxcover(seed, clock)
    elif suite == "accel":
        rows = suite_accel(seed, clock)
    else:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    return sorted(rows, key=lambda r: (r.instance, r.algo))
