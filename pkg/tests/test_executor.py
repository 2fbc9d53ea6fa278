import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asyncheat import executor
from asyncheat.core import (ContractError, Dirichlet, DomainError, PartitionSpec, Periodic,
                            SolverParams, cosine_init, linear_steady_state)
from asyncheat.executor import (BARRIER_FREE, BARRIERED, ExecConfig, ExecError, exec_run,
                                measure)
from asyncheat.sync import sync_run

BASE = SolverParams(0.5, 0.01, 0.1)


class TestExecConfig:
    def test_validation(self):
        with pytest.raises(DomainError):
            ExecConfig(0, 10)
        with pytest.raises(DomainError):
            ExecConfig(1, 0)
        with pytest.raises(DomainError):
            ExecConfig(1, 10, "sometimes")

    def test_yield_interval(self):
        assert ExecConfig(1, 10, yield_every=7).yield_interval() == 7
        many = ExecConfig(executor.available_cores() + 1, 10)
        assert many.oversubscribed and many.yield_interval() == executor.YIELD_OVERSUBSCRIBED
        assert ExecConfig(1, 10).yield_interval() == 0


class TestExecRun:
    @given(st.data())
    @settings(max_examples=15)
    def test_barriered_matches_sync(self, data):
        P = data.draw(st.sampled_from([1, 2, 4]))
        n = data.draw(st.integers(3 if P == 1 else 2, 12))
        N = P * n
        bc = data.draw(st.sampled_from([Periodic(), Dirichlet(1.0, 0.0)]))
        params = SolverParams.from_r(data.draw(st.floats(1e-3, 0.5)))
        k_end = data.draw(st.integers(1, 300))
        u0 = cosine_init(N)
        res = exec_run(u0, params, bc, PartitionSpec(N, n), ExecConfig(P, k_end, BARRIERED))
        assert res.field == sync_run(u0, params, bc, k_end, record=k_end).final
        assert res.counters.tolist() == [k_end] * P

    @pytest.mark.parametrize("bc", [Periodic(), Dirichlet(1.0, 0.0)])
    def test_barrier_free_single_pe_matches_sync(self, bc):
        u0 = cosine_init(50)
        res = exec_run(u0, BASE, bc, PartitionSpec.single(50), ExecConfig(1, 2000))
        assert res.field == sync_run(u0, BASE, bc, 2000, record=2000).final

    def test_barriered_one_point_per_pe(self):
        u0 = cosine_init(8)
        res = exec_run(u0, BASE, Periodic(), PartitionSpec(8, 1),
                       ExecConfig(8, 200, BARRIERED))
        assert res.field == sync_run(u0, BASE, Periodic(), 200, record=200).final

    def test_barrier_free_converges(self):
        u0 = cosine_init(100)
        res = exec_run(u0, BASE, Dirichlet(1.0, 0.0), PartitionSpec(100, 25),
                       ExecConfig(4, 100_000))
        assert res.field.max_abs_diff(linear_steady_state(100, 1.0, 0.0)) <= 1e-3

    def test_trace(self):
        u0 = cosine_init(40)
        res = exec_run(u0, BASE, Dirichlet(1.0, 0.0), PartitionSpec(40, 10),
                       ExecConfig(4, 5000), trace=True)
        tr = res.trace
        # end PEs read one neighbour, inner PEs two
        assert len(tr.step) == 5000 * (1 + 2 + 2 + 1)
        assert tr.torn_reads() == 0
        assert np.all(tr.lag >= 0)
        offsets, counts = np.unique(tr.offset, return_counts=True)
        print("offset distribution:", dict(zip(offsets.tolist(), counts.tolist())))
        print("lag max:", int(tr.lag.max()))

    def test_trace_needs_barrier_free(self):
        with pytest.raises(DomainError):
            exec_run(cosine_init(4), BASE, Periodic(), PartitionSpec(4, 2),
                     ExecConfig(2, 5, BARRIERED), trace=True)

    def test_partition_mismatch(self):
        with pytest.raises(ContractError):
            exec_run(cosine_init(8), BASE, Periodic(), PartitionSpec(8, 2), ExecConfig(2, 5))
        with pytest.raises(ContractError):
            exec_run(cosine_init(8), BASE, Periodic(), PartitionSpec(16, 4), ExecConfig(4, 5))

    def test_worker_failure(self, monkeypatch):
        real = executor._worker

        def flaky(p, *args):
            if p == 1:
                raise RuntimeError("boom")
            return real(p, *args)

        executor._warm_up()
        monkeypatch.setattr(executor, "_worker", flaky)
        with pytest.raises(ExecError, match="boom"):
            exec_run(cosine_init(8), BASE, Periodic(), PartitionSpec(8, 4),
                     ExecConfig(2, 50_000, BARRIERED))


class TestMeasure:
    def test_table(self):
        table = measure([8, 16], reps=3, k_end=200, workers=2)
        assert [(r.N, r.mode) for r in table.rows] == [
            (8, BARRIERED), (8, BARRIER_FREE), (16, BARRIERED), (16, BARRIER_FREE)]
        assert all(r.min_ns <= r.median_ns for r in table.rows)
        assert set(table.speedups()) == {8, 16}
        assert "speedup N=8" in table.format()

    def test_single_mode(self):
        table = measure([8], modes=[BARRIER_FREE], reps=3, k_end=100, workers=1)
        assert len(table.rows) == 1 and table.speedups() == {}

    def test_errors(self):
        with pytest.raises(DomainError):
            measure([8], reps=2, workers=1)
        with pytest.raises(DomainError):
            measure([10], reps=3, workers=4)
