"""Batch pipeline: routing, shared-table assembly, bounds, caching."""

import dataclasses
import os

import numpy as np
import pytest

from qlbatch import (
    BatchRequest,
    ConsistencyError,
    DomainError,
    OpCounter,
    STable,
    Window,
    compute_Z,
    direct_Z,
    divisor_terms,
    plan_budget,
    realized_divisors,
    run_batch,
    sieve_factor_window,
)

_WIN = Window(10_000, 32)
_EPS = 1e-6


@pytest.fixture(scope="module")
def cmp_run():
    counter = OpCounter()
    request = BatchRequest(_WIN, 0.3, _EPS, method="compare")
    result = run_batch(request, counter=counter)
    return result, counter


class TestBatchRequest:
    def test_rejects_unknown_method(self):
        with pytest.raises(DomainError):
            BatchRequest(_WIN, 0.0, 1e-6, method="exact")

    @pytest.mark.parametrize("eps", [0.0, 1.0, -1e-3, 2.0])
    def test_rejects_bad_epsilon(self, eps):
        with pytest.raises((DomainError, Exception)):
            BatchRequest(_WIN, 0.0, eps)

    def test_rejects_large_t(self):
        with pytest.raises(DomainError):
            BatchRequest(_WIN, 10.5, 1e-6)

    def test_frozen(self):
        req = BatchRequest(_WIN, 0.0, 1e-6)
        with pytest.raises(dataclasses.FrozenInstanceError):
            req.t = 1.0


class TestRealizedDivisors:
    def test_empty_table_keeps_trivial_divisor(self):
        assert realized_divisors({}, 400) == [1]

    def test_union_over_fundamentals(self):
        fc_table = sieve_factor_window(_WIN)
        N = 400
        got = realized_divisors(fc_table, N)
        expect = {1}
        for fc in fc_table.values():
            if fc.fundamental:
                expect.update(t.a for t in divisor_terms(fc, N))
        assert got == sorted(expect)
        assert got[0] == 1
        assert all(a <= N for a in got)


class TestSTable:
    def test_missing_divisor(self):
        s = STable(entries={}, convention="sqrt_a")
        with pytest.raises(ConsistencyError):
            s.value_vector(3, 100)

    def test_out_of_grid(self):
        values = np.ones((2, 4), dtype=np.complex128)
        s = STable(entries={1: (50, values)}, convention="sqrt_a")
        with pytest.raises(ConsistencyError):
            s.value_vector(1, 49)
        with pytest.raises(ConsistencyError):
            s.value_vector(1, 54)

    def test_column_lookup(self):
        values = np.arange(8, dtype=np.complex128).reshape(2, 4)
        s = STable(entries={1: (50, values)}, convention="sqrt_a")
        np.testing.assert_array_equal(s.value_vector(1, 52), values[:, 2])


class TestOracleRouting:
    def test_small_window_goes_to_oracle(self):
        result = run_batch(BatchRequest(Window(101, 50), 0.0, 1e-5))
        assert result.method == "oracle"
        assert result.budget is None
        assert result.n_characters > 0
        for rec in result.records:
            assert rec.method == "oracle"
            assert rec.error_bound == 1e-5 / 4.0
            solo = direct_Z(rec.q, 0.0, 1e-5)
            assert rec.Z == pytest.approx(solo.Z, abs=1e-12)

    def test_small_window_compare_fields(self):
        result = run_batch(BatchRequest(Window(101, 50), 0.0, 1e-5, method="compare"))
        assert result.compare_max_dev == 0.0
        assert result.compare_mean_dev == 0.0
        assert result.compare_devs == [0.0] * result.n_characters
        assert result.compare_refs == [r.Z for r in result.records]


class TestFastWindow:
    def test_every_deviation_within_bounds(self, cmp_run):
        result, _ = cmp_run
        assert result.n_characters > 0
        for rec, dev in zip(result.records, result.compare_devs):
            assert dev <= rec.error_bound + _EPS / 4.0, rec.q

    def test_error_bound_formula(self, cmp_run):
        result, _ = cmp_run
        b = result.budget
        for rec in result.records:
            terms = divisor_terms(
                sieve_factor_window(Window(rec.q, 1))[rec.q], b.N
            )
            a_total = sum(t.a for t in terms)
            expect = 2 * b.epsilon1 + 2 * b.epsilon2 + b.epsilon3 * b.R * a_total
            assert rec.error_bound == pytest.approx(expect, rel=1e-12)

    def test_recovery_ops_formula(self, cmp_run):
        result, counter = cmp_run
        b = result.budget
        assert set(result.recovery_ops) == {r.q for r in result.records}
        for rec in result.records:
            terms = divisor_terms(
                sieve_factor_window(Window(rec.q, 1))[rec.q], b.N
            )
            assert result.recovery_ops[rec.q] == b.R * (len(terms) + 2) + 8
        assert counter.get("recovery_ops") == sum(result.recovery_ops.values())

    def test_compare_summaries_match_devs(self, cmp_run):
        result, _ = cmp_run
        assert result.compare_max_dev == max(result.compare_devs)
        assert result.compare_mean_dev == pytest.approx(
            sum(result.compare_devs) / len(result.compare_devs)
        )
        assert len(result.compare_refs) == result.n_characters

    def test_budget_echoes_planner(self, cmp_run):
        result, _ = cmp_run
        assert result.budget == plan_budget(_WIN.Q, _WIN.Delta, _EPS, 0.3)
        assert result.records[0].method == "fast"

    def test_precompute_ops_positive(self, cmp_run):
        result, _ = cmp_run
        assert result.precompute_ops > 0
        assert result.counts.get("kernel_evals", 0) == result.budget.N * result.budget.R
        assert result.precompute_s + result.recovery_s <= result.wall_time_s * 1.001


class TestMethodAgreement:
    def test_direct_matches_fast(self):
        fast = run_batch(BatchRequest(_WIN, 0.0, _EPS, method="fast"))
        direct = run_batch(BatchRequest(_WIN, 0.0, _EPS, method="direct"))
        assert [r.q for r in fast.records] == [r.q for r in direct.records]
        for rf, rd in zip(fast.records, direct.records):
            assert rd.method == "direct"
            # both sides carry the same budget slack; they differ only in
            # transform roundoff
            assert abs(rf.Z - rd.Z) <= 1e-9, rf.q

    def test_thread_count_does_not_change_bits(self):
        one = run_batch(BatchRequest(_WIN, 0.3, _EPS), threads=1)
        four = run_batch(BatchRequest(_WIN, 0.3, _EPS), threads=4)
        assert [(r.q, r.Z) for r in one.records] == [(r.q, r.Z) for r in four.records]

    def test_repeat_runs_identical(self):
        a = run_batch(BatchRequest(_WIN, 0.3, _EPS))
        b = run_batch(BatchRequest(_WIN, 0.3, _EPS))
        assert [(r.q, r.Z) for r in a.records] == [(r.q, r.Z) for r in b.records]


class TestCache:
    def test_miss_then_hit(self, tmp_path):
        cache = str(tmp_path)
        c1 = OpCounter()
        r1 = run_batch(BatchRequest(_WIN, 0.3, _EPS), cache_dir=cache, counter=c1)
        assert c1.get("cache_misses") == 1
        assert c1.get("cache_hits") == 0
        files = os.listdir(cache)
        assert len(files) == 1 and files[0].startswith("ctab-")

        c2 = OpCounter()
        r2 = run_batch(BatchRequest(_WIN, 0.3, _EPS), cache_dir=cache, counter=c2)
        assert c2.get("cache_hits") == 1
        assert c2.get("cache_misses") == 0
        assert c2.get("kernel_evals") == 0
        assert [(a.q, a.Z) for a in r1.records] == [(b.q, b.Z) for b in r2.records]

    def test_corrupt_cache_rebuilds(self, tmp_path):
        cache = str(tmp_path)
        r1 = run_batch(BatchRequest(_WIN, 0.3, _EPS), cache_dir=cache)
        name = os.listdir(cache)[0]
        with open(os.path.join(cache, name), "wb") as fh:
            fh.write(b"not a table")
        c = OpCounter()
        r2 = run_batch(BatchRequest(_WIN, 0.3, _EPS), cache_dir=cache, counter=c)
        assert c.get("cache_misses") == 1
        assert [(a.q, a.Z) for a in r1.records] == [(b.q, b.Z) for b in r2.records]


class TestConvention:
    def test_unweighted_convention_breaks_agreement(self):
        result = run_batch(
            BatchRequest(_WIN, 0.0, _EPS, method="compare"), convention="plain_a"
        )
        assert result.compare_max_dev > 1e-3

    def test_unknown_convention_rejected(self):
        with pytest.raises(DomainError):
            run_batch(BatchRequest(_WIN, 0.0, _EPS), convention="cube_a")


class TestMisc:
    def test_large_t_warns(self):
        with pytest.warns(UserWarning, match="archimedean"):
            run_batch(BatchRequest(Window(101, 50), 1.5, 1e-4))

    def test_compute_z_accepts_plain_q(self):
        fc = sieve_factor_window(Window(10_001, 1))[10_001]
        from qlbatch import assemble_F  # noqa: F401  (exported surface)

        F = 0.25 - 0.125j
        assert compute_Z(10_001, F, 0.3) == compute_Z(fc, F, 0.3)
