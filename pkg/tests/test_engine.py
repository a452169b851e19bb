"""Walk semantics, estimator correctness, parallel determinism, partials."""

from __future__ import annotations

import math

import numpy as np
import pytest

from _util import random_signed_generator, two_state_matrix
from fracwalk.engine import (
    EstimateReport,
    PartialSums,
    SolveRequest,
    merge_partials,
    path_statistics,
    prepare_job,
    read_partial,
    run_parallel,
    run_worker,
    solve_entries,
    solve_full,
    walk_once,
    write_partial,
)
from fracwalk.errors import DomainError, ValidationError
from fracwalk.mlfun import dense_ml_oracle, fractional_poisson_mean, ml_survival
from fracwalk.sparse import SparseMatrix, decompose
from fracwalk.streams import RandomStream

# -- request validation -------------------------------------------------


class TestSolveRequest:
    def test_valid(self):
        r = SolveRequest(alpha=0.5, t=1.0, n_paths=10, entries=[0, 2])
        assert r.entries == (0, 2)

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5, 2.0])
    def test_alpha_box(self, alpha):
        with pytest.raises(DomainError):
            SolveRequest(alpha=alpha, t=1.0, n_paths=10)

    def test_alpha_one_allowed(self):
        SolveRequest(alpha=1.0, t=1.0, n_paths=10)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"t": -0.1},
            {"n_paths": 0},
            {"workers": 0},
            {"entries": ()},
            {"confidence": 0.0},
            {"confidence": 1.0},
        ],
    )
    def test_invalid_fields(self, kwargs):
        base = dict(alpha=0.5, t=1.0, n_paths=10)
        base.update(kwargs)
        with pytest.raises((DomainError, ValidationError)):
            SolveRequest(**base)


# -- single walks -------------------------------------------------------


class TestWalkOnce:
    def test_t_zero_consumes_nothing(self):
        k = decompose(two_state_matrix())
        st = RandomStream.from_root(1, 0)
        before = st.gen.bit_generator.state
        assert walk_once(k, 0.5, 0.0, 1, st) == (1, 1.0, 0)
        assert st.gen.bit_generator.state == before

    def test_zero_rate_state_holds_forever(self):
        A = SparseMatrix.from_coo(2, 2, [], [], [])
        k = decompose(A, allow_absorbing=True)
        st = RandomStream.from_root(2, 0)
        assert walk_once(k, 0.5, 100.0, 0, st) == (0, 1.0, 0)

    def test_dead_end_weight_is_survival_indicator(self):
        # negative diagonal, no destinations: the sojourn either outlives t
        # (weight 1) or fires into nothing (weight 0)
        A = SparseMatrix.from_dense(np.diag([-1.0, -2.0]))
        k = decompose(A, allow_absorbing=True)
        st = RandomStream.from_root(3, 0)
        t = 1.0
        results = [walk_once(k, 0.5, t, 0, st) for _ in range(100_000)]
        assert all(end == 0 for end, _, _ in results)
        assert all(w in (0.0, 1.0) for _, w, _ in results)
        frac = sum(w for _, w, _ in results) / len(results)
        p = ml_survival(0.5, -1.0, t)
        assert abs(frac - p) < 3.0 * math.sqrt(p * (1 - p) / len(results))

    def test_two_state_return_probability(self):
        k = decompose(two_state_matrix())
        st = RandomStream.from_root(4, 0)
        results = [walk_once(k, 1.0, 0.5, 0, st) for _ in range(100_000)]
        assert all(w == 1.0 for _, w, _ in results)  # w_i = 1, signs all +1
        frac = sum(end == 0 for end, _, _ in results) / len(results)
        p = (1.0 + math.exp(-1.0)) / 2.0
        assert abs(frac - p) < 3.0 * math.sqrt(p * (1 - p) / len(results))

    def test_start_out_of_range(self):
        k = decompose(two_state_matrix())
        with pytest.raises(ValidationError):
            walk_once(k, 0.5, 1.0, 2, RandomStream.from_root(5, 0))


# -- entry estimator ----------------------------------------------------


class TestSolveEntries:
    def test_t_zero_exact(self):
        A = two_state_matrix()
        req = SolveRequest(alpha=0.5, t=0.0, n_paths=50, entries=(0, 1))
        rep = solve_entries(A, [3.0, -4.0], req)
        np.testing.assert_array_equal(rep.values, [3.0, -4.0])
        np.testing.assert_array_equal(rep.sample_variance, [0.0, 0.0])
        np.testing.assert_array_equal(rep.ci_halfwidth, [0.0, 0.0])
        assert rep.total_events == 0

    def test_diagonal_matches_survival(self):
        A = SparseMatrix.from_dense(np.diag([-1.0, -2.0]))
        req = SolveRequest(
            alpha=0.5, t=1.0, n_paths=100_000, root_seed=6, entries=(0, 1)
        )
        rep = solve_entries(A, [1.0, 1.0], req, allow_absorbing=True)
        expect = [ml_survival(0.5, -1.0, 1.0), ml_survival(0.5, -2.0, 1.0)]
        se = np.sqrt(np.asarray(rep.sample_variance) / req.n_paths)
        assert np.all(np.abs(np.asarray(rep.values) - expect) <= 4.0 * se)

    def test_two_state_closed_form(self):
        req = SolveRequest(alpha=1.0, t=0.5, n_paths=100_000, root_seed=7, entries=(0,))
        rep = solve_entries(two_state_matrix(), [1.0, 0.0], req)
        se = math.sqrt(rep.sample_variance[0] / req.n_paths)
        assert abs(rep.values[0] - (1.0 + math.exp(-1.0)) / 2.0) <= 4.0 * se

    def test_requires_entries(self):
        with pytest.raises(ValidationError):
            solve_entries(two_state_matrix(), [1.0, 0.0],
                          SolveRequest(alpha=0.5, t=1.0, n_paths=10))

    def test_entry_out_of_range(self):
        req = SolveRequest(alpha=0.5, t=1.0, n_paths=10, entries=(2,))
        with pytest.raises(ValidationError):
            solve_entries(two_state_matrix(), [1.0, 0.0], req)

    def test_dimension_mismatch(self):
        req = SolveRequest(alpha=0.5, t=1.0, n_paths=10, entries=(0,))
        with pytest.raises(ValidationError):
            solve_entries(two_state_matrix(), [1.0, 0.0, 0.0], req)


# -- full estimator -----------------------------------------------------


class TestSolveFull:
    def test_t_zero_exact(self):
        u = [0.5, -2.0]
        rep = solve_full(two_state_matrix(), u,
                         SolveRequest(alpha=0.7, t=0.0, n_paths=40))
        np.testing.assert_array_equal(rep.values, u)
        np.testing.assert_array_equal(rep.sample_variance, [0.0, 0.0])

    def test_two_state_closed_form(self):
        req = SolveRequest(alpha=1.0, t=0.5, n_paths=1_000_000, root_seed=8)
        rep = solve_full(two_state_matrix(), [1.0, 0.0], req)
        p = (1.0 + math.exp(-1.0)) / 2.0
        se = np.sqrt(np.asarray(rep.sample_variance) / req.n_paths)
        assert np.all(np.abs(np.asarray(rep.values) - [p, 1.0 - p]) <= 4.0 * se)

    def test_signed_6x6_against_dense_oracle(self):
        dense = random_signed_generator(np.random.default_rng(99), 6)
        A = SparseMatrix.from_dense(dense)
        u = np.random.default_rng(100).uniform(-1, 1, size=6)
        oracle = dense_ml_oracle(0.7, dense, 1.0, u, route="series")
        req = SolveRequest(alpha=0.7, t=1.0, n_paths=1_000_000, root_seed=9)
        rep = solve_full(A, u, req)
        se = np.sqrt(np.asarray(rep.sample_variance) / req.n_paths)
        assert np.all(np.abs(np.asarray(rep.values) - oracle) <= 4.0 * se)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValidationError, match="zero"):
            solve_full(two_state_matrix(), [0.0, 0.0],
                       SolveRequest(alpha=0.5, t=1.0, n_paths=10))

    def test_rejects_entries_request(self):
        req = SolveRequest(alpha=0.5, t=1.0, n_paths=10, entries=(0,))
        with pytest.raises(ValidationError):
            solve_full(two_state_matrix(), [1.0, 0.0], req)


# -- parallel execution -------------------------------------------------


def _sixsix():
    dense = random_signed_generator(np.random.default_rng(99), 6)
    u = np.random.default_rng(100).uniform(-1, 1, size=6)
    return SparseMatrix.from_dense(dense), dense, u


def _reports_equal(a: EstimateReport, b: EstimateReport) -> bool:
    return (
        np.array_equal(a.values, b.values)
        and np.array_equal(a.sample_variance, b.sample_variance)
        and np.array_equal(a.ci_halfwidth, b.ci_halfwidth)
        and a.n_paths == b.n_paths
        and a.total_events == b.total_events
    )


class TestRunParallel:
    def test_workers_one_equals_serial_merge(self):
        A, _, u = _sixsix()
        req = SolveRequest(alpha=0.7, t=1.0, n_paths=10_000, root_seed=10)
        job = prepare_job(A, u, req)
        direct = run_parallel(job, 1)
        via_parts = merge_partials([run_worker(job, 1, 0)],
                                   confidence=req.confidence)
        assert _reports_equal(direct, via_parts)

    def test_fixed_seed_and_workers_bitwise_repeatable(self):
        A, _, u = _sixsix()
        req = SolveRequest(alpha=0.7, t=1.0, n_paths=20_000, root_seed=11, workers=4)
        a = solve_full(A, u, req)
        b = solve_full(A, u, req)
        assert _reports_equal(a, b)

    def test_worker_counts_agree_within_noise(self):
        A, dense, u = _sixsix()
        oracle = dense_ml_oracle(0.7, dense, 1.0, u, route="series")
        for workers in (2, 4):
            req = SolveRequest(
                alpha=0.7, t=1.0, n_paths=200_000, root_seed=12, workers=workers
            )
            rep = solve_full(A, u, req)
            se = np.sqrt(np.asarray(rep.sample_variance) / req.n_paths)
            assert np.all(np.abs(np.asarray(rep.values) - oracle) <= 4.0 * se)

    def test_t_zero_with_workers(self):
        A, _, u = _sixsix()
        req = SolveRequest(alpha=0.7, t=0.0, n_paths=100, root_seed=13, workers=3)
        np.testing.assert_array_equal(solve_full(A, u, req).values, u)

    def test_wider_confidence_wider_interval(self):
        A, _, u = _sixsix()
        lo = solve_full(A, u, SolveRequest(alpha=0.7, t=1.0, n_paths=5_000,
                                           root_seed=14, confidence=0.9))
        hi = solve_full(A, u, SolveRequest(alpha=0.7, t=1.0, n_paths=5_000,
                                           root_seed=14, confidence=0.99))
        assert np.array_equal(lo.values, hi.values)
        assert np.all(np.asarray(hi.ci_halfwidth) >= np.asarray(lo.ci_halfwidth))


# -- partial sums and merging -------------------------------------------


class TestPartials:
    def test_split_run_equals_unsplit(self):
        A, _, u = _sixsix()
        req = SolveRequest(alpha=0.7, t=1.0, n_paths=10_000, root_seed=15, workers=2)
        job = prepare_job(A, u, req)
        parts = [run_worker(job, 2, k) for k in range(2)]
        merged = merge_partials(parts, confidence=req.confidence)
        whole = run_parallel(job, 2)
        assert _reports_equal(merged, whole)

    def test_merge_order_invariance(self):
        A, _, u = _sixsix()
        req = SolveRequest(alpha=0.7, t=1.0, n_paths=12_000, root_seed=16, workers=3)
        job = prepare_job(A, u, req)
        parts = [run_worker(job, 3, k) for k in range(3)]
        a = merge_partials(parts)
        b = merge_partials(list(reversed(parts)))
        assert _reports_equal(a, b)

    def test_single_part_matches_own_report(self):
        A, _, u = _sixsix()
        req = SolveRequest(alpha=0.7, t=1.0, n_paths=4_000, root_seed=17)
        job = prepare_job(A, u, req)
        rep = run_parallel(job, 1)
        solo = merge_partials([run_worker(job, 1, 0)], confidence=req.confidence)
        assert _reports_equal(rep, solo)

    def test_duplicate_worker_id_rejected(self):
        A, _, u = _sixsix()
        job = prepare_job(A, u, SolveRequest(alpha=0.7, t=1.0, n_paths=1_000,
                                             root_seed=18, workers=2))
        p = run_worker(job, 2, 0)
        with pytest.raises(ValidationError, match="worker"):
            merge_partials([p, p])

    def test_file_round_trip_bitwise(self, tmp_path):
        A, _, u = _sixsix()
        job = prepare_job(A, u, SolveRequest(alpha=0.7, t=1.0, n_paths=3_000,
                                             root_seed=19, workers=2))
        part = run_worker(job, 2, 1)
        path = tmp_path / "p1.bin"
        write_partial(part, path)
        back = read_partial(path)
        assert back.worker_id == part.worker_id
        assert back.n_paths == part.n_paths
        assert back.n_walks == part.n_walks
        assert back.event_count == part.event_count
        np.testing.assert_array_equal(back.sums, part.sums)
        np.testing.assert_array_equal(back.sums_sq, part.sums_sq)

    def test_four_file_parts_equal_inprocess(self, tmp_path):
        A, _, u = _sixsix()
        req = SolveRequest(alpha=0.7, t=1.0, n_paths=20_000, root_seed=20, workers=4)
        job = prepare_job(A, u, req)
        paths = []
        for k in range(4):
            p = tmp_path / f"part{k}.bin"
            write_partial(run_worker(job, 4, k), p)
            paths.append(p)
        merged = merge_partials([read_partial(p) for p in paths],
                                confidence=req.confidence)
        whole = run_parallel(job, 4)
        assert _reports_equal(merged, whole)

    def test_truncated_file_rejected(self, tmp_path):
        A, _, u = _sixsix()
        job = prepare_job(A, u, SolveRequest(alpha=0.7, t=1.0, n_paths=500,
                                             root_seed=21))
        path = tmp_path / "p.bin"
        write_partial(run_worker(job, 1, 0), path)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValidationError):
            read_partial(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTAPART" + b"\x00" * 64)
        with pytest.raises(ValidationError):
            read_partial(path)


# -- path statistics ----------------------------------------------------


class TestPathStatistics:
    def test_mean_events_tracks_renewal_law(self, diffusion8):
        rate = abs(diffusion8.metadata["diagonal"])
        req = SolveRequest(alpha=0.5, t=0.1, n_paths=20_000, root_seed=22)
        rep = solve_full(diffusion8.A, diffusion8.u0, req)
        stats = path_statistics(rep)
        expect = fractional_poisson_mean(rate, 0.5, 0.1)
        assert abs(stats.mean_events_per_path - expect) / expect < 0.05

    def test_t_zero_no_events(self, diffusion8):
        rep = solve_full(diffusion8.A, diffusion8.u0,
                         SolveRequest(alpha=0.5, t=0.0, n_paths=100))
        assert path_statistics(rep).mean_events_per_path == 0.0
