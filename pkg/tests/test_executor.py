import io
import threading

import numpy as np
import pytest

from lamsa import (
    ExecutorConfig,
    ExecutorError,
    FootruleProblem,
    RandomSource,
    SchedulingProblem,
    SharedBest,
    generate_instance,
    preprocess,
    run,
    run_sequential_deterministic,
    run_worker,
)
from lamsa.executor import read_record_csv
from lamsa.problem import PermutationProblem


@pytest.fixture(scope="module")
def problem():
    inst = generate_instance(20, 0.6, 0.5, 0.5, RandomSource(5))
    return SchedulingProblem(preprocess(inst)[0])


def _lengths(record, instance=0):
    return [(e.length, e.evals) for e in record.instance_log(instance)]


def test_val_budget_7000(problem):
    rec = run_sequential_deterministic(problem, ExecutorConfig("val", budget_evals=7000))
    assert _lengths(rec) == [(1000, 1000), (2000, 2000), (4000, 4000)]
    assert not rec.restarts[-1].truncated
    assert rec.evaluations == 7000


def test_fal_budget_3500(problem):
    rec = run_sequential_deterministic(problem, ExecutorConfig("fal:1000", budget_evals=3500))
    assert _lengths(rec) == [(1000, 1000)] * 3 + [(1000, 500)]
    assert rec.restarts[-1].truncated


def test_pval0_three_instances_first_lengths(problem):
    rec = run_sequential_deterministic(problem, ExecutorConfig("pval0", n_instances=3, budget_evals=7000))
    assert [rec.instance_log(i)[0].length for i in range(3)] == [1000, 2000, 4000]
    # Instance 0 finished its 1000-evaluation run and started the 8000 one.
    assert [e.length for e in rec.instance_log(0)] == [1000, 8000]


def test_deterministic_repeatable(problem):
    cfg = ExecutorConfig("pval", n_instances=4, budget_evals=30000, base_seed=11, snapshot_every=1000)
    a = run_sequential_deterministic(problem, cfg)
    b = run_sequential_deterministic(problem, cfg)
    assert a.best_solution.tolist() == b.best_solution.tolist()
    assert (a.snapshots, a.improvements, a.restarts) == (b.snapshots, b.improvements, b.restarts)


@pytest.mark.parametrize("schedule, n, reanneal", [
    ("val", 1, False), ("pval0", 3, False), ("pval", 6, True), ("fal:700", 2, True),
])
def test_engines_agree(problem, schedule, n, reanneal):
    cfg = ExecutorConfig(schedule, n_instances=n, budget_evals=20000, reanneal=reanneal,
                         base_seed=3, snapshot_every=999)
    a = run_sequential_deterministic(problem, cfg, engine="python")
    b = run_sequential_deterministic(problem, cfg, engine="jit")
    assert a.snapshots == b.snapshots
    assert a.improvements == b.improvements
    assert a.restarts == b.restarts
    assert a.best_solution.tolist() == b.best_solution.tolist()


def test_record_invariants(problem):
    for seed in range(5):
        cfg = ExecutorConfig("pval", n_instances=3, budget_evals=25000, base_seed=seed, snapshot_every=500)
        rec = run_sequential_deterministic(problem, cfg)
        costs = [c for _, c in rec.snapshots]
        assert all(b <= a for a, b in zip(costs, costs[1:]))
        assert [at for at, _ in rec.snapshots] == list(range(500, 25001, 500))
        assert all(rec.best_cost <= e.best_cost for e in rec.restarts)
        assert rec.best_cost == min(e.best_cost for e in rec.restarts)
        steps = [c for _, c, _ in rec.improvements]
        assert all(b < a for a, b in zip(steps, steps[1:]))
        assert problem.cost(rec.best_solution) == rec.best_cost
        assert sum(e.evals for e in rec.restarts) == rec.evaluations == 25000


def test_budget_accounting_not_multiple_of_n(problem):
    rec = run_sequential_deterministic(problem, ExecutorConfig("val", n_instances=3, budget_evals=10001))
    per = [sum(e.evals for e in rec.instance_log(i)) for i in range(3)]
    assert per == [3334, 3334, 3333]


def test_workers_independent_without_reanneal(problem):
    budget, n = 40003, 4
    cfg = ExecutorConfig("pval", n_instances=n, budget_evals=budget, base_seed=8)
    full = run_sequential_deterministic(problem, cfg)
    for k in range(n):
        share = budget // n + (k < budget % n)
        solo_cfg = ExecutorConfig("pval", n_instances=n, budget_evals=share, base_seed=8)
        solo = run_worker(problem, solo_cfg, k)
        strip = [(e.restart, e.length, e.evals, e.best_cost, e.initial_cost) for e in solo.restarts]
        assert strip == [(e.restart, e.length, e.evals, e.best_cost, e.initial_cost) for e in full.instance_log(k)]


def test_reanneal_starts_from_shared_best(problem):
    cfg = ExecutorConfig("val", n_instances=2, budget_evals=30000, reanneal=True, base_seed=1)
    rec = run_sequential_deterministic(problem, cfg)
    later = [e for e in rec.restarts if e.restart > 0]
    assert later
    for e in later:
        assert e.initial_cost == rec.best_at(e.started_at)


def test_run_worker_range(problem):
    with pytest.raises(ValueError):
        run_worker(problem, ExecutorConfig("val", n_instances=2, budget_evals=10), 2)


def test_config_validation():
    with pytest.raises(ValueError):
        ExecutorConfig("val")
    with pytest.raises(ValueError):
        ExecutorConfig("val", budget_evals=10, budget_secs=1.0)
    with pytest.raises(ValueError):
        ExecutorConfig("val", budget_evals=0)
    with pytest.raises(ValueError):
        ExecutorConfig("val", n_instances=0, budget_evals=10)
    with pytest.raises(ValueError):
        ExecutorConfig("val", budget_secs=1.0, snapshot_every=0)
    assert ExecutorConfig("val", budget_evals=6000).snapshot_every == 100
    assert ExecutorConfig("val", budget_secs=2.0).unit == "seconds"


def test_deterministic_rejects_wall_clock(problem):
    with pytest.raises(ValueError):
        run_sequential_deterministic(problem, ExecutorConfig("val", budget_secs=1.0))


def test_shared_best_strict_improvement():
    sb = SharedBest()
    assert sb.read() == (None, None)
    assert sb.offer(np.array([1, 0]), 5, 0, 0)
    assert not sb.offer(np.array([0, 1]), 5, 1, 1)
    assert sb.offer(np.array([0, 1]), 4, 2, 1)
    cost, sol = sb.read()
    assert cost == 4 and sol.tolist() == [0, 1] and sb.found_by == 1
    assert [h[1] for h in sb.history] == [5, 4]


def test_shared_best_concurrent_offers():
    sb = SharedBest()
    rng = RandomSource(0)
    costs = rng.integers(0, 10**6, 8 * 2000).reshape(8, 2000)

    def offer_all(row, w):
        for c in row:
            sb.offer(np.array([w]), int(c), 0, w)

    threads = [threading.Thread(target=offer_all, args=(costs[w], w)) for w in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sb.cost == costs.min()
    hist = [h[1] for h in sb.history]
    assert all(b < a for a, b in zip(hist, hist[1:]))


@pytest.mark.parametrize("engine", ["python", "jit"])
def test_threaded_eval_budget(problem, engine):
    cfg = ExecutorConfig("pval", n_instances=3, budget_evals=60000, snapshot_every=6000, chunk=500)
    rec = run(problem, cfg, engine=engine)
    assert rec.evaluations == 60000
    assert sum(e.evals for e in rec.restarts) == 60000
    assert rec.snapshots[-1] == (60000, rec.best_cost)
    costs = [c for _, c in rec.snapshots]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert problem.cost(rec.best_solution) == rec.best_cost


def test_threaded_wall_clock(problem):
    cfg = ExecutorConfig("val", n_instances=2, budget_secs=0.6, snapshot_every=0.1)
    rec = run(problem, cfg)
    assert rec.unit == "seconds"
    assert 0.6 <= rec.elapsed < 5
    assert len(rec.snapshots) >= 3
    costs = [c for _, c in rec.snapshots]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert rec.evaluations > 0


class _Exploding(PermutationProblem):
    def cost(self, solution):
        if solution[0] == 0:
            raise RuntimeError("boom")
        return 1


def test_worker_failure_reported():
    with pytest.raises(ExecutorError, match="boom"):
        run(_Exploding(6), ExecutorConfig("val", n_instances=2, budget_evals=5000))


def test_rejects_non_problem():
    with pytest.raises(TypeError):
        run_sequential_deterministic(object(), ExecutorConfig("val", budget_evals=10))


def test_record_csv_round_trip(problem):
    rec = run_sequential_deterministic(problem, ExecutorConfig("pval0", n_instances=2, budget_evals=9000))
    buf = io.StringIO()
    rec.write_csv(buf)
    snapshots, restarts = read_record_csv(io.StringIO(buf.getvalue()))
    assert snapshots == rec.snapshots
    assert restarts == rec.restarts
    assert "elapsed,bestCost" in buf.getvalue()
    with pytest.raises(ValueError):
        read_record_csv(io.StringIO("1,2\n"))


def test_best_at_and_first_reaching(problem):
    rec = run_sequential_deterministic(problem, ExecutorConfig("val", budget_evals=5000))
    assert rec.best_at(0) == rec.improvements[0][1]
    assert rec.best_at(5000) == rec.best_cost
    with pytest.raises(ValueError):
        rec.best_at(5001)
    assert rec.first_reaching(rec.best_cost) == rec.found_at
    assert rec.first_reaching(-1) is None


def test_footrule_problem_runs():
    prob = FootruleProblem.random(15, RandomSource(2))
    rec = run_sequential_deterministic(prob, ExecutorConfig("val", budget_evals=50000))
    assert prob.cost(rec.best_solution) == rec.best_cost
    assert rec.best_cost < min(e.initial_cost for e in rec.restarts)
