"""Evolutionary optimizer: dominance, sorting, crowding, operators, runs."""

import numpy as np
import pytest

from discflex.nsga2 import (
    EvaluationError,
    GaConfig,
    Individual,
    ProblemSpec,
    crowding_distance,
    dominates,
    fast_nondominated_sort,
    optimize,
    tournament_select,
    variation,
)


def _ind(objs, violation=0.0):
    return Individual(
        x=np.zeros(1), objectives=np.asarray(objs, dtype=float), violation=violation
    )


def _two_parabola(lower=-5.0, upper=5.0):
    def objectives(X):
        x = X[:, 0]
        return np.column_stack([x**2, (x - 2.0) ** 2])

    return ProblemSpec(
        n_vars=1,
        lower=np.array([lower]),
        upper=np.array([upper]),
        objectives=objectives,
    )


# ---------------------------------------------------------------------------
# dominance


def test_dominates_examples():
    assert dominates(_ind([1, 2]), _ind([2, 2]))
    assert not dominates(_ind([1, 3]), _ind([3, 1]))
    assert not dominates(_ind([3, 1]), _ind([1, 3]))
    assert dominates(_ind([5, 5]), _ind([0, 0], violation=1.0))
    assert dominates(_ind([9, 9], violation=0.5), _ind([0, 0], violation=1.0))


def test_dominance_irreflexive_and_asymmetric():
    rng = np.random.default_rng(23)
    for _ in range(300):
        a = _ind(rng.integers(0, 4, size=2), violation=float(rng.integers(0, 2)))
        b = _ind(rng.integers(0, 4, size=2), violation=float(rng.integers(0, 2)))
        assert not dominates(a, a)
        assert not (dominates(a, b) and dominates(b, a))


# ---------------------------------------------------------------------------
# sorting


def _brute_force_fronts(pop):
    """O(n^2) classifier: peel non-dominated layers by definition."""
    remaining = list(range(len(pop)))
    fronts = []
    while remaining:
        layer = [
            i
            for i in remaining
            if not any(dominates(pop[j], pop[i]) for j in remaining if j != i)
        ]
        fronts.append(sorted(layer))
        remaining = [i for i in remaining if i not in layer]
    return fronts


def test_sort_hand_example():
    pop = [_ind(o) for o in [(1, 2), (2, 1), (2, 2), (3, 3)]]
    fronts = fast_nondominated_sort(pop)
    assert [sorted(f) for f in fronts] == [[0, 1], [2], [3]]
    assert [ind.rank for ind in pop] == [0, 0, 1, 2]


def test_sort_identical_objectives_single_front():
    pop = [_ind([1.5, 2.5]) for _ in range(6)]
    fronts = fast_nondominated_sort(pop)
    assert len(fronts) == 1 and sorted(fronts[0]) == list(range(6))


def test_sort_total_chain_gives_singletons():
    pop = [_ind([k, k]) for k in range(5)]
    fronts = fast_nondominated_sort(pop)
    assert [sorted(f) for f in fronts] == [[0], [1], [2], [3], [4]]


def test_sort_matches_brute_force_on_random_populations():
    rng = np.random.default_rng(31)
    for trial in range(200):
        n = int(rng.integers(2, 65))
        m = int(rng.choice([2, 3]))
        objs = rng.integers(0, 6, size=(n, m)).astype(float)
        # mix in infeasible individuals to exercise constrained dominance
        viol = np.where(rng.random(n) < 0.3, rng.uniform(0.1, 2.0, n), 0.0)
        pop = [_ind(objs[i], violation=float(viol[i])) for i in range(n)]
        got = [sorted(f) for f in fast_nondominated_sort(pop)]
        want = _brute_force_fronts(pop)
        assert got == want, f"trial {trial}: {got} != {want}"


def test_first_front_has_no_dominating_pair():
    rng = np.random.default_rng(37)
    objs = rng.random((40, 2))
    pop = [_ind(o) for o in objs]
    first = fast_nondominated_sort(pop)[0]
    for i in first:
        for j in first:
            assert not dominates(pop[i], pop[j])


# ---------------------------------------------------------------------------
# crowding


def test_crowding_hand_case():
    front = [_ind(o) for o in [(1, 3), (2, 2), (3, 1)]]
    crowding_distance(front)
    assert front[0].crowding == np.inf
    assert front[2].crowding == np.inf
    assert front[1].crowding == pytest.approx(2.0)


def test_crowding_small_fronts_all_infinite():
    for size in (1, 2):
        front = [_ind([k, 1 - k]) for k in range(size)]
        crowding_distance(front)
        assert all(ind.crowding == np.inf for ind in front)


def test_crowding_duplicate_vectors_get_zero():
    front = [_ind(o) for o in [(0, 4), (1, 3), (1, 3), (1, 3), (4, 0)]]
    crowding_distance(front)
    # the middle duplicate is interior on both objectives with zero gaps
    assert front[2].crowding == pytest.approx(0.0)


def test_crowding_constant_objective_contributes_zero():
    front = [_ind(o) for o in [(0, 7), (1, 7), (2, 7)]]
    crowding_distance(front)
    assert front[1].crowding == pytest.approx(1.0)  # only the first objective counts


# ---------------------------------------------------------------------------
# selection


def test_tournament_rules_against_shadow_rng():
    # distinct (rank, crowding) everywhere: selection consumes exactly one
    # integer pair per call, so a same-seeded generator predicts the matchup
    pop = []
    for rank in range(4):
        for k in range(3):
            ind = _ind([rank, k])
            ind.rank = rank
            ind.crowding = float(k)
            pop.append(ind)
    rng = np.random.default_rng(41)
    shadow = np.random.default_rng(41)
    for _ in range(500):
        winner = tournament_select(pop, rng)
        i, j = (int(v) for v in shadow.integers(0, len(pop), size=2))
        a, b = pop[i], pop[j]
        if a.rank != b.rank:
            expect = i if a.rank < b.rank else j
        elif a.crowding != b.crowding:
            expect = i if a.crowding > b.crowding else j
        else:
            # same index drawn twice: a coin flip is still consumed
            expect = i if shadow.random() < 0.5 else j
        assert winner == expect


def test_tournament_full_tie_is_seed_deterministic():
    pop = [_ind([1, 1]) for _ in range(4)]
    for ind in pop:
        ind.rank = 0
        ind.crowding = np.inf
    picks1 = [tournament_select(pop, np.random.default_rng(5)) for _ in range(1)]
    picks2 = [tournament_select(pop, np.random.default_rng(5)) for _ in range(1)]
    assert picks1 == picks2


# ---------------------------------------------------------------------------
# variation


def test_variation_identity_when_operators_off():
    problem = _two_parabola()
    cfg = GaConfig(
        population_size=4, generations=1, crossover_probability=0.0, mutation_probability=0.0
    )
    parents = np.array([[1.0], [2.0], [-3.0], [4.0]])
    children = variation(parents, problem, cfg, np.random.default_rng(0))
    assert np.array_equal(children, parents)


def test_variation_output_always_in_bounds():
    problem = ProblemSpec(
        n_vars=3,
        lower=np.array([24.0, 3.0, 0.3]),
        upper=np.array([40.0, 9.0, 0.9]),
        objectives=lambda X: X[:, :2],
    )
    cfg = GaConfig(population_size=10, generations=1, mutation_probability=0.8)
    rng = np.random.default_rng(43)
    for _ in range(50):
        parents = problem.lower + rng.random((10, 3)) * (problem.upper - problem.lower)
        children = variation(parents, problem, cfg, rng)
        assert np.all(children >= problem.lower) and np.all(children <= problem.upper)


def test_sbx_preserves_pair_means():
    # with mutation off and bounds far away, child sums equal parent sums
    problem = ProblemSpec(
        n_vars=2,
        lower=np.array([-1e9, -1e9]),
        upper=np.array([1e9, 1e9]),
        objectives=lambda X: X,
    )
    cfg = GaConfig(
        population_size=2, generations=1, crossover_probability=1.0, mutation_probability=0.0
    )
    rng = np.random.default_rng(47)
    for _ in range(10_000):
        parents = rng.uniform(-10.0, 10.0, size=(2, 2))
        children = variation(parents, problem, cfg, rng)
        assert np.allclose(children.sum(axis=0), parents.sum(axis=0), rtol=1e-10, atol=1e-9)


# ---------------------------------------------------------------------------
# full runs


def test_two_parabola_front_matches_analytic_pareto_set():
    cfg = GaConfig(population_size=100, generations=50, seed=1)
    result = optimize(_two_parabola(), cfg)
    xs = np.array([ind.x[0] for ind in result.front])
    assert xs.min() >= -0.05 and xs.max() <= 2.05
    f = np.array([ind.objectives for ind in result.front])
    deviation = np.abs(f[:, 1] - (np.sqrt(f[:, 0]) - 2.0) ** 2)
    assert deviation.max() < 1e-2
    # the front should cover the whole trade-off, not collapse to a point
    assert xs.max() - xs.min() > 1.5


def test_degenerate_second_objective_collapses_to_minimizer():
    def objectives(X):
        x = X[:, 0]
        return np.column_stack([(x - 1.0) ** 2, np.zeros_like(x)])

    problem = ProblemSpec(
        n_vars=1, lower=np.array([-4.0]), upper=np.array([4.0]), objectives=objectives
    )
    result = optimize(problem, GaConfig(population_size=60, generations=60, seed=2))
    xs = np.array([ind.x[0] for ind in result.front])
    assert np.all(np.abs(xs - 1.0) < 1e-3)


def test_infeasible_everywhere_returns_empty_front_with_flag():
    problem = ProblemSpec(
        n_vars=1,
        lower=np.array([0.0]),
        upper=np.array([1.0]),
        objectives=lambda X: np.column_stack([X[:, 0], 1.0 - X[:, 0]]),
        constraints=lambda X: np.full((X.shape[0], 1), 2.0),
    )
    result = optimize(problem, GaConfig(population_size=20, generations=5, seed=3))
    assert len(result.front) == 0
    assert result.feasible_front_found is False
    assert all(not ind.feasible for ind in result.population)


def test_elitism_best_objectives_non_increasing():
    cfg = GaConfig(population_size=40, generations=40, seed=4)
    result = optimize(_two_parabola(), cfg)
    best = np.array([s.best_objectives for s in result.history])
    assert np.all(np.diff(best[:, 0]) <= 1e-12)
    assert np.all(np.diff(best[:, 1]) <= 1e-12)


def test_every_evaluated_design_is_inside_the_box():
    seen = []

    def objectives(X):
        seen.append(X.copy())
        return np.column_stack([X[:, 0] ** 2, (X[:, 0] - 1.0) ** 2])

    problem = ProblemSpec(
        n_vars=1, lower=np.array([-2.0]), upper=np.array([2.0]), objectives=objectives
    )
    optimize(problem, GaConfig(population_size=20, generations=10, seed=5))
    stacked = np.vstack(seen)
    assert np.all(stacked >= -2.0) and np.all(stacked <= 2.0)


def test_optimize_determinism():
    cfg = GaConfig(population_size=50, generations=10, seed=6)
    r1 = optimize(_two_parabola(), cfg)
    r2 = optimize(_two_parabola(), cfg)
    x1 = np.array([ind.x for ind in r1.population])
    x2 = np.array([ind.x for ind in r2.population])
    assert np.array_equal(x1, x2)
    f1 = np.array([ind.objectives for ind in r1.population])
    f2 = np.array([ind.objectives for ind in r2.population])
    assert np.array_equal(f1, f2)


def test_non_finite_evaluator_aborts_with_offending_design():
    def objectives(X):
        out = np.column_stack([X[:, 0], X[:, 0]])
        out[0, 0] = np.nan
        return out

    problem = ProblemSpec(
        n_vars=1, lower=np.array([0.0]), upper=np.array([1.0]), objectives=objectives
    )
    with pytest.raises(EvaluationError):
        optimize(problem, GaConfig(population_size=10, generations=2, seed=7))


def test_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population_size=7, generations=5)  # odd
    with pytest.raises(ValueError):
        GaConfig(population_size=10, generations=0)
    with pytest.raises(ValueError):
        GaConfig(population_size=10, generations=5, crossover_probability=1.5)
    with pytest.raises(ValueError):
        GaConfig(population_size=10, generations=5, crossover_index=0.0)


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(
            n_vars=2,
            lower=np.array([0.0, 1.0]),
            upper=np.array([1.0, 1.0]),  # not strictly above lower
            objectives=lambda X: X,
        )
    with pytest.raises(ValueError):
        ProblemSpec(
            n_vars=1,
            lower=np.array([np.inf]),
            upper=np.array([1.0]),
            objectives=lambda X: X,
        )
