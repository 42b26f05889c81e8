import json

import numpy as np
import pytest

from app.datamodel import (
    CategoricalAttribute,
    Histogram,
    IdentifierAttribute,
    Marginal,
    NumericAttribute,
    Record,
    Schema,
    all_two_way_marginals,
    bin_representative,
    build_histogram,
    flatten_index,
    full_marginal,
    simulate_skewed,
)
from app.datamodel.partition import numeric_attribute, skew_weights
from app.dpcore import NoisyMeasurement, PrivacyBudget, remaining
from app.errors import BudgetExceededError, DomainMismatchError, DomainTooLargeError, EmptyWorkloadError
from app.synthgen import (
    Distribution,
    Query,
    Workload,
    evaluate_query,
    export_trace,
    indicator_workload,
    measure_generate,
    mw_update,
    mwem,
    project,
    sample_records,
    tv_error,
)
from app.synthgen.measure_generate import measure_marginals

TWO_CELLS = Marginal(attributes=(0,), shape=(2,))
TEN_BINS = Marginal(attributes=(0,), shape=(10,))


def measurement(value: float) -> NoisyMeasurement:
    return NoisyMeasurement(query="q", value=value, epsilon_used=1.0, scale=1.0)


def skewed_histogram(n: int, seed: int, bins: int = 10) -> Histogram:
    schema = Schema(attributes=[numeric_attribute(bins=bins)])
    records = simulate_skewed(n, schema.attributes[0], 0.5, np.random.default_rng(seed))
    return build_histogram(records, full_marginal(schema), schema)


class TestQueries:
    def test_indicator_on_histogram(self):
        counts = np.zeros(10)
        counts[3] = 2
        hist = Histogram(TEN_BINS, counts)
        assert evaluate_query(hist, Query.indicator(TEN_BINS, 3)) == 2.0

    def test_all_ones_gives_mass(self):
        dist = Distribution.uniform(TEN_BINS, 250.0)
        assert evaluate_query(dist, Query("ones", TEN_BINS, np.ones(10))) == pytest.approx(250.0)

    def test_matches_per_record_sum(self, rng, mixed_schema, make_mixed_pods):
        records = [r for pod in make_mixed_pods(300, 3, seed=4) for r in pod.records]
        marginal = full_marginal(mixed_schema)
        hist = build_histogram(records, marginal, mixed_schema)
        coefficients = rng.uniform(-1.0, 1.0, marginal.cell_count)
        query = Query("random", marginal, coefficients)

        expected = 0.0
        for record in records:
            single = build_histogram([record], marginal, mixed_schema)
            expected += float(coefficients @ single.counts)
        assert evaluate_query(hist, query) == pytest.approx(expected)

    def test_projection_of_wider_histogram(self, mixed_schema, make_mixed_pods):
        records = [r for pod in make_mixed_pods(100, 2) for r in pod.records]
        joint = build_histogram(records, full_marginal(mixed_schema), mixed_schema)
        color = build_histogram(records, full_marginal(mixed_schema, [1]), mixed_schema)
        assert np.array_equal(project(joint, color.marginal), color.counts)

    def test_coefficients_bounded(self):
        with pytest.raises(ValueError):
            Query("bad", TWO_CELLS, np.array([2.0, 0.0]))

    def test_empty_workload(self):
        with pytest.raises(EmptyWorkloadError):
            Workload(())

    def test_foreign_marginal(self):
        dist = Distribution.uniform(TEN_BINS, 1.0)
        with pytest.raises(DomainMismatchError):
            evaluate_query(dist, Query.indicator(Marginal(attributes=(1,), shape=(2,)), 0))


class TestMwUpdate:
    def test_hand_example(self):
        dist = Distribution(TWO_CELLS, np.array([0.5, 0.5]), 1.0)
        updated = mw_update(dist, Query.indicator(TWO_CELLS, 0), measurement(0.9))
        assert updated.weights == pytest.approx([0.5498, 0.4502], abs=1e-4)
        assert updated.weights.sum() == pytest.approx(1.0)

    def test_exact_answer_is_fixed_point(self):
        dist = Distribution(TEN_BINS, np.arange(1.0, 11.0), 55.0)
        query = Query.indicator(TEN_BINS, 4)
        updated = mw_update(dist, query, measurement(evaluate_query(dist, query)))
        assert np.allclose(updated.weights, dist.weights)

    def test_repeated_update_moves_less(self):
        dist = Distribution(TWO_CELLS, np.array([50.0, 50.0]), 100.0)
        query = Query.indicator(TWO_CELLS, 0)
        first = mw_update(dist, query, measurement(90.0))
        second = mw_update(first, query, measurement(90.0))
        assert abs(second.weights[0] - first.weights[0]) < abs(first.weights[0] - dist.weights[0])

    def test_rejects_non_finite(self):
        dist = Distribution.uniform(TWO_CELLS, 1.0)
        with pytest.raises(ValueError):
            mw_update(dist, Query.indicator(TWO_CELLS, 0), measurement(float("inf")))


class TestTvError:
    def test_identical(self):
        hist = Histogram(TEN_BINS, np.full(10, 3))
        assert tv_error(Distribution.uniform(TEN_BINS, 30.0), hist) == pytest.approx(0.0)

    def test_disjoint_point_masses(self):
        dist = Distribution(TWO_CELLS, np.array([1.0, 0.0]), 1.0)
        assert tv_error(dist, Histogram(TWO_CELLS, [0, 5])) == pytest.approx(1.0)

    def test_uniform_against_point_mass(self):
        counts = np.zeros(10)
        counts[6] = 40
        assert tv_error(Distribution.uniform(TEN_BINS, 40.0), Histogram(TEN_BINS, counts)) == pytest.approx(0.9)


class TestMwem:
    def test_spends_exactly_eps(self, rng):
        hist = skewed_histogram(2000, seed=1)
        budget = PrivacyBudget(epsilon_total=2.0)
        dist, trace = mwem(hist, indicator_workload([TEN_BINS]), 2.0, 30, rng, budget)
        assert len(trace) == 30
        assert len(budget.log) == 60
        assert remaining(budget) == pytest.approx(0.0, abs=1e-9)
        assert dist.weights.sum() == pytest.approx(2000.0)
        assert [s.iteration for s in trace.steps] == list(range(1, 31))

    def test_spent_stays_within_total(self):
        hist = skewed_histogram(500, seed=1)
        workload = indicator_workload([TEN_BINS])
        for t in range(1, 201):
            budget = PrivacyBudget(epsilon_total=2.0)
            mwem(hist, workload, 2.0, t, np.random.default_rng(t), budget, track_error=False)
            assert budget.epsilon_spent <= budget.epsilon_total, t

    def test_beats_uniform_start(self, rng):
        hist = skewed_histogram(10_000, seed=2)
        start = tv_error(Distribution.uniform(TEN_BINS, 10_000.0), hist)
        dist, trace = mwem(hist, indicator_workload([TEN_BINS]), 2.0, 30, rng, PrivacyBudget(epsilon_total=2.0))
        assert tv_error(dist, hist) < start
        assert trace.steps[-1].tv_error == pytest.approx(tv_error(dist, hist))

    def test_budget_too_small(self, rng):
        with pytest.raises(BudgetExceededError):
            mwem(skewed_histogram(100, 3), indicator_workload([TEN_BINS]), 2.0, 5, rng, PrivacyBudget(epsilon_total=1.0))

    def test_empty_histogram(self, rng):
        with pytest.raises(DomainMismatchError):
            mwem(Histogram.zeros(TEN_BINS), indicator_workload([TEN_BINS]), 1.0, 5, rng, PrivacyBudget(epsilon_total=1.0))

    def test_domain_limit(self, rng):
        with pytest.raises(DomainTooLargeError):
            mwem(skewed_histogram(100, 3), indicator_workload([TEN_BINS]), 1.0, 5, rng,
                 PrivacyBudget(epsilon_total=1.0), max_cells=5)

    def test_averaged_iterates_keep_mass(self, rng):
        hist = skewed_histogram(500, seed=4)
        dist, _ = mwem(hist, indicator_workload([TEN_BINS]), 1.0, 10, rng,
                       PrivacyBudget(epsilon_total=1.0), average_iterates=True, track_error=False)
        assert dist.weights.sum() == pytest.approx(500.0)

    def test_seeded_runs_repeat(self):
        hist = skewed_histogram(1000, seed=5)
        runs = [
            mwem(hist, indicator_workload([TEN_BINS]), 1.0, 10, np.random.default_rng(9), PrivacyBudget(epsilon_total=1.0))
            for _ in range(2)
        ]
        assert np.array_equal(runs[0][0].weights, runs[1][0].weights)

    def test_two_way_workload(self, rng, mixed_schema, make_mixed_pods):
        records = [r for pod in make_mixed_pods(400, 4) for r in pod.records]
        marginals = all_two_way_marginals(mixed_schema)
        hists = [build_histogram(records, m, mixed_schema) for m in marginals]
        workload = indicator_workload(marginals, [m.label(mixed_schema) for m in marginals])
        assert workload.queries[0].id == "colorxsize[0]"
        dist, _ = mwem(hists, workload, 2.0, 10, rng, PrivacyBudget(epsilon_total=2.0))
        assert dist.domain == full_marginal(mixed_schema)

    def test_export_trace(self, rng, tmp_path):
        _, trace = mwem(skewed_histogram(300, 6), indicator_workload([TEN_BINS]), 1.0, 4, rng,
                        PrivacyBudget(epsilon_total=1.0))
        path = tmp_path / "trace.jsonl"
        export_trace(trace, path)
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(rows) == 4
        assert set(rows[0]) == {"iteration", "query_id", "noisy_value", "tv_error"}


class TestMeasureGenerate:
    def test_near_noiseless_fit(self, rng):
        marginal = Marginal(attributes=(0,), shape=(4,))
        hist = Histogram(marginal, [400, 300, 200, 100])
        dist = measure_generate([hist], 1e6, 300, rng, PrivacyBudget(epsilon_total=1e6))
        assert tv_error(dist, hist) < 0.01

    def test_zero_passes_is_uniform(self, rng):
        hist = skewed_histogram(1000, seed=7)
        budget = PrivacyBudget(epsilon_total=1.0)
        dist = measure_generate([hist], 1.0, 0, rng, budget)
        assert np.allclose(dist.weights, 100.0)
        assert len(budget.log) == 1

    def test_charges_each_marginal(self, rng, mixed_schema, make_mixed_pods):
        records = [r for pod in make_mixed_pods(200, 2) for r in pod.records]
        marginals = [full_marginal(mixed_schema, [1]), full_marginal(mixed_schema, [2])]
        hists = [build_histogram(records, m, mixed_schema) for m in marginals]
        budget = PrivacyBudget(epsilon_total=1.0)
        measure_generate(hists, 1.0, 3, rng, budget)
        assert [e.epsilon for e in budget.log] == pytest.approx([0.5, 0.5])

    def test_empty_marginals(self, rng):
        with pytest.raises(EmptyWorkloadError):
            measure_generate([], 1.0, 1, rng, PrivacyBudget(epsilon_total=1.0))

    def test_titanic_scale_fit_improves_on_uniform(self):
        schema = Schema(attributes=[
            IdentifierAttribute(name="Name"),
            CategoricalAttribute(name="Survived", values=["0", "1"]),
            CategoricalAttribute(name="Pclass", values=["1", "2", "3"]),
            CategoricalAttribute(name="Sex", values=["male", "female"]),
            NumericAttribute(name="Age", lo=0.0, hi=80.0, bins=10),
            CategoricalAttribute(name="SibSp", values=[str(i) for i in range(7)]),
            CategoricalAttribute(name="Parch", values=[str(i) for i in range(7)]),
            NumericAttribute(name="Fare", lo=0.0, hi=520.0, bins=10),
        ])
        assert full_marginal(schema).cell_count == 58_800

        gen = np.random.default_rng(11)
        n = 5000
        columns = [[f"p{i}" for i in range(n)]]
        for spec in schema.attributes[1:]:
            bins = gen.choice(spec.domain_size, size=n, p=skew_weights(spec.domain_size, 0.6))
            columns.append([bin_representative(spec, int(b)) for b in bins])
        records = [Record(cells=tuple(row)) for row in zip(*columns)]

        marginals = all_two_way_marginals(schema)
        assert len(marginals) == 21
        hists = [build_histogram(records, m, schema) for m in marginals]

        noisy = measure_marginals(hists, 1.0, np.random.default_rng(12), PrivacyBudget(epsilon_total=1.0))
        dist = measure_generate(hists, 1.0, 5, np.random.default_rng(12), PrivacyBudget(epsilon_total=1.0))
        uniform = Distribution.uniform(dist.domain, float(n))

        def l1(candidate):
            return sum(np.abs(project(candidate, h.marginal) - m).sum() for h, m in zip(hists, noisy))

        assert l1(dist) < l1(uniform)


class TestSampling:
    def test_point_mass(self, rng, uniform_schema):
        weights = np.zeros(10)
        weights[2] = 1.0
        records = sample_records(Distribution(TEN_BINS, weights, 1.0), 50, rng, uniform_schema)
        assert {r.cells for r in records} == {(5.0,)}

    def test_zero(self, rng, uniform_schema):
        assert sample_records(Distribution.uniform(TEN_BINS, 1.0), 0, rng, uniform_schema) == []

    def test_frequencies(self, rng, uniform_schema):
        probs = np.arange(1.0, 11.0) / 55.0
        m = 100_000
        records = sample_records(Distribution(TEN_BINS, probs, 1.0), m, rng, uniform_schema)
        counts = build_histogram(records, full_marginal(uniform_schema), uniform_schema).counts
        sigma = np.sqrt(m * probs * (1 - probs))
        assert np.all(np.abs(counts - m * probs) <= 4 * sigma)

    def test_pii_left_blank(self, rng, mixed_schema):
        domain = full_marginal(mixed_schema)
        weights = np.zeros(domain.cell_count)
        weights[flatten_index((1, 2), domain.shape)] = 1.0
        records = sample_records(Distribution(domain, weights, 1.0), 3, rng, mixed_schema)
        assert records[0].cells == ("", "green", 6.25)
