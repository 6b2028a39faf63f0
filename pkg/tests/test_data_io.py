"""Ingestion and synthetic-cohort tests: hand-computed fixture matrices,
dummy-coding row properties, hard missing-value errors, and the population
identity linking the generator to the asymmetric Laplace CDF."""

import numpy as np
import pytest

from bqreg import (
    AffineMap,
    AldParams,
    BernoulliCovariate,
    CategoricalCovariate,
    ColumnDecl,
    DataError,
    Dataset,
    GaussianPrior,
    McmcConfig,
    PosteriorDraws,
    SyntheticSpec,
    SyntheticTruth,
    UniformCovariate,
    VariableSchema,
    ald_cdf,
    generate_synthetic,
    load_dataset,
    score_recovery,
)
from bqreg.data_io import dataset_to_csv, numeric_schema_for


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


FIXTURE_SCHEMA = VariableSchema(
    columns=(
        ColumnDecl(name="quit", role="response"),
        ColumnDecl(name="score", role="numeric", rescale=AffineMap(scale=0.01, offset=0.6)),
        ColumnDecl(
            name="band",
            role="categorical",
            levels=("low", "mid", "high"),
            reference="low",
        ),
        ColumnDecl(name="late", role="categorical", levels=("no", "yes"), reference="no"),
        ColumnDecl(name="note", role="skip"),
        ColumnDecl(name="wam", role="numeric"),
    ),
    interactions=(("late", "wam"),),
)

FIXTURE_CSV = """quit,score,band,late,note,wam
1,20,mid,yes,hello,24.5
0,0,low,no,world,26.0
1,40,high,yes,"quoted, comma",22.0
0,10,low,yes,d,27.5
1,30,mid,no,e,21.0
0,15,high,no,f,25.0
1,5,low,no,g,23.0
0,35,mid,yes,h,28.0
"""

FIXTURE_EXPECTED = np.array(
    [
        [1.0, 0.8, 1.0, 0.0, 1.0, 24.5, 24.5],
        [1.0, 0.6, 0.0, 0.0, 0.0, 26.0, 0.0],
        [1.0, 1.0, 0.0, 1.0, 1.0, 22.0, 22.0],
        [1.0, 0.7, 0.0, 0.0, 1.0, 27.5, 27.5],
        [1.0, 0.9, 1.0, 0.0, 0.0, 21.0, 0.0],
        [1.0, 0.75, 0.0, 1.0, 0.0, 25.0, 0.0],
        [1.0, 0.65, 0.0, 0.0, 0.0, 23.0, 0.0],
        [1.0, 0.95, 1.0, 0.0, 1.0, 28.0, 28.0],
    ]
)


class TestLoadDataset:
    def test_three_row_minimal_fixture(self, tmp_path):
        path = write(tmp_path, "tiny.csv", "y,mark\n1,80\n0,60\n1,100\n")
        schema = VariableSchema(
            columns=(
                ColumnDecl(name="y", role="response"),
                ColumnDecl(
                    name="mark", role="numeric", rescale=AffineMap(scale=0.004, offset=0.6)
                ),
            )
        )
        data = load_dataset(path, schema)
        np.testing.assert_allclose(
            data.design, [[1.0, 0.92], [1.0, 0.84], [1.0, 1.0]], rtol=1e-15
        )
        np.testing.assert_array_equal(data.response, [1, 0, 1])

    def test_hand_computed_design(self, tmp_path):
        path = write(tmp_path, "fixture.csv", FIXTURE_CSV)
        data = load_dataset(path, FIXTURE_SCHEMA)
        assert data.predictor_names == [
            "Intercept",
            "score",
            "band: mid",
            "band: high",
            "late: yes",
            "wam",
            "late: yes x wam",
        ]
        np.testing.assert_allclose(data.design, FIXTURE_EXPECTED, rtol=1e-15)
        np.testing.assert_array_equal(data.response, [1, 0, 1, 0, 1, 0, 1, 0])

    def test_identical_inputs_identical_datasets(self, tmp_path):
        p1 = write(tmp_path, "a.csv", FIXTURE_CSV)
        p2 = write(tmp_path, "b.csv", FIXTURE_CSV)
        d1 = load_dataset(p1, FIXTURE_SCHEMA)
        d2 = load_dataset(p2, FIXTURE_SCHEMA)
        np.testing.assert_array_equal(d1.design, d2.design)
        np.testing.assert_array_equal(d1.response, d2.response)

    def test_distinct_relevant_content_distinct_datasets(self, tmp_path):
        p1 = write(tmp_path, "a.csv", FIXTURE_CSV)
        p2 = write(tmp_path, "b.csv", FIXTURE_CSV.replace("24.5", "24.6"))
        p3 = write(tmp_path, "c.csv", FIXTURE_CSV.replace(",hello,", ",changed,"))
        d1 = load_dataset(p1, FIXTURE_SCHEMA)
        d2 = load_dataset(p2, FIXTURE_SCHEMA)
        d3 = load_dataset(p3, FIXTURE_SCHEMA)
        assert not np.array_equal(d1.design, d2.design)
        # a change confined to a skipped column changes nothing
        np.testing.assert_array_equal(d1.design, d3.design)

    def test_four_level_categorical_gives_three_dummies(self, tmp_path):
        schema = VariableSchema(
            columns=(
                ColumnDecl(name="y", role="response"),
                ColumnDecl(
                    name="isee",
                    role="categorical",
                    levels=("c1", "c2", "c3", "c4"),
                    reference="c1",
                ),
                ColumnDecl(name="x", role="numeric"),
            )
        )
        rows = ["y,isee,x"]
        gen = np.random.default_rng(1)
        for i in range(40):
            rows.append(f"{i % 2},c{1 + i % 4},{gen.uniform():.6f}")
        path = write(tmp_path, "isee.csv", "\n".join(rows) + "\n")
        data = load_dataset(path, schema)
        dummy_cols = [n for n in data.predictor_names if n.startswith("isee: ")]
        assert dummy_cols == ["isee: c2", "isee: c3", "isee: c4"]

    def test_dummy_rowwise_property(self, tmp_path):
        # dummies are 0/1 with at most one 1 per row across one variable
        rows = ["y,band,x"]
        gen = np.random.default_rng(2)
        for i in range(60):
            rows.append(f"{i % 2},{('low','mid','high')[i % 3]},{gen.uniform():.4f}")
        path = write(tmp_path, "bands.csv", "\n".join(rows) + "\n")
        schema = VariableSchema(
            columns=(
                ColumnDecl(name="y", role="response"),
                ColumnDecl(
                    name="band",
                    role="categorical",
                    levels=("low", "mid", "high"),
                    reference="low",
                ),
                ColumnDecl(name="x", role="numeric"),
            )
        )
        data = load_dataset(path, schema)
        block = data.design[:, [1, 2]]
        assert set(np.unique(block)) <= {0.0, 1.0}
        assert np.all(block.sum(axis=1) <= 1.0)

    def test_interaction_zero_where_dummy_zero(self, tmp_path):
        path = write(tmp_path, "fixture.csv", FIXTURE_CSV)
        data = load_dataset(path, FIXTURE_SCHEMA)
        dummy = data.design[:, data.predictor_names.index("late: yes")]
        product = data.design[:, data.predictor_names.index("late: yes x wam")]
        assert np.all(product[dummy == 0.0] == 0.0)

    def test_missing_values_reported_with_rows(self, tmp_path):
        text = "quit,score,band,late,note,wam\n1,20,mid,yes,a,24.5\n0,,low,no,b,\n1,40,high,yes,c,22.0\n"
        path = write(tmp_path, "missing.csv", text)
        with pytest.raises(DataError, match=r"missing values.*rows \[2\]"):
            load_dataset(path, FIXTURE_SCHEMA)

    def test_unseen_level_rejected(self, tmp_path):
        text = FIXTURE_CSV.replace("high", "ultra")
        path = write(tmp_path, "unseen.csv", text)
        with pytest.raises(DataError, match="unseen level"):
            load_dataset(path, FIXTURE_SCHEMA)

    def test_rank_deficiency_names_columns(self, tmp_path):
        rows = ["y,a,b"]
        gen = np.random.default_rng(3)
        for i in range(30):
            v = f"{gen.uniform():.6f}"
            rows.append(f"{i % 2},{v},{v}")  # b duplicates a exactly
        path = write(tmp_path, "collinear.csv", "\n".join(rows) + "\n")
        schema = VariableSchema(
            columns=(
                ColumnDecl(name="y", role="response"),
                ColumnDecl(name="a", role="numeric"),
                ColumnDecl(name="b", role="numeric"),
            )
        )
        with pytest.raises(DataError, match="collinear"):
            load_dataset(path, schema)

    def test_nonbinary_response_rejected(self, tmp_path):
        text = FIXTURE_CSV.replace("1,20", "2,20")
        path = write(tmp_path, "badresp.csv", text)
        with pytest.raises(DataError, match="expected 0 or 1"):
            load_dataset(path, FIXTURE_SCHEMA)

    def test_missing_column_rejected(self, tmp_path):
        path = write(tmp_path, "short.csv", "quit,score\n1,10\n0,20\n")
        with pytest.raises(DataError, match="missing from"):
            load_dataset(path, FIXTURE_SCHEMA)


class TestSchemaJson:
    def test_roundtrip(self):
        back = VariableSchema.from_json(FIXTURE_SCHEMA.to_json())
        assert back == FIXTURE_SCHEMA

    def test_validation(self):
        with pytest.raises(ValueError, match="response"):
            VariableSchema(columns=(ColumnDecl(name="x", role="numeric"),))
        with pytest.raises(ValueError, match="reference"):
            ColumnDecl(name="c", role="categorical", levels=("a", "b"), reference="z")


class TestGenerateSynthetic:
    def test_determinism(self):
        spec = SyntheticSpec(
            n=200,
            true_beta=(0.1, 0.5),
            covariates=(UniformCovariate(-1, 1),),
            seed=5,
        )
        d1, t1 = generate_synthetic(spec)
        d2, t2 = generate_synthetic(spec)
        np.testing.assert_array_equal(d1.design, d2.design)
        np.testing.assert_array_equal(d1.response, d2.response)
        assert t1 == t2

    def test_symmetric_null_gives_half_ones(self):
        n = 20_000
        spec = SyntheticSpec(
            n=n,
            true_beta=(0.0, 0.0),
            covariates=(UniformCovariate(-1, 1),),
            error_family="gaussian",
            seed=6,
        )
        data, _ = generate_synthetic(spec)
        prop = data.response.mean()
        assert abs(prop - 0.5) < 3.0 * np.sqrt(0.25 / n)

    def test_ald_tail_probability(self):
        # with beta = 0 and ALD(0.3) errors, P(y=1) = 1 - 0.3
        n = 50_000
        spec = SyntheticSpec(
            n=n,
            true_beta=(0.0, 0.0),
            covariates=(UniformCovariate(-1, 1),),
            error_family="ald",
            tau=0.3,
            seed=7,
        )
        data, _ = generate_synthetic(spec)
        assert abs(data.response.mean() - 0.7) < 3.0 * np.sqrt(0.7 * 0.3 / n)

    def test_population_identity_at_covariate_points(self):
        # P(y=1 | x) = 1 - F_ald(-x'beta) at each level of a 3-level factor
        n = 120_000
        tau = 0.4
        spec = SyntheticSpec(
            n=n,
            true_beta=(0.2, 0.9, -0.7),
            covariates=(CategoricalCovariate((0.4, 0.3, 0.3)),),
            error_family="ald",
            tau=tau,
            seed=8,
        )
        data, truth = generate_synthetic(spec)
        params = AldParams(0.0, 1.0, tau)
        beta = np.asarray(truth.true_beta)
        for pattern in ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]):
            mask = np.all(data.design[:, 1:] == pattern, axis=1)
            x_row = np.concatenate([[1.0], pattern])
            expected = 1.0 - ald_cdf(-float(x_row @ beta), params)
            observed = data.response[mask].mean()
            count = mask.sum()
            se = np.sqrt(expected * (1.0 - expected) / count)
            assert abs(observed - expected) < 3.5 * se

    def test_bernoulli_covariate_column(self):
        spec = SyntheticSpec(
            n=5000,
            true_beta=(0.0, 0.3),
            covariates=(BernoulliCovariate(0.25),),
            seed=9,
        )
        data, _ = generate_synthetic(spec)
        col = data.design[:, 1]
        assert set(np.unique(col)) == {0.0, 1.0}
        assert abs(col.mean() - 0.25) < 3.0 * np.sqrt(0.25 * 0.75 / 5000)

    def test_degenerate_response_rejected(self):
        spec = SyntheticSpec(
            n=500,
            true_beta=(50.0, 0.1),
            covariates=(UniformCovariate(-1, 1),),
            seed=10,
        )
        with pytest.raises(DataError, match="degenerate"):
            generate_synthetic(spec)

    def test_beta_length_validated(self):
        with pytest.raises(ValueError, match="true_beta"):
            SyntheticSpec(n=100, true_beta=(0.0,), covariates=(UniformCovariate(0, 1),))

    def test_truth_json_roundtrip(self):
        spec = SyntheticSpec(
            n=120,
            true_beta=(0.1, 0.2, -0.3),
            covariates=(UniformCovariate(-1, 1), BernoulliCovariate(0.5)),
            seed=11,
        )
        _, truth = generate_synthetic(spec)
        assert SyntheticTruth.from_json(truth.to_json()) == truth

    def test_csv_reload_roundtrip(self, tmp_path):
        spec = SyntheticSpec(
            n=150,
            true_beta=(0.2, 0.5, -0.4),
            covariates=(BernoulliCovariate(0.5), UniformCovariate(-1, 1)),
            seed=12,
        )
        data, _ = generate_synthetic(spec)
        path = write(tmp_path, "synth.csv", dataset_to_csv(data))
        back = load_dataset(path, numeric_schema_for(data))
        np.testing.assert_array_equal(back.design, data.design)
        np.testing.assert_array_equal(back.response, data.response)
        assert back.predictor_names == data.predictor_names


class TestScoreRecovery:
    def make_fit(self, matrix, names):
        return PosteriorDraws(
            draws=np.asarray(matrix, dtype=np.float64),
            tau=0.5,
            predictor_names=names,
            config=McmcConfig(0, len(matrix), 1, seed=0),
        )

    def make_truth(self, beta, names):
        return SyntheticTruth(
            true_beta=tuple(beta),
            predictor_names=tuple(names),
            error_family="ald",
            tau=0.5,
            seed=0,
            n=100,
        )

    def test_exact_fit_zero_distance(self):
        beta = [0.3, 1.0, -0.5]
        names = ["Intercept", "a", "b"]
        fit = self.make_fit(np.tile(beta, (50, 1)), names)
        report = score_recovery(fit, self.make_truth(beta, names))
        # arccos of a unit dot product computed in floats: zero to ~1e-7
        assert report.angular_distance == pytest.approx(0.0, abs=1e-7)
        assert all(report.sign_agreement)
        assert all(report.hpd_covers)

    def test_orthogonal_directions(self):
        names = ["Intercept", "a", "b"]
        fit = self.make_fit(np.tile([0.0, 1.0, 0.0], (50, 1)), names)
        report = score_recovery(fit, self.make_truth([0.0, 0.0, 1.0], names))
        assert report.angular_distance == pytest.approx(np.pi / 2.0)

    def test_zero_truth_rejected(self):
        names = ["Intercept", "a"]
        fit = self.make_fit(np.tile([0.0, 1.0], (50, 1)), names)
        with pytest.raises(ValueError):
            score_recovery(fit, self.make_truth([1.0, 0.0], names))

    def test_dimension_mismatch(self):
        fit = self.make_fit(np.tile([0.0, 1.0], (50, 1)), ["Intercept", "a"])
        with pytest.raises(ValueError):
            score_recovery(fit, self.make_truth([0.0, 1.0, 1.0], ["Intercept", "a", "b"]))


class TestDatasetValidation:
    def test_intercept_column_required(self):
        with pytest.raises(DataError, match="identically one"):
            Dataset(
                design=np.column_stack([np.arange(10.0), np.ones(10)]),
                response=np.zeros(10, dtype=int),
                predictor_names=["Intercept", "x"],
            )

    def test_binary_response_required(self):
        with pytest.raises(DataError, match="0 or 1"):
            Dataset(
                design=np.ones((10, 1)),
                response=np.arange(10),
                predictor_names=["Intercept"],
            )

    def test_prior_spd_required(self):
        with pytest.raises(ValueError, match="positive definite"):
            GaussianPrior(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
