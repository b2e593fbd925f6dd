import math

import numpy as np
import pytest

from blindcite import (
    ConfigError,
    EncodingConfig,
    PaperRecord,
    TriangleRegion,
    ValidationError,
    arsinh,
    build_design_matrix,
    classify_triangle,
    language_rank,
    split_train_test,
)
from blindcite.features import ICITE_COLUMNS, NUMERIC_COLUMNS


def make_record(**overrides):
    base = dict(
        pmid="p1",
        year=2000,
        citations=3,
        sjr=1.5,
        mesh_count=10,
        a_score=0.2,
        c_score=0.3,
        h_score=0.4,
        title_len=12,
        n_references=25,
        ref_mean_age=8.0,
        page_length=10.0,
        languages=("eng",),
        clinical=True,
        research=False,
        access=True,
        pub_types=frozenset({"Journal Article"}),
    )
    base.update(overrides)
    return PaperRecord(**base)


class TestArsinh:
    def test_fixes_origin(self):
        assert arsinh(0.0) == 0.0

    def test_unit_value_matches_closed_form(self):
        # independent oracle: ln(x + sqrt(x^2 + 1)) evaluated directly
        assert arsinh(1.0) == pytest.approx(math.log(1.0 + math.sqrt(2.0)), rel=1e-15)

    def test_large_argument_matches_log_asymptote(self):
        exact = math.log(1000.0 + math.sqrt(1000.0**2 + 1.0))
        assert arsinh(1000.0) == pytest.approx(exact, rel=1e-15)
        assert arsinh(1000.0) == pytest.approx(math.log(2000.0), rel=1e-6)

    def test_odd_and_inverse_of_sinh(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-1e6, 1e6, size=2000)
        np.testing.assert_allclose(arsinh(-x), -arsinh(x), rtol=1e-12)
        np.testing.assert_allclose(np.sinh(arsinh(x)), x, rtol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            arsinh(float("nan"))
        with pytest.raises(ValidationError):
            arsinh(float("inf"))


class TestLanguageRank:
    def test_english_only(self):
        assert language_rank(["eng"]) == 1

    def test_bilingual(self):
        assert language_rank(["eng", "fre"]) == 2

    def test_no_english(self):
        assert language_rank(["ger"]) == 3

    def test_case_and_code_variants(self):
        assert language_rank(["ENG"]) == 1
        assert language_rank(["english", "eng"]) == 1
        assert language_rank(["fre", "ger"]) == 3

    def test_empty_list_rejected(self):
        with pytest.raises(ValidationError):
            language_rank([])


class TestClassifyTriangle:
    def test_vertex_lands_in_corner(self):
        assert classify_triangle(1.0, 0.0, 0.0) is TriangleRegion.A
        assert classify_triangle(0.0, 1.0, 0.0) is TriangleRegion.C
        assert classify_triangle(0.0, 0.0, 1.0) is TriangleRegion.H

    def test_centroid_is_central(self):
        assert classify_triangle(1 / 3, 1 / 3, 1 / 3) is TriangleRegion.ACH

    def test_zero_scores_fall_outside(self):
        # hand application of the sum threshold: 0 < tau
        assert classify_triangle(0.0, 0.0, 0.0) is TriangleRegion.OUTSIDE

    def test_boundary_resolves_to_central_first(self):
        assert classify_triangle(0.5, 0.25, 0.25) is TriangleRegion.ACH
        assert classify_triangle(0.25, 0.5, 0.25) is TriangleRegion.ACH
        assert classify_triangle(0.6, 0.2, 0.2) is TriangleRegion.A

    def test_scale_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            raw = rng.dirichlet([1.0, 1.0, 1.0])
            lam = rng.uniform(0.05, 1.0)
            a, c, h = raw * lam
            assert classify_triangle(a, c, h) is classify_triangle(
                a * 0.5, c * 0.5, h * 0.5
            )

    def test_total_on_valid_simplex(self):
        rng = np.random.default_rng(13)
        for _ in range(500):
            a, c, h = rng.dirichlet([0.7, 0.7, 0.7]) * rng.uniform(0, 1)
            assert classify_triangle(a, c, h) in TriangleRegion

    def test_invalid_scores_rejected(self):
        with pytest.raises(ValidationError):
            classify_triangle(-0.1, 0.5, 0.5)
        with pytest.raises(ValidationError):
            classify_triangle(0.7, 0.7, 0.7)


class TestBuildDesignMatrix:
    def test_numeric_tier_columns_exact(self):
        records = [make_record(pmid=f"p{i}") for i in range(3)]
        dm = build_design_matrix(
            records, EncodingConfig(response_kind="weighted_sjr", tier="numeric")
        )
        assert dm.column_names == ("intercept", *NUMERIC_COLUMNS)
        assert dm.column_names == (
            "intercept",
            "H Score",
            "A Score",
            "C Score",
            "Title",
            "References",
            "Age",
            "MeSH",
            "Length",
        )

    def test_complete_tier_column_count(self):
        records = [
            make_record(pmid="p1", year=2000, pub_types=frozenset({"Review"})),
            make_record(pmid="p2", year=2001, pub_types=frozenset()),
            make_record(pmid="p3", year=2002, languages=("ger",)),
        ]
        dm = build_design_matrix(records, EncodingConfig(tier="complete"))
        n_years, n_pub_types = 3, 2  # {Journal Article, Review}
        expected = (
            1 + len(NUMERIC_COLUMNS) + len(ICITE_COLUMNS) + (n_years - 1) + n_pub_types
        )
        assert dm.p == expected
        assert "Year 2001" in dm.column_names
        assert "Year 2000" not in dm.column_names  # earliest year is the reference
        assert "Review" in dm.column_names

    def test_count_response_identity(self):
        dm = build_design_matrix(
            [make_record(citations=0)],
            EncodingConfig(response_kind="citation_count", tier="numeric"),
        )
        assert dm.y.tolist() == [0.0]

    def test_weighted_response_is_arsinh_sjr(self):
        dm = build_design_matrix(
            [make_record(sjr=3.0), make_record(pmid="p2", sjr=0.0)],
            EncodingConfig(response_kind="weighted_sjr", tier="numeric"),
        )
        np.testing.assert_allclose(dm.y, [math.asinh(3.0), 0.0])

    def test_missing_sjr_dropped_for_weighted_kept_for_counts(self):
        records = [make_record(pmid="p1"), make_record(pmid="p2", sjr=None)]
        dm_w = build_design_matrix(records, EncodingConfig(tier="numeric"))
        assert dm_w.n == 1
        dm_c = build_design_matrix(
            records, EncodingConfig(response_kind="citation_count", tier="numeric")
        )
        assert dm_c.n == 2

    def test_all_missing_sjr_is_config_error(self):
        with pytest.raises(ConfigError):
            build_design_matrix(
                [make_record(sjr=None)], EncodingConfig(tier="numeric")
            )

    def test_arsinh_transform_policy(self):
        record = make_record(n_references=30, ref_mean_age=8.0)
        dm = build_design_matrix([record], EncodingConfig(tier="numeric"))
        ref_col = dm.column_names.index("References")
        assert dm.x[0, ref_col] == pytest.approx(math.asinh(30.0))
        raw = build_design_matrix(
            [record], EncodingConfig(tier="numeric", raw_predictors=True)
        )
        assert raw.x[0, ref_col] == 30.0

    def test_scores_stay_raw(self):
        dm = build_design_matrix([make_record()], EncodingConfig(tier="numeric"))
        assert dm.x[0, dm.column_names.index("H Score")] == 0.4

    def test_dummy_coding(self):
        records = [
            make_record(pmid="p1", languages=("eng",), a_score=1.0, c_score=0, h_score=0),
            make_record(pmid="p2", languages=("eng", "fre")),
            make_record(pmid="p3", languages=("ger",)),
        ]
        dm = build_design_matrix(records, EncodingConfig(tier="icite"))
        lang2 = dm.x[:, dm.column_names.index("Language 2")]
        lang3 = dm.x[:, dm.column_names.index("Language 3")]
        # reference level has all indicators zero, others exactly one
        np.testing.assert_array_equal(lang2, [0, 1, 0])
        np.testing.assert_array_equal(lang3, [0, 0, 1])
        triangle = dm.x[
            :, [dm.column_names.index(f"Triangle {lbl}") for lbl in ("ACH", "C", "H", "Outside")]
        ]
        assert np.all(triangle.sum(axis=1) <= 1)
        assert triangle[0].sum() == 0  # region A is the reference

    def test_deterministic_encoding(self):
        records = [make_record(pmid=f"p{i}", year=2000 + i % 3) for i in range(20)]
        config = EncodingConfig(tier="complete")
        a = build_design_matrix(records, config)
        b = build_design_matrix(records, config)
        assert a.column_names == b.column_names
        assert a.x.tobytes() == b.x.tobytes()
        assert a.y.tobytes() == b.y.tobytes()

    def test_matrix_is_immutable(self):
        dm = build_design_matrix([make_record()], EncodingConfig(tier="numeric"))
        with pytest.raises(ValueError):
            dm.x[0, 0] = 2.0

    def test_invalid_record_names_pmid(self):
        bad = make_record(pmid="broken", citations=-1)
        with pytest.raises(ValidationError, match="broken"):
            build_design_matrix([bad], EncodingConfig(tier="numeric"))

    def test_empty_records_rejected(self):
        with pytest.raises(ValidationError):
            build_design_matrix([], EncodingConfig(tier="numeric"))


class TestSplitTrainTest:
    def test_eighty_twenty_single_year(self):
        records = [make_record(pmid=f"p{i}", year=2000) for i in range(10)]
        train, test = split_train_test(records, 0.8, seed=1)
        assert len(train) == 8 and len(test) == 2

    def test_fifty_fifty_per_year(self):
        records = [make_record(pmid=f"p{i}", year=2000 + (i % 2)) for i in range(14)]
        train, test = split_train_test(records, 0.5, seed=3)
        for year in (2000, 2001):
            n_train = sum(1 for r in train if r.year == year)
            n_year = sum(1 for r in records if r.year == year)
            assert n_train == math.ceil(0.5 * n_year)

    def test_single_record_goes_to_train(self):
        train, test = split_train_test([make_record()], 0.8, seed=0)
        assert len(train) == 1 and test == []

    def test_partition_and_determinism(self):
        rng = np.random.default_rng(5)
        records = [
            make_record(pmid=f"p{i}", year=int(rng.integers(1998, 2003)))
            for i in range(137)
        ]
        train1, test1 = split_train_test(records, 0.8, seed=42)
        train2, test2 = split_train_test(records, 0.8, seed=42)
        assert [r.pmid for r in train1] == [r.pmid for r in train2]
        assert [r.pmid for r in test1] == [r.pmid for r in test2]
        ids = sorted(r.pmid for r in train1) + sorted(r.pmid for r in test1)
        assert sorted(ids) == sorted(r.pmid for r in records)
        by_year: dict[int, int] = {}
        for r in records:
            by_year[r.year] = by_year.get(r.year, 0) + 1
        for year, n_year in by_year.items():
            got = sum(1 for r in train1 if r.year == year)
            assert got == math.ceil(0.8 * n_year)

    def test_different_seed_changes_partition(self):
        records = [make_record(pmid=f"p{i}", year=2000) for i in range(30)]
        a, _ = split_train_test(records, 0.8, seed=1)
        b, _ = split_train_test(records, 0.8, seed=2)
        assert [r.pmid for r in a] != [r.pmid for r in b]

    def test_bad_fraction_rejected(self):
        records = [make_record()]
        for fraction in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ConfigError):
                split_train_test(records, fraction, seed=0)
