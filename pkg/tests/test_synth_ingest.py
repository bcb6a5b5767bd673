import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extreme_effect.core import SourceDistributions, is_feasible, reconstruct
from extreme_effect.errors import (
    DegenerateBinsError,
    DuplicateAssignmentError,
    EmptyDatasetError,
    EmptyVariantError,
    InputError,
    ParseError,
    UnknownHeaderError,
)
from extreme_effect.ingest import (
    BinningConfig,
    ObservationRecord,
    empirical_distributions,
    load_csv,
    write_csv,
)
from extreme_effect.solver import solve_extreme
from extreme_effect.synth import PlantSpec, plant, planted_source, sample_observations


def recs(groups):
    out, uid = [], 0
    for v, values in groups.items():
        for x in values:
            out.append(ObservationRecord(f"u{uid}", v, float(x)))
            uid += 1
    return out


class TestPlant:
    def test_identity_basis(self):
        src = planted_source([[0.5, 0.5], [0.25, 0.75]], np.eye(2))
        assert np.allclose(src.probs, [[0.5, 0.5], [0.25, 0.75]])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 40), st.integers(0, 10**6))
    def test_planted_feasible(self, K, extra, seed):
        inst = plant(PlantSpec(K, K + extra, seed=seed))
        r = is_feasible(inst.P_star, inst.src)
        assert r["feasible"] and r["worst_slack"] >= -1e-12
        assert abs(inst.P_star.det) >= 0.05
        tv = 0.5 * np.abs(inst.f_star[:, None] - inst.f_star[None]).sum(-1)
        assert tv[np.triu_indices(K, 1)].min() >= 0.2

    def test_spec_validation(self):
        for kw in ({"K": 3, "N": 2}, {"K": 1, "N": 3}, {"K": 2, "N": 3, "min_det": 0},
                   {"K": 2, "N": 3, "basis_concentration": 0}):
            with pytest.raises(InputError):
                PlantSpec(**kw)

    def test_deterministic(self):
        a, b = plant(PlantSpec(3, 7, seed=11)), plant(PlantSpec(3, 7, seed=11))
        assert np.array_equal(a.src.probs, b.src.probs)

    @pytest.mark.parametrize("seed", range(4))
    def test_solve_reconstruct(self, seed):
        inst = plant(PlantSpec(3, 6 + seed, seed=seed))
        res = solve_extreme(inst.src)
        assert np.max(np.abs(reconstruct(res.decomposition) - inst.src.probs)) <= 1e-8


class TestSample:
    def test_one_each(self):
        src = SourceDistributions.from_rows([[0.5, 0.5], [0.25, 0.75]])
        r = sample_observations(src, 1, seed=0)
        assert [x.variant for x in r] == ["A", "B"]
        assert [x.unit_id for x in r] == ["u0", "u1"]

    def test_deterministic(self):
        src = SourceDistributions.from_rows([[0.5, 0.5], [0.25, 0.75]])
        assert sample_observations(src, 50, 3) == sample_observations(src, 50, 3)
        assert sample_observations(src, 50, 3) != sample_observations(src, 50, 4)

    def test_large_frequencies(self):
        src = SourceDistributions.from_rows([[0.5, 0.5], [0.25, 0.75]])
        r = sample_observations(src, 10**6, seed=1)
        er = empirical_distributions(r)
        assert np.max(np.abs(er.src.probs - src.probs)) <= 0.002

    def test_rejects_zero(self):
        with pytest.raises(InputError):
            sample_observations(SourceDistributions.from_rows([[0.5, 0.5], [0.2, 0.8]]), 0)


class TestLoadCsv:
    def test_roundtrip(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("unit_id,variant,value\nu1,A,1\nu2,B,2.5\nu3,A,0\n")
        r = load_csv(p)
        assert len(r) == 3 and [x.variant for x in r] == ["A", "B", "A"]
        q = tmp_path / "e.csv"
        write_csv(r, q)
        assert load_csv(q) == r

    def test_empty_body(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("unit_id,variant,value\n")
        with pytest.raises(EmptyDatasetError):
            load_csv(p)

    def test_bad_value_line(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("unit_id,variant,value\nu1,A,1\nu2,B,abc\n")
        with pytest.raises(ParseError) as exc:
            load_csv(p)
        assert exc.value.line == 3

    def test_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("id,arm,val\nu1,A,1\n")
        with pytest.raises(UnknownHeaderError):
            load_csv(p)

    @pytest.mark.parametrize("value", ["-1", "inf", "nan"])
    def test_bad_numbers(self, tmp_path, value):
        p = tmp_path / "d.csv"
        p.write_text(f"unit_id,variant,value\nu1,A,{value}\n")
        with pytest.raises(ParseError):
            load_csv(p)


class TestEmpirical:
    def test_hand_count(self):
        r = recs({"A": [1, 1, 3, 3], "B": [1, 3, 3, 3]})
        er = empirical_distributions(r, BinningConfig("none", 2, "fixed_width"))
        assert np.allclose(er.src.probs, [[0.5, 0.5], [0.25, 0.75]])
        assert er.means == {"A": 2.0, "B": 2.5}
        assert er.counts == {"A": 4, "B": 4}

    def test_degenerate(self):
        with pytest.raises(DegenerateBinsError):
            empirical_distributions(recs({"A": [2, 2], "B": [2, 2]}))

    def test_log1p(self):
        r = recs({"A": [0.0], "B": [math.e - 1]})
        er = empirical_distributions(r, BinningConfig("log1p", 2, "fixed_width"))
        assert np.allclose(er.edges, [0, 0.5, 1])
        assert np.allclose(er.src.probs, np.eye(2))

    def test_one_variant(self):
        with pytest.raises(EmptyVariantError):
            empirical_distributions(recs({"A": [1, 2, 3]}))

    def test_duplicate_unit(self):
        r = [ObservationRecord("u1", "A", 1.0), ObservationRecord("u1", "B", 2.0)]
        with pytest.raises(DuplicateAssignmentError):
            empirical_distributions(r)

    def test_empty_shared_bins(self):
        r = recs({"A": [0, 0, 10], "B": [0, 10, 10]})
        cfg = BinningConfig("none", 5, "fixed_width", drop_empty_shared_bins=False)
        assert empirical_distributions(r, cfg).src.N == 5
        assert empirical_distributions(r, BinningConfig("none", 5, "fixed_width")).src.N == 2

    def test_discrete_values_get_own_bins(self):
        r = recs({"A": [0, 1, 1, 2], "B": [0, 0, 1, 2]})
        er = empirical_distributions(r)
        assert er.src.N == 3
        assert np.allclose(er.src.probs, [[0.25, 0.5, 0.25], [0.5, 0.25, 0.25]])

    def test_control_reference(self):
        rng = np.random.default_rng(0)
        r = recs({"A": rng.lognormal(size=500), "B": rng.lognormal(1, size=500)})
        er = empirical_distributions(r, BinningConfig(n_bins=8, quantile_reference="control"))
        assert np.allclose(er.bin_counts[0], er.bin_counts[0][0], atol=2)

    def test_config_validation(self):
        with pytest.raises(InputError):
            BinningConfig(n_bins=1)
        with pytest.raises(InputError):
            BinningConfig(strategy="kmeans")

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=60),
           st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=60),
           st.sampled_from(["fixed_width", "quantile"]), st.sampled_from(["none", "log1p"]),
           st.integers(2, 16))
    def test_histograms_valid(self, a, b, strategy, transform, n_bins):
        if len(set(a + b)) < 2:
            return
        try:
            er = empirical_distributions(recs({"A": a, "B": b}), BinningConfig(transform, n_bins, strategy))
        except DegenerateBinsError:
            return
        P = er.src.probs
        assert P.min() >= 0 and np.allclose(P.sum(axis=1), 1, atol=1e-12)
        assert er.bin_counts.sum() == len(a) + len(b)
        assert abs(er.means["A"] - np.mean(a)) <= 1e-12 * max(1, abs(np.mean(a)))
        assert abs(er.means["B"] - np.mean(b)) <= 1e-12 * max(1, abs(np.mean(b)))
        assert np.all(np.diff(er.edges) > 0)
