import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asynchy import (
    EquidistantAsync,
    EquidistantSync,
    ExplicitScheme,
    GridScheme,
    ObservationScheme,
    Oscillating,
    ParameterError,
    PoissonScheme,
    PoissonSyncScheme,
    SchemeSizeError,
    alternating_subsample,
    generate_scheme,
    load_scheme_text,
    max_overlap_count,
    mesh,
    overlap_pairs,
    parse_scheme,
    save_scheme_text,
)

from conftest import brute_force_pairs, random_scheme


def explicit(t1, t2, T):
    return ObservationScheme(np.asarray(t1, float), np.asarray(t2, float), T)


class TestGenerate:
    def test_equidistant_sync(self):
        s = generate_scheme(EquidistantSync(4), 1.0)
        np.testing.assert_array_equal(s.times1, [0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_array_equal(s.times2, s.times1)

    def test_equidistant_async(self):
        s = generate_scheme(EquidistantAsync(2, 1.0), 1.0)
        np.testing.assert_array_equal(s.times1, [0, 0.5, 1.0])
        np.testing.assert_array_equal(s.times2, [0, 0.25, 0.5, 0.75, 1.0])

    def test_oscillating_parity(self):
        even = generate_scheme(Oscillating(4), 1.0)
        odd = generate_scheme(Oscillating(5), 1.0)
        assert np.array_equal(even.times1, even.times2)
        assert len(odd.times2) - 1 == 2 * (len(odd.times1) - 1)

    def test_poisson_mean_gap(self):
        gaps = []
        for seed in range(50):
            s = generate_scheme(PoissonScheme(100, 1.0, 1.0), 1.0, seed)
            gaps.extend(np.diff(s.times1))
        gaps = np.asarray(gaps)
        se = gaps.std(ddof=1) / np.sqrt(len(gaps))
        assert abs(gaps.mean() - 0.01) < 3 * se

    def test_poisson_sync(self):
        s = generate_scheme(PoissonSyncScheme(50, 1.0), 1.0, 4)
        assert np.array_equal(s.times1, s.times2)

    def test_coverage(self):
        for spec in (EquidistantSync(3), EquidistantAsync(3, 0.7), Oscillating(7), PoissonScheme(20, 1, 2)):
            s = generate_scheme(spec, 1.0, 9)
            assert s.times1[-1] >= 1.0 and s.times2[-1] >= 1.0

    def test_size_guard(self):
        with pytest.raises(SchemeSizeError):
            generate_scheme(EquidistantAsync(250, 3.0), 1.0)

    def test_determinism(self):
        a = generate_scheme(PoissonScheme(100, 1, 1), 1.0, 5)
        b = generate_scheme(PoissonScheme(100, 1, 1), 1.0, 5)
        assert np.array_equal(a.times1, b.times1) and np.array_equal(a.times2, b.times2)

    def test_parse(self):
        assert parse_scheme("sync:8") == EquidistantSync(8)
        assert parse_scheme("async:100,0.5") == EquidistantAsync(100, 0.5)
        assert parse_scheme("poisson:10,1,2") == PoissonScheme(10, 1.0, 2.0)
        with pytest.raises(ParameterError):
            parse_scheme("nope:1")


class TestMesh:
    def test_uniform(self):
        assert mesh(generate_scheme(EquidistantSync(4), 1.0)) == 0.25

    def test_coarser_component_dominates(self):
        assert mesh(generate_scheme(EquidistantAsync(2, 1.0), 1.0)) == 0.5

    def test_truncated_gap(self):
        s = explicit([0, 0.5, 1.0], [0, 0.3, 0.8, 1.2], 1.0)
        # the last component-2 gap counts as 1.2^1 - 0.8 = 0.2 after the cut
        assert mesh(s) == 0.5

    def test_poisson_mesh_shrinks(self):
        wins = 0
        for seed in range(200):
            m1 = mesh(generate_scheme(PoissonScheme(1000, 1, 1), 1.0, seed))
            m2 = mesh(generate_scheme(PoissonScheme(4000, 1, 1), 1.0, seed + 10_000))
            wins += m2 < m1
        assert wins >= 0.95 * 200

    def test_grid_matches_materialized(self):
        # materialized gaps can differ from the step by an ulp (k*h rounding)
        for n, gamma in [(3, 0.0), (4, 1.0), (5, 0.3)]:
            g = EquidistantAsync(n, gamma).grid(1.0)
            assert mesh(g) == pytest.approx(mesh(g.materialize()), rel=1e-12)


class TestOverlapPairs:
    def test_example(self):
        s = explicit([0, 0.5, 1.0], [0, 0.3, 0.8, 1.2], 1.0)
        assert overlap_pairs(s).tolist() == [[1, 1], [1, 2], [2, 2]]

    def test_synchronous_diagonal(self):
        s = generate_scheme(EquidistantSync(10), 1.0)
        pairs = overlap_pairs(s)
        assert pairs.tolist() == [[i, i] for i in range(1, 11)]

    def test_touching_intervals_do_not_overlap(self):
        s = explicit([0, 0.5, 1.0], [0, 0.5, 1.0], 1.0)
        assert overlap_pairs(s).tolist() == [[1, 1], [2, 2]]

    def test_brute_force_equivalence_random(self, rng):
        for _ in range(300):
            s = random_scheme(rng, max_points=25)
            got = [tuple(p) for p in overlap_pairs(s).tolist()]
            assert got == brute_force_pairs(s.times1, s.times2, s.horizon)

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_brute_force_equivalence_hypothesis(self, data):
        T = 1.0
        t1 = data.draw(st.lists(st.floats(0.001, 1.4), min_size=1, max_size=40))
        t2 = data.draw(st.lists(st.floats(0.001, 1.4), min_size=1, max_size=40))
        t1 = np.unique(np.concatenate([[0.0], t1, [1.5]]))
        t2 = np.unique(np.concatenate([[0.0], t2, [1.5]]))
        s = ObservationScheme(t1, t2, T)
        got = [tuple(p) for p in overlap_pairs(s).tolist()]
        assert got == brute_force_pairs(t1, t2, T)

    def test_pair_validity_and_count_bound(self, rng):
        for _ in range(100):
            s = random_scheme(rng, max_points=60)
            pairs = overlap_pairs(s)
            t1, t2 = s.times1, s.times2
            for i, j in pairs.tolist():
                assert max(t1[i - 1], t2[j - 1]) < min(t1[i], t2[j])
                assert max(t1[i], t2[j]) <= s.horizon
            n1 = np.searchsorted(t1, s.horizon, "right") - 1
            n2 = np.searchsorted(t2, s.horizon, "right") - 1
            assert len(pairs) <= n1 + n2


class TestMaxOverlapCount:
    def test_sync(self):
        assert max_overlap_count(generate_scheme(EquidistantSync(10), 1.0)) == 1

    def test_async(self):
        assert max_overlap_count(generate_scheme(EquidistantAsync(2, 1.0), 1.0)) == 2

    def test_grid_matches_materialized(self):
        for n, gamma in [(2, 1.0), (3, 0.5), (5, 0.0), (4, 1.3)]:
            g = EquidistantAsync(n, gamma).grid(1.0)
            assert max_overlap_count(g) == max_overlap_count(g.materialize())

    def test_alternating_at_most_two(self, rng):
        for seed in range(30):
            s = generate_scheme(PoissonScheme(40, 1, 1.5), 1.0, seed)
            assert max_overlap_count(alternating_subsample(s)) <= 2


class TestAlternatingSubsample:
    def test_hand_trace(self):
        s = explicit([0, 1, 2, 3], [0, 0.5, 1.5, 2.5], 2.5)
        out = alternating_subsample(s)
        np.testing.assert_array_equal(out.times1, [0, 1, 2, 3])
        np.testing.assert_array_equal(out.times2, [0, 1.5, 2.5])
        assert not out.truncated

    def test_already_alternating_fixed_point(self):
        s = explicit([0, 1, 2, 3], [0, 1.5, 2.5, 3.5], 3.0)
        out = alternating_subsample(s)
        np.testing.assert_array_equal(out.times1, s.times1)
        np.testing.assert_array_equal(out.times2, [0, 1.5, 2.5, 3.5])

    def test_truncation_flagged(self):
        s = explicit([0, 0.2, 0.9, 1.1], [0, 0.5, 1.2], 1.0)
        out = alternating_subsample(s)
        # component 1 runs out after 1.1 while component 2 still needs a time
        assert out.truncated or (out.times1[-1] >= 1.0 and out.times2[-1] >= 1.0)

    def test_properties(self, rng):
        for seed in range(40):
            s = generate_scheme(PoissonScheme(30, 1, 2), 1.0, seed)
            out = alternating_subsample(s)
            assert set(out.times1) <= set(s.times1)
            assert set(out.times2) <= set(s.times2)
            # strict alternation
            merged = sorted(
                [(t, 1) for t in out.times1[1:]] + [(t, 2) for t in out.times2[1:]]
            )
            comps = [c for _, c in merged]
            assert all(a != b for a, b in zip(comps, comps[1:]))
            assert max_overlap_count(out) <= 2


class TestGridScheme:
    def test_materialize_equivalence(self):
        g = EquidistantAsync(4, 0.5).grid(1.0)
        m = g.materialize()
        np.testing.assert_array_equal(m.times1, np.arange(g.count1 + 1) * g.step1)
        np.testing.assert_array_equal(m.times2, np.arange(g.count2 + 1) * g.step2)

    def test_materialize_guard(self):
        g = EquidistantAsync(2000, 2.0).grid(1.0)
        assert g.count2 == 8_000_000_000
        with pytest.raises(SchemeSizeError):
            g.materialize()

    def test_validation(self):
        with pytest.raises(ParameterError):
            GridScheme(0.5, 1, 0.5, 1, 1.0)


class TestTextFormat:
    def test_round_trip(self, rng):
        s = random_scheme(rng, max_points=15)
        buf = io.StringIO()
        save_scheme_text(s, buf)
        buf.seek(0)
        loaded = load_scheme_text(buf, horizon=s.horizon)
        np.testing.assert_array_equal(loaded.times1, s.times1)
        np.testing.assert_array_equal(loaded.times2, s.times2)

    def test_explicit_spec_roundtrip(self, tmp_path, rng):
        s = random_scheme(rng, max_points=10)
        p = tmp_path / "scheme.txt"
        save_scheme_text(s, str(p))
        spec = parse_scheme(f"explicit:{p}")
        assert isinstance(spec, ExplicitScheme)
        out = generate_scheme(spec, s.horizon)
        np.testing.assert_array_equal(out.times1, s.times1)


def test_overlap_pairs_on_grid_scheme():
    g = EquidistantAsync(2, 1.0).grid(1.0)
    assert np.array_equal(overlap_pairs(g), overlap_pairs(g.materialize()))
