import math

import numpy as np
import pytest

from asynchy import (
    AbsProductPower,
    Custom,
    CustomOneDim,
    EquidistantSync,
    JumpEvent,
    ObservationScheme,
    OneDimPower,
    ParameterError,
    PerturbedProductPower,
    PoissonScheme,
    Schedule,
    SemimartingaleSpec,
    SignedProductPower,
    generate_scheme,
    marginal_sum,
    normalized_marginal_sum,
    normalized_pair_sum,
    pair_sum,
    parse_functional,
    sample_path,
)
from asynchy.functionals import evaluate_pair_functional, pair_degrees
from asynchy.model import increments_on
from asynchy.schemes import request_times

from conftest import brute_force_pair_sum, path_through, random_scheme


def hand_scheme():
    return ObservationScheme(
        np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.3, 0.8, 1.2]), 1.0
    )


def hand_path(scheme):
    # X1 passes 0 -> 1 -> 3 on {0, .5, 1}; X2 passes 0 -> 2 -> 1 -> 1.5
    return path_through(
        scheme,
        [(0.0, 0.0), (0.5, 1.0), (1.0, 3.0), (1.2, 3.0)],
        [(0.0, 0.0), (0.3, 2.0), (0.8, 1.0), (1.2, 1.5)],
    )


class TestParse:
    def test_forms(self):
        assert parse_functional("hy") == SignedProductPower(1, 1)
        assert parse_functional("spp:2,2") == SignedProductPower(2, 2)
        assert parse_functional("app:1.5,0.5") == AbsProductPower(1.5, 0.5)
        assert parse_functional("pert:spp:1,1") == PerturbedProductPower(SignedProductPower(1, 1))
        assert parse_functional("pow:4") == OneDimPower(4, signed=True)
        assert parse_functional("abspow:1.5") == OneDimPower(1.5, signed=False)
        with pytest.raises(ParameterError):
            parse_functional("spp:1.5,1")
        with pytest.raises(ParameterError):
            parse_functional("what:1")

    def test_validation(self):
        with pytest.raises(ParameterError):
            SignedProductPower(-1, 0)
        with pytest.raises(ParameterError):
            OneDimPower(1.5, signed=True)

    def test_degrees(self):
        assert pair_degrees(SignedProductPower(2, 3)) == (2.0, 3.0)
        assert pair_degrees(PerturbedProductPower(AbsProductPower(0.5, 1.0))) == (0.5, 1.0)
        assert pair_degrees(Custom(lambda x, y: x)) is None


class TestPairSum:
    def test_hand_example(self):
        scheme = hand_scheme()
        path = hand_path(scheme)
        # increments: X1 -> 1, 2; X2 -> 2, -1, 0.5; pairs (1,1),(1,2),(2,2)
        assert pair_sum(SignedProductPower(1, 1), scheme, path) == pytest.approx(-1.0)

    def test_zero_functional(self):
        scheme = hand_scheme()
        path = hand_path(scheme)
        assert pair_sum(Custom(lambda x, y: 0.0), scheme, path) == 0.0

    def test_zero_exponent_is_neutral(self):
        scheme = hand_scheme()
        path = hand_path(scheme)
        # x**0 == 1 even at increments of 0, so f(x,y) = y over the pairs
        flat = path_through(scheme, [(0.0, 0.0), (1.2, 0.0)], [(0.0, 0.0), (0.3, 2.0), (0.8, 1.0), (1.2, 1.5)])
        v = pair_sum(SignedProductPower(0, 1), scheme, flat)
        assert v == pytest.approx(2.0 + (-1.0) + (-1.0))

    def test_synchronous_equals_classical(self):
        model = SemimartingaleSpec(corr=Schedule.constant(0.4), horizon=1.0)
        scheme = generate_scheme(EquidistantSync(64), 1.0)
        path = sample_path(model, request_times(scheme), seed=5)
        d1 = increments_on(path, scheme.times1, 1)
        d2 = increments_on(path, scheme.times2, 2)
        for f in (SignedProductPower(1, 1), SignedProductPower(2, 2), AbsProductPower(1.0, 0.5)):
            classical = math.fsum(evaluate_pair_functional(f, d1, d2).tolist())
            assert pair_sum(f, scheme, path) == classical

    def test_brute_force_random(self, rng):
        model = SemimartingaleSpec(corr=Schedule.constant(-0.2), horizon=1.0)
        for seed in range(25):
            scheme = random_scheme(rng, max_points=40)
            path = sample_path(model, request_times(scheme), seed=seed)
            icut = np.searchsorted(scheme.times1, 1.0, "right")
            jcut = np.searchsorted(scheme.times2, 1.0, "right")
            d1 = increments_on(path, scheme.times1[:icut], 1)
            d2 = increments_on(path, scheme.times2[:jcut], 2)
            got = pair_sum(AbsProductPower(1.0, 1.0), scheme, path)
            want = brute_force_pair_sum(lambda x, y: abs(x) * abs(y), scheme, d1, d2)
            assert got == pytest.approx(want, rel=1e-12)

    def test_bilinearity_exact(self):
        scheme = hand_scheme()
        path = hand_path(scheme)
        f = Custom(lambda x, y: x * y, vectorized=True)
        g = Custom(lambda x, y: x * x, vectorized=True)
        combo = Custom(lambda x, y: 2.0 * (x * y) + 0.5 * (x * x), vectorized=True)
        assert (
            pair_sum(combo, scheme, path)
            == 2.0 * pair_sum(f, scheme, path) + 0.5 * pair_sum(g, scheme, path)
        )

    def test_component_symmetry(self, rng):
        model = SemimartingaleSpec(corr=Schedule.constant(0.6), horizon=1.0)
        for seed in range(10):
            scheme = random_scheme(rng, max_points=30)
            path = sample_path(model, request_times(scheme), seed=seed)
            swapped_scheme = ObservationScheme(scheme.times2, scheme.times1, scheme.horizon)
            from asynchy import PathRecord

            swapped_path = PathRecord(path.times, path.values[:, ::-1], path.jumps)
            f = SignedProductPower(2, 1)
            fswap = SignedProductPower(1, 2)
            assert pair_sum(f, scheme, path) == pytest.approx(
                pair_sum(fswap, swapped_scheme, swapped_path), rel=1e-12
            )

    def test_positive_homogeneity_exact(self):
        from asynchy import PathRecord

        scheme = hand_scheme()
        path = hand_path(scheme)
        scaled = PathRecord(path.times, 2.0 * path.values, path.jumps)
        for p1, p2 in [(1, 1), (2, 2), (3, 1)]:
            f = SignedProductPower(p1, p2)
            assert pair_sum(f, scheme, scaled) == 2.0 ** (p1 + p2) * pair_sum(f, scheme, path)


class TestMarginalSum:
    def test_single_jump_square(self):
        model = SemimartingaleSpec(
            vol1=Schedule.constant(0.0),
            vol2=Schedule.constant(0.0),
            scheduled_jumps=(JumpEvent(0.4, (1.0, 2.0)),),
            horizon=1.0,
        )
        scheme = generate_scheme(EquidistantSync(10), 1.0)
        path = sample_path(model, request_times(scheme), seed=0)
        assert marginal_sum(OneDimPower(2), scheme, path, 2) == 4.0

    def test_telescoping(self):
        model = SemimartingaleSpec(corr=Schedule.constant(0.2), horizon=1.0)
        scheme = generate_scheme(PoissonScheme(50, 1, 1), 1.0, seed=3)
        path = sample_path(model, request_times(scheme), seed=4)
        icut = np.searchsorted(scheme.times1, 1.0, "right") - 1
        expected = path.values[path.index_of(scheme.times1[icut]), 0] - path.values[0, 0]
        assert marginal_sum(OneDimPower(1), scheme, path, 1) == pytest.approx(expected, abs=1e-12)

    def test_brownian_quadratic_variation(self):
        model = SemimartingaleSpec(horizon=1.0)
        scheme = generate_scheme(EquidistantSync(10_000), 1.0)
        path = sample_path(model, scheme.times1, seed=8)
        qv = marginal_sum(OneDimPower(2), scheme, path, 1)
        assert abs(qv - 1.0) < 0.05

    def test_custom(self):
        model = SemimartingaleSpec(horizon=1.0)
        scheme = generate_scheme(EquidistantSync(16), 1.0)
        path = sample_path(model, scheme.times1, seed=1)
        got = marginal_sum(CustomOneDim(math.sin), scheme, path, 1)
        d = increments_on(path, scheme.times1, 1)
        assert got == pytest.approx(math.fsum(np.sin(d).tolist()))


class TestNormalized:
    def test_p2_is_identity(self):
        scheme = hand_scheme()
        path = hand_path(scheme)
        f = SignedProductPower(1, 1)
        assert normalized_pair_sum(2.0, f, scheme, path, rate=123.0) == pair_sum(f, scheme, path)

    def test_scaling_arithmetic(self):
        scheme = hand_scheme()
        path = hand_path(scheme)
        f = SignedProductPower(2, 2)
        base = pair_sum(f, scheme, path)
        assert normalized_pair_sum(4.0, f, scheme, path, rate=100.0) == pytest.approx(100.0 * base)

    def test_rate_law_halving(self):
        # at p=4 the prefactor is linear in the rate
        scheme = hand_scheme()
        path = hand_path(scheme)
        g = OneDimPower(4)
        v_n = normalized_marginal_sum(4.0, g, scheme, path, 1, rate=50.0)
        v_2n = normalized_marginal_sum(4.0, g, scheme, path, 1, rate=100.0)
        assert v_2n == pytest.approx(2.0 * v_n)

    def test_validation(self):
        scheme = hand_scheme()
        path = hand_path(scheme)
        with pytest.raises(ParameterError):
            normalized_pair_sum(2.0, SignedProductPower(1, 1), scheme, path, rate=0.0)


class TestPerturbed:
    def test_definition(self, rng):
        x = rng.standard_normal(10)
        y = rng.standard_normal(10)
        f = PerturbedProductPower(SignedProductPower(1, 1))
        np.testing.assert_allclose(
            evaluate_pair_functional(f, x, y), (1 + np.hypot(x, y)) * x * y
        )

    def test_difference_shrinks_with_mesh(self):
        # the perturbation multiplier tends to 1, so the gap between the
        # perturbed and plain normalized sums vanishes as n grows
        model = SemimartingaleSpec(corr=Schedule.constant(0.5), horizon=1.0)
        f = SignedProductPower(1, 1)
        ft = PerturbedProductPower(f)
        med = []
        for n in (250, 1000, 4000):
            diffs = []
            for seed in range(40):
                scheme = generate_scheme(PoissonScheme(n, 1, 1), 1.0, seed=1000 + seed)
                path = sample_path(model, request_times(scheme), seed=seed)
                diffs.append(
                    abs(
                        normalized_pair_sum(2.0, ft, scheme, path, rate=n)
                        - normalized_pair_sum(2.0, f, scheme, path, rate=n)
                    )
                )
            med.append(np.median(diffs))
        assert med[0] > med[1] > med[2]


class TestEvaluationContracts:
    def test_missing_scheme_time_is_lookup_error(self):
        from asynchy import PathLookupError, PathRecord

        scheme = hand_scheme()
        times = np.array([0.0, 0.5, 1.0])  # lacks the component-2 times
        path = PathRecord(times, np.zeros((3, 2)), ())
        with pytest.raises(PathLookupError):
            pair_sum(SignedProductPower(1, 1), scheme, path)

    def test_times_beyond_horizon_not_required(self):
        # the pair with max(t_i, s_j) > T is cut, so the path never needs the
        # observation time past the horizon
        scheme = hand_scheme()
        full = hand_path(scheme)
        keep = full.times <= 1.0
        from asynchy import PathRecord

        trimmed = PathRecord(full.times[keep], full.values[keep], full.jumps)
        f = SignedProductPower(1, 1)
        assert pair_sum(f, scheme, trimmed) == pair_sum(f, scheme, full)

    def test_grid_scheme_accepted(self):
        from asynchy import EquidistantSync

        grid = EquidistantSync(4).grid(1.0)
        model = SemimartingaleSpec(horizon=1.0)
        path = sample_path(model, grid.materialize().times1, seed=2)
        assert pair_sum(SignedProductPower(1, 1), grid, path) == pair_sum(
            SignedProductPower(1, 1), grid.materialize(), path
        )
