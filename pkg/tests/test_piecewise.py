import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwrates.piecewise import (
    BasisPiece, Const, Dataset, PiecewiseSmoothFunction, Region, SmoothComponent, TargetError,
    dump_target, equispaced_dataset, eval_piecewise, gaussian_noise, horizon_indicator, load_target,
    make_rng, parse_expr, preset_experiment_target, region_member, resolve_target, sample_dataset,
    step_target_1d, target_from_dict, target_to_dict,
)

unit_points = st.lists(st.floats(0, 1), min_size=2, max_size=2)


@pytest.fixture(scope="module")
def preset():
    return preset_experiment_target()


def r1_piece():
    return BasisPiece(SmoothComponent.parse("- 0.75 * 0.6 x1"), axis=2, sign=1)


def zero_piece(sign=1, shift=0.0, axis=1):
    return BasisPiece(SmoothComponent(Const(shift)), axis=axis, sign=sign)


class TestExpressions:
    def test_prefix_parse_and_eval(self):
        e = parse_expr("+ 0.2 + ^ x1 2 * 0.1 x2")
        assert e(np.array([[1.0, 1.0]]))[0] == pytest.approx(1.3)

    def test_abs_and_power(self):
        e = parse_expr("^ abs - x1 2 1.5")
        assert e(np.array([[1.0]]))[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("bad", ["", "+ 1", "x0", "foo 1 2", "1 2"])
    def test_malformed(self, bad):
        with pytest.raises(TargetError):
            parse_expr(bad)


class TestHorizon:
    def test_inside(self):
        assert horizon_indicator(r1_piece(), np.array([1.0, 1.0])) == 1

    def test_outside(self):
        assert horizon_indicator(r1_piece(), np.array([0.0, 0.0])) == 0

    @pytest.mark.parametrize("x", [[0.0, 0.3], [0.0, 0.0], [0.9, 0.0]])
    def test_boundary_counts_inside(self, x):
        p = BasisPiece(SmoothComponent(Const(0.0)), axis=1, sign=1)
        assert horizon_indicator(p, np.array(x)) == 1

    def test_dimension_mismatch(self):
        with pytest.raises(TargetError):
            horizon_indicator(r1_piece(), np.array([0.5]))

    @settings(max_examples=200, deadline=None)
    @given(unit_points)
    def test_values_are_exactly_binary(self, x):
        v = horizon_indicator(r1_piece(), np.array(x))
        assert v in (0, 1) and isinstance(v, int)


class TestRegion:
    def test_single_piece_passthrough(self):
        assert region_member(Region((r1_piece(),)), np.array([1.0, 1.0])) == 1

    def test_contradictory_pieces(self):
        # x >= 0.5 and x <= 0 cannot both hold
        up = zero_piece(sign=1, shift=0.5)
        down = zero_piece(sign=-1, shift=0.0)
        r = Region((up, down))
        assert region_member(r, np.array([0.25])) == 0

    def test_both_satisfied(self):
        r = Region((zero_piece(sign=1, shift=0.0), zero_piece(sign=-1, shift=0.5)))
        assert region_member(r, np.array([0.25])) == 1

    def test_empty_pieces_rejected(self):
        with pytest.raises(TargetError):
            Region(())

    @settings(max_examples=100, deadline=None)
    @given(unit_points, st.floats(0, 1), st.sampled_from([1, -1]))
    def test_adding_a_piece_never_turns_zero_into_one(self, x, shift, sign):
        base = Region((r1_piece(),))
        more = Region((r1_piece(), zero_piece(sign=sign, shift=shift, axis=2)))
        x = np.array(x)
        assert region_member(more, x) <= region_member(base, x)


class TestEvaluation:
    def test_preset_corner_values(self, preset):
        assert eval_piecewise(preset, np.array([1.0, 1.0])) == pytest.approx(1.3, abs=1e-12)
        assert eval_piecewise(preset, np.array([0.0, 0.0])) == pytest.approx(0.97, abs=1e-12)

    def test_zero_function(self):
        whole = Region((zero_piece(),))
        f = PiecewiseSmoothFunction(((SmoothComponent(Const(0.0)), whole),), dim=1)
        assert eval_piecewise(f, np.array([0.3])) == 0.0

    def test_preset_shape(self, preset):
        assert preset.M == 2 and preset.dim == 2

    def test_preset_partition_on_lattice(self, preset):
        g = np.linspace(0, 1, 101)
        pts = np.array(np.meshgrid(g, g)).reshape(2, -1).T
        total = sum(region_member(r, pts) for _, r in preset.terms)
        assert np.all(total == 1)

    @settings(max_examples=200, deadline=None)
    @given(unit_points)
    def test_preset_partition_anywhere(self, x):
        f = preset_experiment_target()
        assert sum(region_member(r, np.array(x)) for _, r in f.terms) == 1

    def test_dimension_mismatch(self, preset):
        with pytest.raises(TargetError):
            eval_piecewise(preset, np.zeros((3, 3)))

    def test_invalid_construction(self):
        with pytest.raises(TargetError):
            PiecewiseSmoothFunction(((SmoothComponent(parse_expr("x3")), Region((zero_piece(),))),), dim=2)
        with pytest.raises(TargetError):
            SmoothComponent(Const(1.0), beta=0)
        with pytest.raises(TargetError):
            BasisPiece(SmoothComponent(Const(0.0)), axis=0)


class TestSampling:
    def test_noiseless(self, preset):
        d = sample_dataset(preset, 200, 0.0, seed=3)
        assert np.array_equal(d.ys, eval_piecewise(preset, d.xs))

    def test_same_seed_identical(self, preset):
        a = sample_dataset(preset, 100, 0.5, seed=11)
        b = sample_dataset(preset, 100, 0.5, seed=11)
        assert a.xs.tobytes() == b.xs.tobytes() and a.ys.tobytes() == b.ys.tobytes()

    def test_paper_setup(self, preset):
        d = sample_dataset(preset, 100, 0.5, seed=0)
        assert d.n == 100 and d.dim == 2 and d.sigma == 0.5
        assert np.all((d.xs >= 0) & (d.xs <= 1))

    def test_negative_sigma(self, preset):
        with pytest.raises(TargetError):
            sample_dataset(preset, 10, -0.1, seed=0)

    def test_noise_is_centered(self, preset):
        n, sigma = 100_000, 0.5
        d = sample_dataset(preset, n, sigma, seed=5)
        resid = d.ys - eval_piecewise(preset, d.xs)
        assert abs(resid.mean()) <= 4 * sigma / math.sqrt(n)
        assert resid.std() == pytest.approx(sigma, rel=0.02)

    def test_gaussian_noise_odd_length(self):
        z = gaussian_noise(7, make_rng(0))
        assert z.shape == (7,) and np.all(np.isfinite(z))

    def test_equispaced_design(self):
        d = equispaced_dataset(step_target_1d(), 10, 0.0, seed=0)
        assert np.allclose(d.xs[:, 0], np.arange(1, 11) / 10)
        assert np.array_equal(d.ys, (d.xs[:, 0] >= 0.5).astype(float))

    def test_dataset_validation(self):
        with pytest.raises(TargetError):
            Dataset(np.array([[0.5], [2.0]]), np.zeros(2), 0.1)
        with pytest.raises(TargetError):
            Dataset(np.zeros((3, 1)), np.zeros(2), 0.1)
        d = Dataset(np.array([0.1, 0.2]), np.array([1.0, 2.0]), 0.1)
        assert d.xs.shape == (2, 1)
        with pytest.raises(ValueError):
            d.ys[0] = 5.0


class TestSerialisation:
    def test_round_trip(self, preset, tmp_path):
        path = tmp_path / "t.json"
        dump_target(preset, path)
        again = load_target(path)
        assert again == preset
        assert target_from_dict(json.loads(json.dumps(target_to_dict(preset)))) == preset

    def test_resolve(self, tmp_path):
        assert resolve_target("paper-2d") == preset_experiment_target()
        assert resolve_target("step-1d").dim == 1
        with pytest.raises(TargetError):
            resolve_target(str(tmp_path / "missing.json"))
