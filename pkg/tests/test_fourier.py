import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_difference, rel_err
from fouriermask.fourier import (
    GLOBAL,
    PER_PIXEL,
    CoefficientField,
    MaskRaster,
    evaluate,
    fourier_features,
    fourier_mapping,
    make_grid,
    pre_activation,
    sigmoid,
    synthesis_gradient,
    synthesize_mask,
)
from fouriermask.lattice import build_lattice


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


class TestGrid:
    def test_s1(self):
        g = make_grid(2, 2, 1)
        assert g.coords.tolist() == [[0, 0], [0, 0.5], [0.5, 0], [0.5, 0.5]]
        assert g.p == 4 and g.step == 1.0

    def test_s2_step_quarter(self):
        g = make_grid(2, 2, 2)
        assert g.p == 16
        assert g.coords[0].tolist() == [0, 0]
        assert np.unique(g.coords[:, 0]).tolist() == [0, 0.25, 0.5, 0.75]
        assert g.coords[1].tolist() == [0, 0.25]

    def test_table_ladder(self):
        assert (make_grid(28, 28, 2).rows, make_grid(28, 28, 2).cols) == (56, 56)
        assert make_grid(28, 28, 3).p == 112 * 112

    def test_range_and_order(self):
        g = make_grid(3, 5, 2)
        assert g.coords.min() >= 0 and g.coords.max() < 1
        r = 2 * g.cols + 7
        assert g.coords[r].tolist() == [2 / g.rows, 7 / g.cols]

    def test_rejections(self):
        with pytest.raises(ValueError):
            make_grid(0, 3)
        with pytest.raises(ValueError):
            make_grid(3, 3, 0)
        with pytest.raises(ValueError):
            make_grid(1024, 1024, 5)  # 16384^2 > 2^26


class TestMapping:
    def test_origin(self):
        lat = build_lattice(3)
        row = fourier_mapping(np.zeros((1, 2)), lat)[0]
        assert (row[: lat.c] == 1).all() and (row[lat.c :] == 0).all()

    def test_quarter_turn(self):
        lat = build_lattice(1)
        k = lat.index_of(0, 1)
        row = fourier_mapping(np.array([[0.0, 0.25]]), lat)[0]
        assert row[k] == pytest.approx(0.0, abs=1e-15)
        assert row[lat.c + k] == pytest.approx(1.0, abs=1e-15)

    def test_matches_direct_formula(self, rng):
        lat = build_lattice(3)
        x = rng.random((7, 2))
        m = fourier_mapping(x, lat)
        theta = 2 * np.pi * x @ lat.entries.T
        assert np.allclose(m, np.concatenate([np.cos(theta), np.sin(theta)], axis=1), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(
        st.floats(0, 1, exclude_max=True),
        st.floats(0, 1, exclude_max=True),
        st.integers(-3, 3),
        st.integers(-3, 3),
    )
    def test_periodic(self, a, b, du, dv):
        lat = build_lattice(4)
        base = fourier_mapping(np.array([[a, b]]), lat)
        shifted = fourier_mapping(np.array([[a + du, b + dv]]), lat)
        assert np.abs(base - shifted).max() < 1e-12


class TestFeaturesAndSynthesis:
    def test_ones_and_zeros(self, rng):
        lat = build_lattice(2)
        m = fourier_mapping(make_grid(3, 3), lat)
        ones = CoefficientField(GLOBAL, 2, np.ones(2 * lat.c))
        zeros = CoefficientField(GLOBAL, 2, np.zeros(2 * lat.c))
        assert np.array_equal(fourier_features(m, ones), m)
        assert (fourier_features(m, zeros) == 0).all()

    def test_dc_only_broadcast(self):
        lat = build_lattice(2)
        values = np.zeros(2 * lat.c)
        values[0] = 2.0
        feats = fourier_features(fourier_mapping(make_grid(4, 5), lat), CoefficientField(GLOBAL, 2, values))
        assert (feats == values).all()

    def test_per_pixel_size_mismatch(self):
        lat = build_lattice(1)
        W = CoefficientField(PER_PIXEL, 1, np.ones((2, 2, 2 * lat.c)))
        with pytest.raises(ValueError):
            fourier_features(fourier_mapping(make_grid(3, 3), lat), W)

    def test_zero_features_give_half(self):
        r = synthesize_mask(np.zeros((6, 4)), 2, 3)
        assert (r.values == 0.5).all()

    @pytest.mark.parametrize("a", [-3.0, 0.7, 5.0])
    def test_dc_constant(self, a):
        lat = build_lattice(2)
        values = np.zeros(2 * lat.c)
        values[0] = a
        r = evaluate(make_grid(4, 4), CoefficientField(GLOBAL, 2, values))
        assert np.allclose(r.values, sig(a), atol=1e-15)

    def test_single_cosine_column(self):
        lat = build_lattice(1)
        values = np.zeros(2 * lat.c)
        values[lat.index_of(0, 1)] = 3.0
        r = evaluate(make_grid(4, 4), CoefficientField(GLOBAL, 1, values)).values
        expected = [sig(3.0), 0.5, sig(-3.0), 0.5]  # sigmoid(3 cos(2 pi j / 4))
        for i in range(4):
            assert np.allclose(r[i], expected, atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            synthesize_mask(np.zeros((5, 3)), 2, 2)

    def test_accumulation_is_left_to_right(self):
        feats = np.array([[1e16, 1.0, -1e16, 1.0]])
        # sequential: ((1e16 + 1) - 1e16) + 1 = 1 ; exact sum would be 2
        assert pre_activation(feats)[0] == 1.0

    def test_linearity(self, rng):
        lat = build_lattice(3)
        m = fourier_mapping(make_grid(5, 6), lat)
        W = CoefficientField(GLOBAL, 3, rng.normal(size=2 * lat.c))
        W2 = CoefficientField(GLOBAL, 3, 2 * W.values)
        assert np.array_equal(pre_activation(fourier_features(m, W2)), 2 * pre_activation(fourier_features(m, W)))

    def test_global_equals_per_pixel_copy(self, rng):
        lat = build_lattice(3)
        vec = rng.normal(size=2 * lat.c)
        g = evaluate(make_grid(7, 8), CoefficientField(GLOBAL, 3, vec))
        pp = evaluate(make_grid(7, 8), CoefficientField(PER_PIXEL, 3, np.tile(vec, (7, 8, 1))))
        assert np.abs(g.values - pp.values).max() < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_output_strictly_inside_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        lat = build_lattice(3)
        W = CoefficientField(GLOBAL, 3, rng.normal(scale=2.0, size=2 * lat.c))
        v = evaluate(make_grid(6, 6), W).values
        assert (v > 0).all() and (v < 1).all()

    def test_sigmoid_is_stable(self):
        with np.errstate(over="raise", invalid="raise"):
            out = sigmoid(np.array([-800.0, -40.0, 0.0, 40.0, 800.0]))
        assert out[2] == 0.5
        assert np.all(np.diff(out) >= 0)
        assert out[0] == np.nextafter(0.0, 1.0) and out[-1] == np.nextafter(1.0, 0.0)
        assert out[1] == pytest.approx(np.exp(-40.0), rel=1e-12)


class TestSynthesisGradient:
    def test_zero_upstream(self, rng):
        lat = build_lattice(2)
        W = CoefficientField(GLOBAL, 2, rng.normal(size=2 * lat.c))
        assert (synthesis_gradient(make_grid(4, 4), lat, W, np.zeros(16)) == 0).all()

    def test_single_pixel_dc(self):
        lat = build_lattice(0)
        a, g = 0.8, 1.7
        W = CoefficientField(GLOBAL, 0, np.array([a, 0.0]))
        grad = synthesis_gradient(make_grid(1, 1), lat, W, np.array([g]))
        assert grad[0] == pytest.approx(g * sig(a) * (1 - sig(a)), rel=1e-14)
        assert grad[1] == 0.0  # sine of DC is identically zero

    @pytest.mark.parametrize("seed", range(20))
    @pytest.mark.parametrize("mode", [GLOBAL, PER_PIXEL])
    def test_matches_finite_differences(self, seed, mode):
        rng = np.random.default_rng(seed)
        h, w = rng.integers(2, 9, size=2)
        f = int(rng.integers(0, 4))
        lat = build_lattice(f)
        grid = make_grid(int(h), int(w))
        shape = (2 * lat.c,) if mode == GLOBAL else (h, w, 2 * lat.c)
        values = rng.normal(scale=0.5, size=shape)
        upstream = rng.normal(size=h * w)

        def loss(v):
            y = evaluate(grid, CoefficientField(mode, f, v)).values.reshape(-1)
            return float(upstream @ y)

        ana = synthesis_gradient(grid, lat, CoefficientField(mode, f, values), upstream)
        assert rel_err(ana, central_difference(loss, values)) < 1e-4


class TestSerialization:
    def test_coefficient_json(self, rng):
        lat = build_lattice(2)
        for W in (
            CoefficientField(GLOBAL, 2, rng.normal(size=2 * lat.c), h=5, w=6),
            CoefficientField(PER_PIXEL, 2, rng.normal(size=(3, 4, 2 * lat.c))),
        ):
            data = json.loads(W.to_json())
            assert set(data) == {"mode", "f", "h", "w", "values"}
            back = CoefficientField.from_dict(data)
            assert back.mode == W.mode and (back.h, back.w) == (W.h, W.w)
            assert np.array_equal(back.values, W.values)

    def test_bad_shapes(self):
        with pytest.raises(ValueError):
            CoefficientField(GLOBAL, 1, np.zeros(9))
        with pytest.raises(ValueError):
            CoefficientField("sparse", 1, np.zeros(10))

    def test_raster_validation(self):
        with pytest.raises(ValueError):
            MaskRaster(np.array([[1.2]]))
        with pytest.raises(ValueError):
            MaskRaster(np.zeros((0, 3)))
        r = MaskRaster(np.array([[0.2, 0.5, 0.9]]))
        assert r.binarize().values.tolist() == [[0, 1, 1]]
