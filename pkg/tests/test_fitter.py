import numpy as np
import pytest

from fouriermask import fitter
from fouriermask.codec import reconstruct
from fouriermask.fitter import FitConfig, FitDivergedError, FitResult, fit_mask, objective, predict
from fouriermask.fourier import GLOBAL, PER_PIXEL, CoefficientField, fourier_mapping, make_grid, sigmoid
from fouriermask.lattice import build_lattice
from fouriermask.siren import siren_forward
from fouriermask.synthetic import centered_disk
from fouriermask.upsample import scaled_features, super_resolve

SMALL_MLP = (16, 16)


def test_config_validation():
    for bad in (dict(steps=0), dict(learning_rate=0.0), dict(mode="tiled"), dict(optimizer="sgd"), dict(f=-1)):
        with pytest.raises(ValueError):
            FitConfig(**bad)


def test_uniform_ones_dc_grows():
    # Adam moves a lone coefficient by at most about lr per step and slows as the
    # gradient vanishes; sigmoid(z) >= 0.999 needs z >= 6.9, out of reach at the
    # default lr of 1e-2 within 200 steps
    result = fit_mask(np.ones((8, 8)), FitConfig(f=0, steps=200, learning_rate=0.2))
    assert result.W.values[0] > 0
    assert result.final_iou >= 0.999
    assert len(result.loss_history) == 200


def test_rejects_soft_target():
    with pytest.raises(ValueError):
        fit_mask(np.full((4, 4), 0.3), FitConfig(f=0, steps=1))


def test_nyquist_guard():
    with pytest.raises(ValueError):
        fit_mask(centered_disk(8, 3), FitConfig(f=4, steps=1))


def test_short_disk_fit_improves():
    target = centered_disk(16, 5)
    result = fit_mask(target, FitConfig(f=6, steps=150))
    losses = [ly for _, ly, _ in result.loss_history]
    # zero coefficients give y = 0.5 everywhere
    area = target.sum()
    assert losses[0] == pytest.approx(1 - 0.5 * area / (area + 0.5 * (target.size - area)), abs=1e-12)
    assert losses[-1] < 0.1
    assert result.final_iou > 0.9


def test_history_bounds_and_running_min():
    result = fit_mask(centered_disk(16, 5), FitConfig(f=5, steps=80, use_mlp=True, hidden_dims=SMALL_MLP))
    hist = np.array([(ly, lyp) for _, ly, lyp in result.loss_history])
    assert np.all((hist >= 0) & (hist <= 1))
    best = np.minimum.accumulate(hist.sum(axis=1))
    assert np.all(np.diff(best) <= 0)
    assert best[-1] < best[0]


def test_deterministic():
    config = FitConfig(f=4, steps=40, use_mlp=True, hidden_dims=SMALL_MLP, seed=3)
    a = fit_mask(centered_disk(12, 4), config)
    b = fit_mask(centered_disk(12, 4), config)
    np.testing.assert_array_equal(a.W.values, b.W.values)
    for x, y in zip(a.mlp.arrays(), b.mlp.arrays()):
        np.testing.assert_array_equal(x, y)
    assert a.loss_history == b.loss_history
    assert a.final_iou == b.final_iou


def test_divergence_guard(monkeypatch):
    def broken(mapping, W, mlp, target):
        return float("nan"), None, np.zeros_like(W.values), None

    monkeypatch.setattr(fitter, "objective", broken)
    with pytest.raises(FitDivergedError):
        fit_mask(centered_disk(8, 3), FitConfig(f=1, steps=5))


@pytest.mark.parametrize("use_mlp", [False, True])
def test_first_order_decrease(use_mlp):
    target = centered_disk(10, 3)
    lattice = build_lattice(3)
    mapping = fourier_mapping(make_grid(10, 10), lattice)
    rng = np.random.default_rng(11)
    mlp = None
    if use_mlp:
        mlp = fitter.init_siren(lattice, (8, 8), seed=1)
    lr = 1e-6
    for _ in range(5):
        W = CoefficientField(GLOBAL, 3, rng.normal(scale=0.8, size=2 * lattice.c))
        ly, lyp, gw, gm = objective(mapping, W, mlp, target)
        before = ly + (lyp or 0.0)
        grads = [gw] + (gm.arrays() if gm is not None else [])
        sq = sum(float(np.sum(g * g)) for g in grads)
        W2 = CoefficientField(GLOBAL, 3, W.values - lr * gw)
        mlp2 = None
        if mlp is not None:
            mlp2 = mlp.copy()
            for p, g in zip(mlp2.arrays(), gm.arrays()):
                p -= lr * g
        ly2, lyp2, _, _ = objective(mapping, W2, mlp2, target)
        change = ly2 + (lyp2 or 0.0) - before
        assert change == pytest.approx(-lr * sq, rel=1e-3)


def test_per_pixel_mode_fits():
    result = fit_mask(centered_disk(8, 3), FitConfig(mode=PER_PIXEL, f=1, steps=100))
    assert result.W.mode == PER_PIXEL
    assert result.W.values.shape == (8, 8, 2 * build_lattice(1).c)
    assert result.loss_history[-1][1] < result.loss_history[0][1]


class TestPredict:
    def test_without_mlp_is_reconstruct(self):
        result = fit_mask(centered_disk(12, 4), FitConfig(f=5, steps=30))
        for s in (1, 2):
            np.testing.assert_array_equal(predict(result, s).values, reconstruct(result.W, 12, 12, s).values)

    def test_mean_of_branches(self):
        result = fit_mask(centered_disk(12, 4), FitConfig(f=4, steps=20, use_mlp=True, hidden_dims=SMALL_MLP))
        y = super_resolve(result.W, 12, 12, 2).values
        y_prime = siren_forward(result.mlp, scaled_features(result.W, 12, 12, 2)).reshape(24, 24)
        np.testing.assert_allclose(predict(result, 2).values, (y + y_prime) / 2, rtol=0, atol=1e-15)

    def test_equal_branches(self):
        # an MLP whose output is forced to equal y leaves the prediction unchanged
        lattice = build_lattice(1)
        W = CoefficientField(GLOBAL, 1, np.linspace(-1, 1, 2 * lattice.c), h=4, w=4)
        mlp = fitter.init_siren(lattice, (3,), seed=0)
        mlp.weights[-1][:] = 0.0
        mlp.biases[-1][:] = 0.0
        W0 = CoefficientField(GLOBAL, 1, np.zeros(2 * lattice.c), h=4, w=4)
        result = FitResult(W0, mlp, [], 1.0)
        np.testing.assert_allclose(predict(result, 1).values, 0.5)
        assert np.all(sigmoid(np.zeros(1)) == 0.5)
        assert predict(FitResult(W, None, [], 1.0), 1).shape == (4, 4)

    def test_super_resolved_contains_base(self):
        result = fit_mask(centered_disk(28, 9), FitConfig(f=12, steps=300))
        base = predict(result, 1).binarize().values
        fine = predict(result, 2)
        assert fine.shape == (56, 56)
        np.testing.assert_array_equal(fine.binarize().values[::2, ::2], base)


def test_save_load_roundtrip(tmp_path):
    result = fit_mask(centered_disk(10, 3), FitConfig(f=3, steps=15, use_mlp=True, hidden_dims=(8,)))
    result.save(tmp_path / "run")
    assert (tmp_path / "run" / "history.csv").read_text().splitlines()[0] == "step,loss_y,loss_yprime"
    back = FitResult.load(tmp_path / "run")
    np.testing.assert_array_equal(back.W.values, result.W.values)
    for x, y in zip(back.mlp.arrays(), result.mlp.arrays()):
        np.testing.assert_array_equal(x, y)
    assert back.loss_history == result.loss_history
    assert back.final_iou == result.final_iou


def test_history_csv_without_mlp():
    result = fit_mask(np.ones((4, 4)), FitConfig(f=0, steps=2))
    lines = result.history_csv().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("0,") and lines[1].endswith(",")


@pytest.mark.slow
def test_mlp_branch_not_worse_on_average():
    target = centered_disk(28, 9)
    steps = 100
    y_only = np.mean([fit_mask(target, FitConfig(f=12, steps=steps, seed=s)).final_iou for s in range(5)])
    joint = np.mean([fit_mask(target, FitConfig(f=12, steps=steps, seed=s, use_mlp=True)).final_iou for s in range(5)])
    assert joint >= y_only, (joint, y_only)
