import math

import numpy as np
import pytest

import lacp


def test_worked_example_quantile():
    scores = [2.0, math.sqrt(2) + 2, math.sqrt(3) + 3]
    assert lacp.quantile_index(3, 0.5) == 2
    assert lacp.calibrate(scores, 0.5) == scores[1]


def test_amplitude_and_generate():
    assert lacp.amplitude("cos", 0.0) == pytest.approx(2.1)
    assert lacp.amplitude("inverse", 1.0) == pytest.approx(0.1 + 2 / 1.1)
    d = lacp.generate("linear", n=200, seed=3)
    assert d["x"].shape == (200, 3)
    assert d["y"].shape == (200,)
    again = lacp.generate("linear", n=200, seed=3)
    assert np.array_equal(d["y"], again["y"])


def test_transform_roundtrip_and_codomain():
    net = lacp.Localizer.init(3, 7)
    assert net.layer_dims == [3, 100, 100, 100, 100, 100, 1]
    fam = lacp.TransformFamily("exp", net)
    x = [0.2, -0.4, 1.0]
    b = fam.forward(x, 2.5)
    assert fam.inverse(x, b) == pytest.approx(2.5, rel=1e-12)
    with pytest.raises(lacp.CodomainError):
        fam.inverse(x, -1.0)
    lo, hi = lacp.TransformFamily("fixed").interval([0.0], 1.0, 9.0)
    assert (lo, hi) == (-2.0, 4.0)


def test_fit_and_intervals():
    d = lacp.generate("cos", n=600, seed=1)
    model = lacp.fit(d["x"], d["y"], family="linear", seed=1, epochs=20)
    assert model.family == "linear"
    assert model.val_losses[0] >= min(model.val_losses)
    lo, hi = model.intervals(d["x"][:50], alpha=0.1)
    assert lo.shape == (50,)
    assert np.all(hi > lo)


def test_run_protocol_rows():
    d = lacp.generate("linear", n=300, seed=2)
    rows = lacp.run_protocol(d["x"], d["y"], ["linear"], alphas=[0.1], runs=2, epochs=3)
    assert len(rows) == 2 * 2
    assert {r["family"] for r in rows} == {"linear", "fixed"}
    assert all(r["error"] is None for r in rows)


def test_bad_family_raises():
    with pytest.raises(lacp.LacpError):
        lacp.TransformFamily("bogus")
