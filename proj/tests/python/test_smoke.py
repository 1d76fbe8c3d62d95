import json
import os
import tempfile

import numpy as np
import pytest

import lawkit


def test_catalog_round_trip():
    names = lawkit.catalog()
    assert "neo_hookean" in names and "von_mises" in names
    for n in names:
        src = lawkit.catalog_source(n)
        assert lawkit.format_law(src) == src
        assert all(p["lo"] <= p["init"] <= p["hi"] for p in lawkit.law_params(src))


def test_bad_law_raises():
    with pytest.raises(ValueError):
        lawkit.law_params("elastic { return F")


def test_neo_hookean_matches_closed_form():
    mu, lam = 3e3, 7e3
    src = lawkit.catalog_source("neo_hookean")
    rng = np.random.default_rng(0)
    F = np.eye(3) + 0.2 * rng.standard_normal((3, 3))
    if np.linalg.det(F) < 0:
        F[:, 0] *= -1
    J = np.linalg.det(F)
    want = mu * (F @ F.T - np.eye(3)) + lam * np.log(J) * np.eye(3)
    got = lawkit.elastic(src, F, {"mu": mu, "lam": lam})
    assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * np.abs(want).max())
    # identity plasticity
    assert np.array_equal(lawkit.plastic(src, F), F)


def test_chamfer():
    a = np.array([[0.0, 0, 0], [1, 0, 0]])
    b = np.array([[0.0, 0, 0]])
    assert lawkit.chamfer(a, b) == pytest.approx(0.5)
    assert lawkit.chamfer(a, a) == 0.0


@pytest.fixture(scope="module")
def tiny():
    spec = {
        "name": "tiny",
        "geometry": {"shape": "cube", "center": [0.5, 0.17, 0.5], "extent": 0.1, "spacing": 0.025,
                     "velocity": [0.5, -2.0, 0.0], "seed": 3},
        "reference": {"elastic": "neo_hookean", "plastic": "identity_plastic",
                      "theta": [["mu", 5e3], ["lam", 5e3]]},
        "sim": {"dt": 4e-4, "frames": 8, "substeps_per_frame": 10},
        "cameras": [{"axis": "+Z", "width": 24, "height": 24}],
    }
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "tiny.spec.json")
        with open(p, "w") as f:
            json.dump(spec, f)
        yield lawkit.load_scene(p)


def test_simulate_reference_reproduces_ground_truth(tiny):
    assert tiny.frames == 8
    gt = tiny.ground_truth
    assert gt.shape == (9, tiny.particles, 3)
    src = lawkit.catalog_source("neo_hookean")
    pred = lawkit.simulate(src, tiny, {"mu": 5e3, "lam": 5e3})
    assert np.array_equal(pred, gt)
    longer = lawkit.simulate(src, tiny, frames=12)
    assert longer.shape[0] == 13


def test_optimize_and_discover(tiny):
    src = lawkit.catalog_source("neo_hookean")
    fit = lawkit.optimize(src, tiny, budget=2)
    assert fit["failure"] is None
    assert fit["fitness"] <= fit["loss_curve"][0]
    assert set(fit["theta"]) == {"mu", "lam"}

    r = lawkit.discover(tiny, seed=1, iterations=1, alternating=0, offspring=2, eval_budget=1, refit_budget=1)
    assert r["best_loss"][-1] <= r["best_loss"][0]
    assert lawkit.law_params(r["source"])
    again = lawkit.discover(tiny, seed=1, iterations=1, alternating=0, offspring=2, eval_budget=1, refit_budget=1)
    assert again == r
