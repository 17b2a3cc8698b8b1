import json
import math

import numpy as np
import pytest

import srkocl


def test_kernel_size_rule_spot_values():
    assert srkocl.kernel_size_rule(64) == 3
    assert srkocl.kernel_size_rule(512) == 5
    assert srkocl.kernel_size_rule(160) == 5


def test_pod_embed_matches_numpy_means():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(3, 5, 4))
    emb = srkocl.pod_embed(z)
    assert emb.shape == (8, 4)
    np.testing.assert_allclose(emb[:3], z.mean(axis=1), rtol=0, atol=1e-15)
    np.testing.assert_allclose(emb[3:], z.mean(axis=0), rtol=0, atol=1e-15)


def test_pod_loss_constant_offset():
    f = np.zeros((4, 4, 8))
    assert srkocl.pod_loss([f + 1.0], [f]) == pytest.approx(64.0)
    assert srkocl.pod_loss([f], [f]) == 0.0


def test_eca_forward_halves_under_zero_kernel():
    z = np.ones((2, 2, 3))
    out = srkocl.eca_forward(z, np.zeros(3))
    np.testing.assert_allclose(out, 0.5 * z)


def test_metrics_oracle():
    r = [[0.9, 0.0], [0.7, 0.8]]
    assert srkocl.acc(r) == pytest.approx(0.75)
    assert srkocl.fm(r) == pytest.approx(0.2)
    assert srkocl.la(r) == pytest.approx(0.85)
    assert srkocl.compute_metrics([[0.6]])["fm"] is None


def test_summarize_sample_std():
    s = srkocl.summarize([{"acc": 0.8, "fm": 0.1, "la": 0.9}, {"acc": 0.9, "fm": 0.2, "la": 0.9}])
    assert s["acc"]["mean"] == pytest.approx(0.85)
    assert s["acc"]["std"] == pytest.approx(math.sqrt(0.005))
    assert s["runs"] == 2


def test_synthetic_suite_shapes():
    tasks = srkocl.synthetic_suite(num_tasks=3, classes_per_task=2, samples_per_class=20, seed=1)
    assert len(tasks) == 3
    x, y = tasks[0]["train"]
    assert x.shape == (40, 8, 8, 3) and x.dtype == np.float32
    assert set(y.tolist()) == {0, 1}
    assert tasks[0]["test"][0].shape[0] == 10


def test_effective_config_round_trip():
    text = srkocl.effective_config("{}")
    assert srkocl.effective_config(text) == text
    assert json.loads(text)["train"]["batch_size"] == 10


def test_unknown_key_is_config_error():
    with pytest.raises(srkocl.ConfigError, match="train.bogus"):
        srkocl.effective_config('{"train": {"bogus": 1}}')


def test_run_experiment_and_report(tmp_path):
    cfg = {
        "benchmark": {"num_tasks": 2, "samples_per_class": 10},
        "model": {"nf": 4, "num_stages": 2},
        "train": {"precision": "f64"},
        "variants": ["SRKOCL"],
        "seeds": [0],
        "output_dir": str(tmp_path),
    }
    result = srkocl.run_experiment(json.dumps(cfg))
    assert len(result["runs"]) == 1
    assert len(result["runs"][0]["matrix"]) == 2
    assert (tmp_path / "runs" / "SRKOCL_seed0.json").exists()
    table = srkocl.read_report(str(tmp_path))
    assert "FM(↓)" in table and "SRKOCL" in table


def test_verify_detects_injected_fault():
    clean = {r["name"]: r for r in srkocl.verify(trials=2)}
    assert all(r["passed"] for r in clean.values())
    faulty = {r["name"]: r for r in srkocl.verify(trials=2, fault="conv2d-backward-sign")}
    assert not faulty["grad/conv2d"]["passed"]
    assert faulty["eca/kernel_size_rule"]["passed"]
