import itertools

import numpy as np
import pytest

import bsfilter as bf


def test_forward_infer_thresholds_without_rescaling():
    x = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    y = bf.forward_infer(x, [0.9, 0.25, 0.3])
    np.testing.assert_array_equal(y, [[1.0, 0.0, 3.0], [4.0, 0.0, 6.0]])


def test_forward_train_applies_the_returned_mask():
    x = np.arange(12, dtype=float).reshape(4, 3) + 1
    y, r = bf.forward_train(x, [0.5, 0.5, 0.5], seed=7)
    assert r.shape == (1, 3)
    assert set(np.unique(r)) <= {0.0, 1.0}
    np.testing.assert_array_equal(y, x * r)
    _, rs = bf.forward_train(x, [0.5, 0.5, 0.5], seed=7, per_sample=True)
    assert rs.shape == (4, 3)


def test_bad_gate_values_raise():
    with pytest.raises(ValueError):
        bf.forward_infer(np.ones((2, 2)), [1.5, 0.5])
    with pytest.raises(bf.ShapeError):
        bf.forward_infer(np.ones((2, 3)), [0.5, 0.5])


def test_objective_matches_enumeration():
    inst = bf.ObjectiveInstance.random(6, 4, seed=3)
    w = [0.5, -1.0, 2.0, 0.25]
    p = [0.2, 0.7, 0.5, 0.9]
    exact = bf.analytic_objective(inst, w, p, lam=0.1)
    assert bf.brute_force_objective(inst, w, p, lam=0.1) == pytest.approx(exact, rel=1e-12)

    x, y = inst.x, np.array(inst.y)
    expected = 0.0
    for r in itertools.product([0, 1], repeat=4):
        prob = np.prod([pj if rj else 1 - pj for pj, rj in zip(p, r)])
        expected += prob * np.sum((y - x @ (np.array(r) * w)) ** 2)
    assert expected + 0.1 * sum(p) == pytest.approx(exact, rel=1e-12)

    est, se = bf.monte_carlo_objective(inst, w, p, lam=0.1, draws=20000, seed=1)
    assert abs(est - exact) < 5 * se


def test_lab_report():
    rec = bf.run_lab(rows=5, features=3, draws=5000, seed=2)
    assert rec["workflow"] == "lab"
    assert rec["results"]["max_discrepancy"] < 1e-9


def test_dataset_round_trip(tmp_path):
    data, informative = bf.make_informative(n=60, d=6, informative=2, seed=4)
    assert data.x.shape == (60, 6)
    assert len(informative) == 2
    path = tmp_path / "d.csv"
    path.write_text(data.to_csv())
    back = bf.load_csv(path, "label")
    np.testing.assert_array_equal(back.x, data.x)
    np.testing.assert_array_equal(back.y, data.y)
    with pytest.raises(bf.InputError):
        bf.load_csv(tmp_path / "missing.csv")


def test_dataset_from_arrays_checks_rows():
    with pytest.raises(ValueError):
        bf.Dataset(np.zeros((3, 2)), np.array([0, 1]))
    d = bf.Dataset(np.zeros((3, 2)), np.array([0, 1, 2]))
    assert d.n_classes == 3


def test_feature_selection_report():
    data, informative = bf.make_informative(n=200, d=6, informative=2, class_sep=4.0, seed=1)
    cfg = bf.SelectionConfig()
    cfg.lambdas = [0.0]
    cfg.hidden = [8]
    cfg.informative = informative
    cfg.experiment.folds = 3
    cfg.experiment.fold_limit = 1
    cfg.experiment.train.max_epochs = 5
    cfg.experiment.train.patience = 2
    report = bf.select_features(data, cfg)
    assert report["schema_version"] == 1
    fold = report["results"]["runs"][0]["folds"][0]
    assert fold["selected_indices"] == list(range(6))
    assert report["config"]["tau"] == 0.25


def test_prune_checkpoint_round_trip(tmp_path):
    net = bf.Network.mlp(4, [6, 5], 3, gated=True, seed=2)
    gates = net.gate_indices
    assert len(gates) == 2
    net.set_gate_values(gates[0], [1.0, 0.1, 1.0, 0.2, 1.0, 1.0])
    net.set_gate_values(gates[1], [0.0, 1.0, 1.0, 0.0, 1.0])

    path = tmp_path / "net.txt"
    net.save(path)
    loaded = bf.Network.load(path)
    assert loaded == net

    pruned, report = bf.prune(loaded)
    assert [g["kept_units"] for g in report["results"]["gates"]] == [4, 3]
    x = np.random.default_rng(0).normal(size=(10, 4))
    np.testing.assert_array_equal(pruned.predict(x), net.predict(x))
    assert pruned.weight_count < net.weight_count


def test_degenerate_prune_raises():
    net = bf.Network.mlp(3, [4], 2, gated=True)
    net.set_gate_values(net.gate_indices[0], [0.0] * 4)
    with pytest.raises(bf.DegenerateModelError):
        bf.prune(net)
