import itertools

import numpy as np
import pytest

from structsvm.errors import InferenceFailure, InvalidParams, LengthMismatch
from structsvm.geometry import LabelPoint
from structsvm.hull_search import FractionalLabel
from structsvm.losses import BiCriteriaLoss
from structsvm.oracle import MultiLabelSpace
from structsvm.trainer import (
    ChainInstance,
    MultiLabelInstance,
    StructuredModel,
    TrainConfig,
    TrainStats,
    evaluate,
    example_loss,
    features,
    label_space,
    load_model,
    loss_augmented_inference,
    objective,
    planted_chains,
    predict,
    save_model,
    sgd_train,
    subgradient_step,
)

SLACK = BiCriteriaLoss.slack()
MARGIN = BiCriteriaLoss.margin()


def ml_instance(x, labels):
    return MultiLabelInstance(np.asarray(x, dtype=float), frozenset(labels))


def random_chain_data(rng, n, length=3, states=2, dim=3):
    data = []
    for _ in range(n):
        y = tuple(int(s) for s in rng.integers(0, states, length))
        data.append(ChainInstance(rng.normal(size=(length, dim)), y))
    return data


def margin_h(model, inst, label):
    """score(label) - score(truth), straight from the feature map."""
    return float(model.weights @ (features(model, inst, label) - features(model, inst, inst.y)))


def test_model_dimensions():
    assert StructuredModel.size("chain", 3, 4) == 3 * 4 + 9
    assert StructuredModel.size("multilabel", 3, 4) == 12
    m = StructuredModel.zeros("chain", 2, 3)
    assert m.unary.shape == (2, 3) and m.transitions.shape == (2, 2)
    with pytest.raises(InvalidParams):
        StructuredModel("chain", 2, 3, np.zeros(5))
    with pytest.raises(InvalidParams):
        StructuredModel("tree", 2, 3, np.zeros(6))
    with pytest.raises(LengthMismatch):
        ChainInstance(np.zeros((3, 2)), (0, 1))


def test_train_config_validation():
    for bad in ({"reg_c": 0.0}, {"learning_rate": -1.0}, {"epochs": -1}, {"inference": "nope"}, {"decay": -0.5}):
        with pytest.raises(InvalidParams):
            TrainConfig(**bad)


def test_feature_map_matches_label_space():
    rng = np.random.default_rng(0)
    model = StructuredModel("chain", 3, 4, rng.normal(size=StructuredModel.size("chain", 3, 4)))
    inst = ChainInstance(rng.normal(size=(4, 4)), (0, 2, 1, 1))
    space = label_space(model, inst)
    for y in itertools.product(range(3), repeat=4):
        assert space.point_of(y).h == pytest.approx(margin_h(model, inst, y), abs=1e-12)


def test_save_load_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    for kind in ("chain", "multilabel"):
        m = StructuredModel(kind, 3, 5, rng.normal(size=StructuredModel.size(kind, 3, 5)) * 1e3)
        path = tmp_path / f"{kind}.model"
        save_model(m, str(path))
        assert path.read_text().splitlines()[0] == f"structsvm-model v1 {kind} 3,5"
        back = load_model(str(path))
        assert back.kind == kind and np.array_equal(back.weights, m.weights)
    path.write_text("garbage\n1.0\n")
    with pytest.raises(InvalidParams):
        load_model(str(path))


def test_margin_step_with_truth_only_regularizes():
    rng = np.random.default_rng(2)
    model = StructuredModel("multilabel", 3, 2, rng.normal(size=6))
    inst = ml_instance([1.0, -2.0], {0, 2})
    truth_pt = label_space(model, inst).point_of(MultiLabelSpace.to_mask({0, 2}))
    before = model.weights.copy()
    subgradient_step(model, inst, FractionalLabel((truth_pt,)), MARGIN, 0.1, 0.5)
    assert np.allclose(model.weights, before * (1 - 0.1 * 0.5))


def test_slack_single_label_coefficient_is_g():
    model = StructuredModel.zeros("multilabel", 3, 2)
    inst = ml_instance([1.0, 2.0], {0})
    y_hat = MultiLabelSpace.to_mask({1, 2})
    pt = label_space(model, inst).point_of(y_hat)
    assert (pt.h, pt.g) == (0.0, 3.0)
    subgradient_step(model, inst, FractionalLabel((pt,)), SLACK, 1.0, 1.0)
    expected = -3.0 * (features(model, inst, {1, 2}) - features(model, inst, {0}))
    assert np.array_equal(model.weights, expected)


def test_fractional_update_matches_finite_differences():
    rng = np.random.default_rng(3)
    model = StructuredModel("chain", 2, 3, rng.normal(size=StructuredModel.size("chain", 2, 3)))
    inst = ChainInstance(rng.normal(size=(3, 3)), (0, 1, 0))
    ya, yb, t = (1, 1, 0), (1, 0, 1), 0.3
    space = label_space(model, inst)
    frac = FractionalLabel((space.point_of(ya), space.point_of(yb)), t)

    def segment_loss(w):
        m = StructuredModel("chain", 2, 3, w)
        ha, hb = margin_h(m, inst, ya), margin_h(m, inst, yb)
        return SLACK.value((1 - t) * ha + t * hb, frac.g)

    stepped = subgradient_step(model.copy(), inst, frac, SLACK, 1.0, 1e-300)
    grad = model.weights - stepped.weights
    e = 1e-5
    fd = np.array([
        (segment_loss(model.weights + e * u) - segment_loss(model.weights - e * u)) / (2 * e)
        for u in np.eye(model.weights.size)
    ])
    assert np.allclose(grad, fd, atol=1e-6)
    # t-weighted sum of the two feature differences, scaled by d psi/dh = g at the fractional point
    diff = lambda y: features(model, inst, y) - features(model, inst, inst.y)  # noqa: E731
    assert np.allclose(grad, frac.g * ((1 - t) * diff(ya) + t * diff(yb)), atol=1e-12)


@pytest.mark.parametrize("loss", [MARGIN, SLACK, BiCriteriaLoss.probloss_ext()], ids=lambda l: l.family)
def test_subgradient_validity(loss):
    rng = np.random.default_rng(4)
    inst = ChainInstance(rng.normal(size=(3, 2)), (1, 0, 1))
    for _ in range(10):
        model = StructuredModel("chain", 2, 2, rng.normal(size=StructuredModel.size("chain", 2, 2)))
        cfg = TrainConfig(inference="margin" if loss is MARGIN else "hull", loss=loss)
        res = loss_augmented_inference(model, inst, cfg)
        pts = [(p.label_id, p.g, w) for p, w in res.fractional.components()]

        def frozen(w):
            m = StructuredModel("chain", 2, 2, w)
            h = sum(c * margin_h(m, inst, y) for y, _, c in pts)
            return loss.value(h, sum(c * g for _, g, c in pts))

        def full(w):
            return example_loss(StructuredModel("chain", 2, 2, w), inst, TrainConfig(loss=MARGIN))

        value = full if loss is MARGIN else frozen
        base = max(value(model.weights), 0.0)
        if base == 0.0:
            continue
        sub = model.weights - subgradient_step(model.copy(), inst, res.fractional, loss, 1.0, 1e-300).weights
        for _ in range(100):
            d = rng.normal(size=model.weights.size) * 1e-2
            assert value(model.weights + d) >= base + sub @ d - 1e-6


def test_zero_epochs_is_identity():
    rng = np.random.default_rng(5)
    data = random_chain_data(rng, 5)
    start = StructuredModel("chain", 2, 3, rng.normal(size=StructuredModel.size("chain", 2, 3)))
    out = sgd_train(data, TrainConfig(epochs=0), start)
    assert np.array_equal(out.weights, start.weights) and out is not start


def test_empty_data_rejected():
    with pytest.raises(InvalidParams):
        sgd_train([], TrainConfig())


@pytest.mark.parametrize("inference", ["margin", "hull", "angular", "bisecting", "binary"])
def test_training_is_deterministic(inference):
    rng = np.random.default_rng(6)
    data = random_chain_data(rng, 8)
    loss = MARGIN if inference == "margin" else SLACK
    cfg = TrainConfig(epochs=3, inference=inference, loss=loss, seed=11, learning_rate=0.1, decay=0.1)
    s1, s2 = TrainStats(), TrainStats()
    w1 = sgd_train(data, cfg, stats=s1).weights
    w2 = sgd_train(data, cfg, stats=s2).weights
    assert np.array_equal(w1, w2) and s1.oracle_calls == s2.oracle_calls
    assert len(s1.oracle_calls) == 3 * len(data)


def test_angular_training_equals_brute_force_slack():
    rng = np.random.default_rng(7)
    data = random_chain_data(rng, 6)
    start = StructuredModel("chain", 2, 3, rng.normal(size=StructuredModel.size("chain", 2, 3)))
    cfg = TrainConfig(epochs=3, inference="angular", loss=SLACK, seed=5, learning_rate=0.05)
    got = sgd_train(data, cfg, start)

    model = start.copy()
    order_rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.epochs):
        for i in order_rng.permutation(len(data)):
            inst = data[int(i)]
            pts = label_space(model, inst).enumerate().points()
            best = max(pts, key=lambda p: SLACK.value(p.h, p.g))
            subgradient_step(model, inst, FractionalLabel((best,)), SLACK, cfg.learning_rate, cfg.reg_c)
    assert np.allclose(got.weights, model.weights, atol=1e-12)


def test_inference_failure_carries_index():
    rng = np.random.default_rng(8)
    data = [ml_instance(rng.normal(size=3), {0, 1}) for _ in range(3)]
    data.append(ml_instance(rng.normal(size=3), set()))
    cfg = TrainConfig(epochs=1, inference="hull", loss=BiCriteriaLoss.microf1(), shuffle=False)
    with pytest.raises(InferenceFailure) as info:
        sgd_train(data, cfg)
    assert info.value.index == 3


def test_objective_decreases_on_average():
    curves = []
    for seed in range(10):
        data, _ = planted_chains(40, seed=seed)
        stats = TrainStats()
        cfg = TrainConfig(epochs=10, learning_rate=0.02, reg_c=1e-2, seed=seed)
        sgd_train(data, cfg, stats=stats, track_objective=True)
        curves.append(stats.objective)
    mean = np.mean(curves, axis=0)
    assert np.all(np.diff(mean) <= 1e-3), mean


def test_objective_at_zero_is_mean_hamming():
    rng = np.random.default_rng(9)
    data = random_chain_data(rng, 4)
    model = StructuredModel.zeros("chain", 2, 3)
    # margin argmax at w = 0 flips every position
    assert objective(model, data, TrainConfig()) == pytest.approx(3.0)


def test_zero_weight_chain_predicts_state_zero():
    inst = ChainInstance(np.ones((5, 3)), (1, 1, 1, 1, 1))
    assert predict(StructuredModel.zeros("chain", 3, 3), inst) == (0, 0, 0, 0, 0)


def test_multilabel_predict_thresholds_at_zero():
    model = StructuredModel("multilabel", 3, 2, np.array([1.0, 0.0, -1.0, 0.0, 0.0, 1.0]))
    assert predict(model, ml_instance([1.0, 1.0], {0})) == frozenset({0, 2})


def test_evaluate_examples():
    m = evaluate([{1}], [{1, 2}])
    assert m.micro_f1 == pytest.approx(2 / 3)
    assert evaluate([{3}], [{1, 2}]).micro_f1 == 0.0
    same = evaluate([{1}, {0, 2}], [{1}, {0, 2}])
    assert (same.accuracy, same.hamming, same.micro_f1, same.macro_f1) == (1.0, 0.0, 1.0, 1.0)
    seq = evaluate([(0, 1, 1)], [(0, 1, 0)])
    assert seq.accuracy == 0.0 and seq.hamming == pytest.approx(1 / 3)
    with pytest.raises(LengthMismatch):
        evaluate([{1}], [])
    with pytest.raises(LengthMismatch):
        evaluate([(0, 1)], [(0, 1, 0)])


def test_evaluate_macro_f1_absent_label_counts_as_one():
    m = evaluate([{0}], [{0}], num_labels=3)
    assert m.macro_f1 == 1.0 and m.hamming == 0.0
    m = evaluate([{0, 1}], [{0}], num_labels=2)
    assert m.macro_f1 == pytest.approx(0.5) and m.hamming == pytest.approx(0.5)


def test_planted_chains_have_margin():
    data, truth = planted_chains(30, margin=0.5, seed=3)
    for inst in data:
        assert predict(truth, inst) == inst.y


def test_label_point_shortcut():
    # FractionalLabel components carry the label ids used for the feature difference
    p = LabelPoint((0, 1), 0.5, 1.0)
    assert FractionalLabel((p,)).components() == [(p, 1.0)]
