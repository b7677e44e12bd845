import math

import numpy as np
import pytest
import torch

from app.core.errors import NumericalError
from app.core.models.rotation_predictor import RotationPredictor
from app.core.rotation.ops import rotate
from app.core.rotation.types import Rotation, Verdict
from app.core.sampler.scoring import (
    ground_truth_quality, histogram_edges, partition, score, score_corpus, score_gap, score_histogram,
)
from app.core.sampler.trainer import (
    find_overfit_epoch, rotation_accuracy, run_overfit_probe, smooth, train_step1, train_step2, tune_check,
)
from app.core.storage.artifact_repository import load_partition
from tests.fixtures.stubs import ConstantPredictor, StubPredictor, entropy_by_hand

RHO = math.log(4) / 2


def test_score_uniform_model(tiny_corpus):
    model = ConstantPredictor([0.0, 0.0, 0.0, 0.0])
    assert score(model, tiny_corpus[0]) == pytest.approx(math.log(4), abs=1e-6)


def test_score_one_hot_model(tiny_corpus):
    model = ConstantPredictor([60.0, 0.0, 0.0, 0.0])
    assert score(model, tiny_corpus[0]) == pytest.approx(0.0, abs=1e-6)


def test_score_matches_hand_computed_mean_entropy(tiny_corpus):
    table = [
        [0.7, 0.1, 0.1, 0.1],
        [0.25, 0.25, 0.25, 0.25],
        [0.5, 0.5, 0.0, 0.0],
        [0.4, 0.3, 0.2, 0.1],
    ]
    expected = sum(entropy_by_hand(p) for p in table) / 4
    assert score(StubPredictor(table), tiny_corpus[5]) == pytest.approx(expected, abs=1e-9)


def test_score_invariant_to_starting_rotation(tiny_corpus):
    torch.manual_seed(0)
    model = RotationPredictor.from_config(None).eval()
    image = tiny_corpus[20]
    base = score(model, image)
    for r in (Rotation.R90, Rotation.R180, Rotation.R270):
        assert score(model, rotate(image, r)) == pytest.approx(base, abs=1e-5)


def test_score_corpus_sorted_by_id(tiny_corpus):
    scores = score_corpus(ConstantPredictor([0.0, 1.0, 2.0, 3.0]), list(reversed(tiny_corpus)), batch_size=5)
    assert [i for i, _ in scores] == sorted(img.id for img in tiny_corpus)
    assert len({s for _, s in scores}) == 1


def test_partition_threshold_is_strict(tmp_path):
    threshold = RHO + 0.2
    result = partition(
        {"a": 0.95, "b": threshold, "c": 0.1}, RHO, 0.2, path=tmp_path / "partition.csv"
    )
    assert result.verdicts() == {"a": True, "b": False, "c": False}
    assert result.rai_count() == 1
    reloaded = load_partition(tmp_path / "partition.csv")
    assert reloaded.verdicts() == result.verdicts()
    assert reloaded.threshold == pytest.approx(threshold)


def test_partition_rejects_non_finite():
    with pytest.raises(ValueError):
        partition([("a", float("nan"))], RHO, 0.2)


def test_ground_truth_quality(tiny_corpus):
    scores = {img.id: (1.2 if img.truth is Verdict.RAI else 0.1) for img in tiny_corpus}
    quality = ground_truth_quality(partition(scores, RHO, 0.2), tiny_corpus)
    assert quality == {"precision": 1.0, "recall": 1.0}

    unlabelled = [img.model_copy(update={"truth": None}) for img in tiny_corpus]
    assert ground_truth_quality(partition(scores, RHO, 0.2), unlabelled) is None


def test_score_gap(tiny_corpus):
    scores = [(img.id, 1.0 if img.truth is Verdict.RAI else 0.25) for img in tiny_corpus]
    assert score_gap(scores, tiny_corpus) == pytest.approx(0.75)


def test_histogram_bins_cover_entropy_range_and_sum_to_corpus():
    edges = histogram_edges(0.05)
    assert edges[0] == 0.0
    assert edges[-1] >= math.log(4)
    rng = np.random.default_rng(0)
    step1 = rng.uniform(0, math.log(4), size=300)
    step2 = np.append(rng.uniform(0, 1, size=299), math.log(4))
    histogram = score_histogram({"step1": step1, "step2": step2}, 0.05)
    assert list(histogram.columns) == ["bin_start", "bin_end", "step1", "step2"]
    assert histogram["step1"].sum() == 300
    assert histogram["step2"].sum() == 300
    assert np.allclose(histogram["bin_end"] - histogram["bin_start"], 0.05)


def test_smooth_trailing_window():
    assert smooth([1.0, 2.0, 3.0, 4.0], 3) == pytest.approx([1.0, 1.5, 2.0, 3.0])


def test_find_overfit_epoch():
    assert find_overfit_epoch([0.5, 0.6, 0.7, 0.8], window=3) is None
    assert find_overfit_epoch([0.5, 0.7, 0.9, 0.6, 0.4, 0.3], window=1) == 3
    # smoothing hides a single dip
    assert find_overfit_epoch([0.5, 0.6, 0.58, 0.7, 0.8], window=3) is None


@pytest.mark.parametrize("acc1, acc2, expected", [
    (0.80, 0.80, True),
    (0.80, 0.70, False),
    (0.80, 0.805, True),
    (0.80, 0.81, True),
])
def test_tune_check(acc1, acc2, expected):
    assert tune_check(acc1, acc2, 0.01) is expected


def test_tune_check_rejects_out_of_range():
    with pytest.raises(ValueError):
        tune_check(1.2, 0.8)
    with pytest.raises(ValueError):
        tune_check(0.8, float("nan"))


def test_overfit_probe_never_degrading_returns_max_epochs(tiny_corpus, sampler_config, mocker):
    accuracies = iter([0.1, 0.1, 0.2, 0.2, 0.3, 0.3])
    mocker.patch("app.core.sampler.trainer.rotation_accuracy", side_effect=lambda *a, **k: next(accuracies))
    curve = run_overfit_probe(tiny_corpus, RotationPredictor.from_config(sampler_config.encoder), sampler_config)
    assert curve.overfit_epoch == sampler_config.probe_max_epochs
    assert curve.degraded is False
    assert curve.val_accuracy == [0.1, 0.2, 0.3]
    assert list(curve.to_frame()["epoch"]) == [1, 2, 3]


def test_overfit_probe_stops_before_degradation(tiny_corpus, sampler_config, mocker):
    cfg = sampler_config.model_copy(update={"probe_window": 1})
    accuracies = iter([0.5, 0.5, 0.9, 0.8, 1.0, 0.4])
    mocker.patch("app.core.sampler.trainer.rotation_accuracy", side_effect=lambda *a, **k: next(accuracies))
    curve = run_overfit_probe(tiny_corpus, RotationPredictor.from_config(cfg.encoder), cfg)
    assert curve.overfit_epoch == 2
    assert curve.degraded is True
    assert curve.train_accuracy[1] < 1.0


def test_overfit_probe_leaves_template_untouched(tiny_corpus, sampler_config):
    template = RotationPredictor.from_config(sampler_config.encoder)
    before = {k: v.clone() for k, v in template.state_dict().items()}
    run_overfit_probe(tiny_corpus, template, sampler_config, max_epochs=1)
    for key, value in template.state_dict().items():
        assert torch.equal(value, before[key])


def test_train_steps_record_accuracy(tiny_corpus, sampler_config):
    torch.manual_seed(0)
    model = RotationPredictor.from_config(sampler_config.encoder)
    train_step1(tiny_corpus, model, sampler_config)
    train_step2(tiny_corpus, model, sampler_config)
    for step in ("step1", "step2"):
        assert 0.0 <= model.rotation_accuracy[step] <= 1.0
    assert model.rotation_accuracy["step2"] == pytest.approx(rotation_accuracy(model, tiny_corpus))


def test_train_step1_requires_epochs(tiny_corpus, sampler_config):
    cfg = sampler_config.model_copy(update={"beta1": None})
    with pytest.raises(ValueError):
        train_step1(tiny_corpus, RotationPredictor.from_config(cfg.encoder), cfg)


def test_train_step1_aborts_on_non_finite_loss(tiny_corpus, sampler_config, mocker):
    mocker.patch(
        "app.core.sampler.trainer.loss_crs",
        return_value=torch.tensor(float("nan"), requires_grad=True),
    )
    with pytest.raises(NumericalError) as excinfo:
        train_step1(tiny_corpus, RotationPredictor.from_config(sampler_config.encoder), sampler_config)
    assert excinfo.value.diagnostics["step"] == "step1"
    assert excinfo.value.diagnostics["epoch"] == 1
