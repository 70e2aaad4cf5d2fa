import numpy as np
import pytest

from bridge_extractor import EncoderConfig, TrainConfig, generate_planted_corpus, train
from bridge_extractor.errors import NumericalInstabilityError, TrainingAborted
from bridge_extractor.extractor import forward_example
from bridge_extractor.training import AdamOptimizer, dev_recall, extract_all, init_params
from bridge_extractor import training
from utils.metrics import recall_at_n

from .conftest import planted_samples, toy_instance


def small_params(graph, vocab, seed=0, d=8):
    return init_params(EncoderConfig(d=d), len(vocab), graph.vocab.num_relations, seed)


def test_zero_learning_rate_keeps_parameters(small_planted):
    graph, vocab, samples = small_planted
    params = small_params(graph, vocab)
    trained, report = train(samples["train"], TrainConfig(lr=0.0, epochs=2), params)
    assert report.steps == 2 * 3
    for name in params:
        assert np.array_equal(trained[name], params[name])


def test_training_does_not_mutate_input(small_planted):
    graph, vocab, samples = small_planted
    params = small_params(graph, vocab)
    before = params.copy()
    train(samples["train"], TrainConfig(epochs=1), params)
    for name in params:
        assert np.array_equal(params[name], before[name])


def test_single_step_decreases_loss():
    _, sample, params = toy_instance(0)
    config = TrainConfig(lr=1e-3, epochs=1, batch_size=1, warmup=0.0)
    before = forward_example(sample, params, config).loss
    trained, _ = train([sample], config, params)
    assert forward_example(sample, trained, config).loss < before


def test_warmup_schedule():
    _, _, params = toy_instance(0)
    optimizer = AdamOptimizer(params, lr=0.1, warmup_steps=4)
    rates = []
    for _ in range(6):
        optimizer.step_count += 1
        rates.append(optimizer.current_lr())
    assert rates == pytest.approx([0.025, 0.05, 0.075, 0.1, 0.1, 0.1])


def test_training_is_deterministic_across_workers(small_planted):
    graph, vocab, samples = small_planted
    params = small_params(graph, vocab)
    config = TrainConfig(epochs=2, lr=1e-2, seed=5, negative_sample_rate=0.5)
    one, report_one = train(samples["train"], config, params)
    again, _ = train(samples["train"], config, params)
    two, report_two = train(samples["train"], TrainConfig(epochs=2, lr=1e-2, seed=5, negative_sample_rate=0.5, workers=2), params)
    for name in params:
        assert np.array_equal(one[name], again[name])
        assert np.array_equal(one[name], two[name])
    assert report_one.as_dict() == report_two.as_dict()


def test_epoch_callback_and_report(small_planted):
    graph, vocab, samples = small_planted
    seen = []
    _, report = train(
        samples["train"],
        TrainConfig(epochs=2),
        small_params(graph, vocab),
        dev_samples=samples["dev"],
        on_epoch_end=lambda epoch, p: seen.append(epoch),
    )
    assert seen == [1, 2]
    assert [e.epoch for e in report.epochs] == [1, 2]
    assert all(e.dev_recall is not None and 0.0 <= e.dev_recall <= 1.0 for e in report.epochs)
    assert all(0.0 <= e.coverage <= 1.0 for e in report.epochs)


def test_non_finite_gradient_aborts_with_last_good(small_planted, monkeypatch):
    graph, vocab, samples = small_planted
    params = small_params(graph, vocab)

    def poisoned(forward, params, grads=None):
        grads = params.zeros_like()
        grads["W_3"][0, 0] = np.inf
        return grads

    monkeypatch.setattr(training, "backward_example", poisoned)
    with pytest.raises(TrainingAborted) as info:
        train(samples["train"], TrainConfig(epochs=2), params)
    assert isinstance(info.value, NumericalInstabilityError)
    assert info.value.tensor_name == "W_3"
    assert info.value.epoch == 1
    for name in params:
        assert np.array_equal(info.value.last_good[name], params[name])


def test_empty_training_set():
    _, _, params = toy_instance(0)
    with pytest.raises(ValueError):
        train([], TrainConfig(), params)


def test_extract_all_keeps_order(small_planted):
    graph, vocab, samples = small_planted
    params = small_params(graph, vocab)
    config = TrainConfig()
    serial = extract_all(samples["test"], params, config)
    threaded = extract_all(samples["test"], params, config, workers=3)
    assert [s.ranking for s in serial] == [s.ranking for s in threaded]
    assert dev_recall(samples["test"], params, config) is not None


@pytest.mark.slow
def test_planted_pattern_is_recovered(tmp_path):
    corpus = generate_planted_corpus(seed=42)
    graph, vocab, samples = planted_samples(corpus, tmp_path)
    config = TrainConfig()
    params = init_params(EncoderConfig(), len(vocab), graph.vocab.num_relations, config.seed)
    trained, _ = train(samples["train"], config, params)

    recalls, baselines = [], []
    for sample, scored in zip(samples["test"], extract_all(samples["test"], trained, config)):
        gold = {graph.concept_id(s) for s in corpus.gold[sample.example.id]}
        assert gold == set(sample.supervision.bridge)
        recalls.append(recall_at_n(scored.ranking, gold, 3))
        candidates = int((~sample.is_source).sum())
        baselines.append(min(3, candidates) / candidates)
    recall, baseline = float(np.mean(recalls)), float(np.mean(baselines))
    assert recall >= 0.9
    assert recall >= baseline + 0.5
