import numpy as np
import pytest

from bridge_extractor import RelationVocab, TrainConfig, concept_f1, corpus_stats, extract, pr_at_n
from bridge_extractor.errors import ConfigError
from bridge_extractor.evaluation import concept_f1_report, format_pr_table, format_stats_table
from bridge_extractor.kg_store import KnowledgeGraph
from utils.metrics import precision_at_n, precision_recall_f1, recall_at_n

from .conftest import toy_instance


@pytest.fixture
def school_graph():
    surfaces = ["school", "summer", "vacation", "fun", "pool", "sun", "break"]
    return KnowledgeGraph.build(RelationVocab(), surfaces, np.zeros((0, 3), dtype=np.int64))


def f1(graph, stopwords, predicted, references, sources=(0, 1), **kwargs):
    return concept_f1("x", predicted, references, sources, graph, stopwords, **kwargs)


def test_identical_texts_score_one(school_graph, stopwords):
    text = "school in summer means vacation and fun"
    entry = f1(school_graph, stopwords, text, [text])
    assert (entry.precision, entry.recall, entry.f1) == (1.0, 1.0, 1.0)


def test_disjoint_unique_concepts_score_zero(school_graph, stopwords):
    entry = f1(school_graph, stopwords, "school has a pool", ["summer brings sun"])
    assert entry.f1 == 0.0


def test_half_recall_full_precision(school_graph, stopwords):
    entry = f1(school_graph, stopwords, "vacation and fun", ["vacation fun pool sun"])
    assert entry.precision == 1.0
    assert entry.recall == 0.5
    assert entry.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_predicted_concept_ids_are_accepted(school_graph, stopwords):
    entry = f1(school_graph, stopwords, {2, 3}, ["vacation fun pool sun"])
    assert entry.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_f1_is_symmetric(school_graph, stopwords):
    texts = ["vacation and fun", "pool sun vacation", "a break in summer", "fun fun pool"]
    for a in texts:
        for b in texts:
            assert f1(school_graph, stopwords, a, [b]).f1 == pytest.approx(f1(school_graph, stopwords, b, [a]).f1)


def test_source_concepts_are_ignored(school_graph, stopwords):
    entry = f1(school_graph, stopwords, "school vacation", ["summer vacation"])
    assert entry.f1 == 1.0


def test_reference_without_unique_concepts_is_excluded(school_graph, stopwords):
    assert f1(school_graph, stopwords, "vacation", ["school in summer"]) is None
    report = concept_f1_report([None, f1(school_graph, stopwords, "vacation", ["vacation"])])
    assert report.excluded == 1
    assert report.f1 == 1.0


def test_aggregation_modes(school_graph, stopwords):
    refs = ["vacation", "pool sun"]
    assert f1(school_graph, stopwords, "vacation", refs, aggregation="max").f1 == 1.0
    assert f1(school_graph, stopwords, "vacation", refs, aggregation="mean").f1 == pytest.approx(0.5)
    union = f1(school_graph, stopwords, "vacation", refs, aggregation="union")
    assert (union.precision, union.recall) == (1.0, pytest.approx(1 / 3))
    with pytest.raises(ConfigError):
        f1(school_graph, stopwords, "vacation", refs, aggregation="median")


def test_set_metrics_edge_cases():
    assert precision_recall_f1(set(), {1}) == (0.0, 0.0, 0.0)
    assert precision_recall_f1({1}, set()) == (0.0, 0.0, 0.0)
    assert precision_at_n([4, 1], {1}, 5) == 0.5
    assert recall_at_n([4, 1], set(), 5) == 0.0


def test_exact_gold_ranking():
    curve = pr_at_n([[7, 3, 9]], [{3, 7, 9}], 3)
    assert curve.at(3) == {"precision": 1.0, "recall": 1.0}


def test_hand_computed_curve():
    curve = pr_at_n([[3, 1, 4, 0, 2]], [{1, 2}], 5)
    assert curve.precision == pytest.approx([0.0, 0.5, 1 / 3, 0.25, 0.4])
    assert curve.recall == pytest.approx([0.0, 0.5, 0.5, 0.5, 1.0])


def test_short_ranking_divides_by_its_length():
    curve = pr_at_n([[1]], [{1, 2}], 3)
    assert curve.precision == [1.0, 1.0, 1.0]
    assert curve.recall == [0.5, 0.5, 0.5]


def test_recall_is_monotone_in_n():
    rng = np.random.default_rng(0)
    for _ in range(200):
        ranking = rng.permutation(20)[: int(rng.integers(0, 20))].tolist()
        gold = set(rng.choice(20, size=int(rng.integers(1, 6)), replace=False).tolist())
        recall = pr_at_n([ranking], [gold], 20).recall
        assert all(a <= b for a, b in zip(recall, recall[1:]))


def test_empty_gold_is_excluded():
    curve = pr_at_n([[1, 2], [3]], [set(), {3}], 2)
    assert (curve.num_examples, curve.excluded) == (1, 1)
    assert curve.recall == [1.0, 1.0]
    assert curve.as_dict()["curve"][0] == {"n": 1, "precision": 1.0, "recall": 1.0}
    assert "R@N" in format_pr_table(curve)


def test_pr_argument_errors():
    with pytest.raises(ValueError):
        pr_at_n([[1]], [], 3)
    with pytest.raises(ConfigError):
        pr_at_n([[1]], [{1}], 0)


def test_recall_at_k1_equals_bridge_coverage():
    for seed in range(10):
        _, sample, params = toy_instance(seed)
        if not sample.supervision.bridge:
            continue
        config = TrainConfig(k1=3, k2=1)
        scored = extract(sample, params, config, k2=config.k1)
        curve = pr_at_n([scored.ranking], [set(sample.supervision.bridge)], config.k1)
        assert curve.recall[-1] == pytest.approx(scored.coverage.ratio)


def test_corpus_stats_on_empty_dataset(toy_graph):
    report = corpus_stats([], toy_graph)
    assert report.num_examples == 0
    assert report.as_dict() == {"num_examples": 0, "concept_histogram": {}, "example_histogram": {}, "nodes_by_hop": {}}
    assert "Примеров: 0" in format_stats_table(report)
