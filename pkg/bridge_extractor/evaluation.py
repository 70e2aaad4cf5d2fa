"""
Метрики качества: Concept F1, P/R@N по концептам-мостам и статистика корпуса.
"""
import logging
from dataclasses import dataclass, field
from typing import Collection, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Union

import numpy as np

from utils.metrics import precision_at_n, precision_recall_f1, recall_at_n

from .alignment import DEFAULT_MAX_NGRAM, Stemmer, align_concepts, tokenize
from .errors import ConfigError
from .kg_store import KnowledgeGraph
from .subgraph import DEFAULT_HOP_BOUND, Example, HopReport, hop_requirements

logger = logging.getLogger(__name__)

F1_AGGREGATIONS = ("max", "mean", "union")


@dataclass(frozen=True)
class ConceptF1Entry:
    id: str
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {"id": self.id, "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass
class ConceptF1Report:
    entries: List[ConceptF1Entry] = field(default_factory=list)
    excluded: int = 0

    def _mean(self, attr: str) -> float:
        return float(np.mean([getattr(e, attr) for e in self.entries])) if self.entries else 0.0

    @property
    def precision(self) -> float:
        return self._mean("precision")

    @property
    def recall(self) -> float:
        return self._mean("recall")

    @property
    def f1(self) -> float:
        return self._mean("f1")

    def as_dict(self) -> dict:
        return {
            "num_examples": len(self.entries),
            "excluded": self.excluded,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def _unique_concepts(
    text: Union[str, Collection[int]],
    source_concepts: Collection[int],
    graph: KnowledgeGraph,
    stopwords: FrozenSet[str],
    max_ngram: int,
    stemmer: Optional[Stemmer],
) -> Set[int]:
    if isinstance(text, str):
        concepts = align_concepts(tokenize(text), graph, stopwords, max_ngram, stemmer)
    else:
        concepts = text
    return set(int(c) for c in concepts) - set(source_concepts)


def concept_f1(
    example_id: str,
    predicted: Union[str, Collection[int]],
    references: Sequence[str],
    source_concepts: Collection[int],
    graph: KnowledgeGraph,
    stopwords: FrozenSet[str],
    aggregation: str = "max",
    max_ngram: int = DEFAULT_MAX_NGRAM,
    stemmer: Optional[Stemmer] = None,
) -> Optional[ConceptF1Entry]:
    """
    F1 по уникальным концептам объяснения: U = C - C_x для предсказания и
    для эталонов. Несколько эталонов сводятся по max (F1 лучшего эталона),
    mean (среднее по эталонам) или union (объединение их концептов).
    Эталоны с пустым U пропускаются; если пусты все, возвращается None.
    """
    if aggregation not in F1_AGGREGATIONS:
        raise ConfigError(f"Неизвестная агрегация F1: {aggregation}")
    u_pred = _unique_concepts(predicted, source_concepts, graph, stopwords, max_ngram, stemmer)
    u_refs = [_unique_concepts(r, source_concepts, graph, stopwords, max_ngram, stemmer) for r in references]
    u_refs = [u for u in u_refs if u]
    if not u_refs:
        return None

    if aggregation == "union":
        u_refs = [set().union(*u_refs)]
    scores = [precision_recall_f1(u_pred, u_ref) for u_ref in u_refs]
    if aggregation == "mean":
        p, r, f = (float(v) for v in np.mean(scores, axis=0))
    else:
        p, r, f = max(scores, key=lambda s: s[2])
    return ConceptF1Entry(example_id, p, r, f)


def concept_f1_report(entries: Iterable[Optional[ConceptF1Entry]]) -> ConceptF1Report:
    report = ConceptF1Report()
    for entry in entries:
        if entry is None:
            report.excluded += 1
        else:
            report.entries.append(entry)
    if report.excluded:
        logger.info("EVAL: %d примеров без уникальных концептов эталона исключены из F1", report.excluded)
    return report


@dataclass
class PRCurve:
    """Средние P@N и R@N для N = 1..n_max."""

    precision: List[float] = field(default_factory=list)
    recall: List[float] = field(default_factory=list)
    num_examples: int = 0
    excluded: int = 0

    @property
    def n_values(self) -> List[int]:
        return list(range(1, len(self.precision) + 1))

    def at(self, n: int) -> Dict[str, float]:
        return {"precision": self.precision[n - 1], "recall": self.recall[n - 1]}

    def as_dict(self) -> dict:
        return {
            "num_examples": self.num_examples,
            "excluded": self.excluded,
            "curve": [{"n": n, **self.at(n)} for n in self.n_values],
        }


def pr_at_n(rankings: Sequence[Sequence[int]], gold_sets: Sequence[Collection[int]], n_max: int) -> PRCurve:
    """
    P@N и R@N по рейтингам выбранных концептов. Если рейтинг короче N,
    P@N делится на фактическую длину. Примеры с пустым эталоном исключаются.
    """
    if len(rankings) != len(gold_sets):
        raise ValueError("Число рейтингов не совпадает с числом эталонных множеств")
    if n_max <= 0:
        raise ConfigError("n_max должен быть положительным")
    curve = PRCurve()
    precision = np.zeros(n_max)
    recall = np.zeros(n_max)
    for ranking, gold in zip(rankings, gold_sets):
        if not gold:
            curve.excluded += 1
            continue
        curve.num_examples += 1
        for n in range(1, n_max + 1):
            precision[n - 1] += precision_at_n(ranking, gold, n)
            recall[n - 1] += recall_at_n(ranking, gold, n)
    if curve.num_examples:
        precision /= curve.num_examples
        recall /= curve.num_examples
    curve.precision = precision.tolist()
    curve.recall = recall.tolist()
    return curve


def corpus_stats(
    examples: Sequence[Example],
    graph: KnowledgeGraph,
    max_hops: Optional[int] = None,
    size_hops: int = DEFAULT_HOP_BOUND,
    allowed: Optional[np.ndarray] = None,
) -> HopReport:
    """Гистограмма числа шагов до концептов объяснения и размеры необрезанных подграфов."""
    report = hop_requirements(graph, examples, max_hops=max_hops, size_hops=size_hops, allowed=allowed)
    logger.info(
        "STATS: %d примеров, в пределах %d шагов: %.1f%% концептов",
        report.num_examples,
        size_hops,
        100.0 * report.fraction_within(size_hops),
    )
    return report


def format_stats_table(report: HopReport, size_hops: int = DEFAULT_HOP_BOUND) -> str:
    data = report.as_dict()
    lines = [f"Примеров: {data['num_examples']}", "", "       шаги  концепты  примеры"]
    keys = list(dict.fromkeys([*data["concept_histogram"], *data["example_histogram"]]))
    for key in keys:
        lines.append(
            f"{key:>11}  {data['concept_histogram'].get(key, 0):>8}  {data['example_histogram'].get(key, 0):>7}"
        )
    lines.append(f"в пределах {size_hops} шагов: {100.0 * report.fraction_within(size_hops):.1f}%")
    lines += ["", "шаг  средний размер подграфа"]
    for hop, size in data["nodes_by_hop"].items():
        lines.append(f"{hop:>3}  {size:.1f}")
    return "\n".join(lines)


def format_pr_table(curve: PRCurve) -> str:
    lines = ["  N     P@N     R@N"]
    for n in curve.n_values:
        lines.append(f"{n:>3}  {curve.precision[n - 1]:.4f}  {curve.recall[n - 1]:.4f}")
    return "\n".join(lines)
