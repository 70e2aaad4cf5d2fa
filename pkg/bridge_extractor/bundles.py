"""
Пакеты извлечения: утверждение, выбранные концепты и пути-обоснования.
"""
import json
from pathlib import Path
from typing import FrozenSet, Iterable, List, Union

from utils.atomic_io import atomic_write

from .alignment import tokenize
from .errors import ArtifactError
from .extractor import PreparedSample, ScoredSubgraph, top_paths
from .kg_store import KnowledgeGraph

DEFAULT_TOP_PATHS = 3


def _named(graph: KnowledgeGraph, triple) -> List[str]:
    return [graph.surfaces[triple.head], graph.vocab.name_of(triple.rel), graph.surfaces[triple.tail]]


def make_bundle(
    sample: PreparedSample,
    scored: ScoredSubgraph,
    graph: KnowledgeGraph,
    statement: str,
    k2: int,
    k_paths: int = DEFAULT_TOP_PATHS,
) -> dict:
    """
    selected - top-K2 концептов; ranking - весь рейтинг (для P/R@N);
    paths - лучшие монотонные пути до каждого выбранного концепта, по порядку.
    """
    selected = scored.selected[:k2]
    paths = []
    for concept, _ in selected:
        for _, path in top_paths(scored.subgraph, scored.triple_prob, concept, k_paths):
            paths.append([_named(graph, t) for t in path])
    return {
        "id": sample.example.id,
        "statement": statement,
        "selected": [{"concept": graph.surfaces[c], "prob": p} for c, p in selected],
        "ranking": [{"concept": graph.surfaces[c], "prob": p} for c, p in scored.selected],
        "paths": paths,
    }


def write_bundles(bundles: Iterable[dict], path: Union[str, Path]) -> int:
    count = 0
    with atomic_write(path, "w") as f:
        for bundle in bundles:
            f.write(json.dumps(bundle, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_bundles(path: Union[str, Path]) -> List[dict]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]
    except OSError as e:
        raise ArtifactError(f"Не удалось прочитать пакеты {path}: {e}") from e


def render_templates(bundle: dict, stopwords: FrozenSet[str]) -> List[str]:
    """Заготовки вида "<концепт> relates to <ключевые слова утверждения>"."""
    keywords = " ".join(t for t in tokenize(bundle["statement"]) if t not in stopwords)
    return [f"{item['concept']} relates to {keywords}" for item in bundle["selected"]]
