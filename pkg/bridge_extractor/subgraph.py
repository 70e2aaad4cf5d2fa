"""
Построение подграфа утверждения и дистантная разметка концептов-мостов.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .alignment import DEFAULT_MAX_NGRAM, Stemmer, align_concepts, tokenize
from .errors import InvalidSourceError
from .kg_store import KnowledgeGraph, Triple

if TYPE_CHECKING:
    from .dataset import DatasetRecord

logger = logging.getLogger(__name__)

DEFAULT_HOP_BOUND = 3
DEFAULT_BUDGET = 300
DEFAULT_PATH_CAP = 10_000
UNREACHABLE = -1


@dataclass(frozen=True)
class Example:
    id: str
    statement_tokens: Tuple[str, ...]
    explanations: Tuple[str, ...]
    source_concepts: Tuple[int, ...]
    target_concepts: Optional[Tuple[int, ...]] = None

    @property
    def usable(self) -> bool:
        return bool(self.source_concepts)


def make_example(
    record: "DatasetRecord",
    graph: KnowledgeGraph,
    stopwords: FrozenSet[str],
    max_ngram: int = DEFAULT_MAX_NGRAM,
    stemmer: Optional[Stemmer] = None,
) -> Example:
    """Выравнивает утверждение (C_x) и, если есть объяснения, их объединение (C_y)."""
    tokens = tokenize(record.statement)
    sources = align_concepts(tokens, graph, stopwords, max_ngram, stemmer)
    targets: Optional[List[int]] = None
    if record.explanations:
        targets = []
        for explanation in record.explanations:
            for cid in align_concepts(tokenize(explanation), graph, stopwords, max_ngram, stemmer):
                if cid not in targets:
                    targets.append(cid)
    return Example(
        id=record.id,
        statement_tokens=tuple(tokens),
        explanations=tuple(record.explanations),
        source_concepts=tuple(sources),
        target_concepts=None if targets is None else tuple(targets),
    )


@dataclass(frozen=True, eq=False)
class Subgraph:
    """
    Подграф G_x: узлы по возрастанию ConceptId с расстояниями d_c и все
    тройки графа между ними (отсортированы по head, rel, tail).
    """

    nodes: np.ndarray
    distances: np.ndarray
    heads: np.ndarray
    rels: np.ndarray
    tails: np.ndarray
    sources: Tuple[int, ...]
    hop_bound: int
    budget: Optional[int]
    _edge_lookup: Dict[Triple, int] = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_nodes(self) -> int:
        return int(len(self.nodes))

    @property
    def num_edges(self) -> int:
        return int(len(self.heads))

    def local(self, concepts) -> np.ndarray:
        """Позиции концептов в массиве nodes."""
        return np.searchsorted(self.nodes, np.asarray(concepts, dtype=np.int64))

    def contains(self, concept: int) -> bool:
        i = int(np.searchsorted(self.nodes, concept))
        return i < len(self.nodes) and int(self.nodes[i]) == int(concept)

    def distance_of(self, concept: int) -> int:
        return int(self.distances[self.local([concept])[0]])

    def edge_local(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.local(self.heads), self.local(self.tails)

    def triple(self, index: int) -> Triple:
        return Triple(int(self.heads[index]), int(self.rels[index]), int(self.tails[index]))

    @property
    def edges(self) -> List[Triple]:
        return [self.triple(i) for i in range(self.num_edges)]

    def edge_index(self, triple: Triple) -> Optional[int]:
        if not self._edge_lookup and self.num_edges:
            self._edge_lookup.update({t: i for i, t in enumerate(self.edges)})
        return self._edge_lookup.get(Triple(*triple))

    def edge_mask(self, triples: Iterable[Triple]) -> np.ndarray:
        mask = np.zeros(self.num_edges, dtype=bool)
        for triple in triples:
            index = self.edge_index(triple)
            if index is not None:
                mask[index] = True
        return mask

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subgraph):
            return NotImplemented
        return (
            self.sources == other.sources
            and self.hop_bound == other.hop_bound
            and self.budget == other.budget
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in ("nodes", "distances", "heads", "rels", "tails")
            )
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class SupervisionSet:
    bridge: Tuple[int, ...]
    positives: FrozenSet[Triple]
    truncated: Tuple[int, ...] = ()


def _csr(num_nodes: int, src: np.ndarray, dst: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR по src; возвращает (offsets, dst в порядке src, порядок рёбер)."""
    order = np.argsort(src, kind="stable")
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=offsets[1:])
    return offsets, dst[order], order


def _bfs(offsets: np.ndarray, targets: np.ndarray, starts: Sequence[int], max_hops: Optional[int] = None) -> np.ndarray:
    """Поуровневый BFS по CSR; -1 для недостижимых узлов."""
    dist = np.full(len(offsets) - 1, UNREACHABLE, dtype=np.int64)
    frontier = np.unique(np.asarray(starts, dtype=np.int64))
    dist[frontier] = 0
    hop = 0
    while frontier.size and (max_hops is None or hop < max_hops):
        hop += 1
        begins, ends = offsets[frontier], offsets[frontier + 1]
        lengths = ends - begins
        if not lengths.sum():
            break
        idx = np.repeat(begins - np.concatenate([[0], np.cumsum(lengths)[:-1]]), lengths)
        reached = targets[idx + np.arange(int(lengths.sum()))]
        reached = np.unique(reached[dist[reached] == UNREACHABLE])
        dist[reached] = hop
        frontier = reached
    return dist


def graph_distances(
    graph: KnowledgeGraph,
    sources: Sequence[int],
    max_hops: Optional[int] = None,
    allowed: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Расстояния от ближайшего источника по всему графу (без обрезки)."""
    dist = np.full(graph.num_concepts, UNREACHABLE, dtype=np.int64)
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    dist[frontier] = 0
    hop = 0
    while frontier.size and (max_hops is None or hop < max_hops):
        hop += 1
        reached = graph.tails[graph.edge_indices(frontier)].astype(np.int64)
        keep = dist[reached] == UNREACHABLE
        if allowed is not None:
            keep &= allowed[reached]
        reached = np.unique(reached[keep])
        dist[reached] = hop
        frontier = reached
    return dist


def _validate_sources(graph: KnowledgeGraph, sources: Iterable[int]) -> np.ndarray:
    sources = np.unique(np.asarray(list(sources), dtype=np.int64))
    if sources.size == 0:
        raise InvalidSourceError("Пустое множество исходных концептов")
    bad = sources[(sources < 0) | (sources >= graph.num_concepts)]
    if bad.size:
        raise InvalidSourceError(f"Исходные концепты вне графа: {bad.tolist()}")
    return sources


def retrieve_subgraph(
    graph: KnowledgeGraph,
    sources: Iterable[int],
    hop_bound: int = DEFAULT_HOP_BOUND,
    budget: Optional[int] = DEFAULT_BUDGET,
    node_filter: Optional[np.ndarray] = None,
) -> Subgraph:
    """
    Итеративное расширение от исходных концептов.

    На каждом из hop_bound шагов кандидаты (соседи текущего V_x вне V_x,
    прошедшие node_filter) ранжируются по числу различных узлов V_x, из
    которых в них есть ребро; допускаются первые budget по (счёт убыв.,
    ConceptId возр.). budget=None снимает ограничение.
    node_filter - булева маска длины |V|; исходные концепты допускаются всегда.
    """
    source_ids = _validate_sources(graph, sources)
    num_concepts = graph.num_concepts
    in_set = np.zeros(num_concepts, dtype=bool)
    in_set[source_ids] = True
    members = source_ids

    for _ in range(hop_bound):
        idx = graph.edge_indices(members)
        if idx.size == 0:
            break
        heads = graph.heads[idx].astype(np.int64)
        tails = graph.tails[idx].astype(np.int64)
        keep = ~in_set[tails]
        if node_filter is not None:
            keep &= node_filter[tails]
        if not keep.any():
            break
        # различные пары (кандидат, посетивший узел)
        pairs = np.unique(tails[keep] * num_concepts + heads[keep])
        candidates, counts = np.unique(pairs // num_concepts, return_counts=True)
        if budget is not None and candidates.size > budget:
            order = np.lexsort((candidates, -counts))[:budget]
            candidates = np.sort(candidates[order])
        in_set[candidates] = True
        members = np.concatenate([members, candidates])

    nodes = np.sort(members)
    idx = graph.edge_indices(nodes)
    idx = idx[in_set[graph.tails[idx]]]
    heads = graph.heads[idx].astype(np.int64)
    rels = graph.rels[idx].astype(np.int64)
    tails = graph.tails[idx].astype(np.int64)

    head_loc = np.searchsorted(nodes, heads)
    tail_loc = np.searchsorted(nodes, tails)
    offsets, targets, _ = _csr(len(nodes), head_loc, tail_loc)
    distances = _bfs(offsets, targets, np.searchsorted(nodes, source_ids))

    return Subgraph(
        nodes=nodes,
        distances=distances,
        heads=heads,
        rels=rels,
        tails=tails,
        sources=tuple(int(s) for s in source_ids),
        hop_bound=hop_bound,
        budget=budget,
    )


def label_bridge_concepts(subgraph: Subgraph, targets: Iterable[int]) -> Tuple[int, ...]:
    """B_{x->y} = (C_y - C_x) ∩ V_x, по возрастанию ConceptId."""
    unique = set(int(c) for c in targets) - set(subgraph.sources)
    return tuple(sorted(c for c in unique if subgraph.contains(c)))


def _count_paths(dist: np.ndarray, head_loc: np.ndarray, tail_loc: np.ndarray, on_path: np.ndarray, start: int) -> np.ndarray:
    """Число кратчайших путей от start по рёбрам on_path (параллельные рёбра различаются)."""
    sigma = np.zeros(len(dist), dtype=np.float64)
    sigma[start] = 1.0
    if not on_path.any():
        return sigma
    layer_of_edge = dist[tail_loc]
    for layer in range(1, int(layer_of_edge[on_path].max()) + 1):
        sel = on_path & (layer_of_edge == layer)
        np.add.at(sigma, tail_loc[sel], sigma[head_loc[sel]])
    return sigma


def _enumerate_paths(
    start: int,
    goal: int,
    out_offsets: np.ndarray,
    out_edges: np.ndarray,
    tail_loc: np.ndarray,
    on_path: np.ndarray,
    limit: int,
) -> List[List[int]]:
    """Перебор путей start -> goal по рёбрам on_path в детерминированном порядке."""
    paths: List[List[int]] = []
    stack: List[Tuple[int, List[int]]] = [(start, [])]
    while stack and len(paths) < limit:
        node, path = stack.pop()
        if node == goal:
            paths.append(path)
            continue
        edges = out_edges[out_offsets[node] : out_offsets[node + 1]]
        for edge in reversed(edges[on_path[edges]].tolist()):
            stack.append((int(tail_loc[edge]), path + [edge]))
    return paths


def extract_supervision_paths(
    subgraph: Subgraph,
    bridge: Iterable[int],
    path_cap: int = DEFAULT_PATH_CAP,
) -> SupervisionSet:
    """
    Положительные тройки: объединение всех троек на всех кратчайших путях
    от каждого источника до каждого концепта-моста (длина считается отдельно
    для каждой пары). Если число путей для моста превышает path_cap,
    берутся первые path_cap путей и мост попадает в truncated.
    """
    bridge = tuple(sorted(int(c) for c in bridge))
    if not bridge or subgraph.num_edges == 0:
        return SupervisionSet(bridge=bridge, positives=frozenset())

    n = subgraph.num_nodes
    head_loc, tail_loc = subgraph.edge_local()
    fwd_offsets, fwd_targets, out_edges = _csr(n, head_loc, tail_loc)
    rev_offsets, rev_targets, _ = _csr(n, tail_loc, head_loc)

    source_loc = subgraph.local(subgraph.sources)
    source_dist = {int(s): _bfs(fwd_offsets, fwd_targets, [int(s)]) for s in source_loc}

    positive = np.zeros(subgraph.num_edges, dtype=bool)
    truncated: List[int] = []
    for concept in bridge:
        goal = int(subgraph.local([concept])[0])
        to_goal = _bfs(rev_offsets, rev_targets, [goal])
        per_source = []
        total_paths = 0.0
        for s, dist in source_dist.items():
            if dist[goal] <= 0:
                continue
            on_path = (
                (dist[head_loc] >= 0)
                & (dist[tail_loc] == dist[head_loc] + 1)
                & (to_goal[tail_loc] >= 0)
                & (dist[tail_loc] + to_goal[tail_loc] == dist[goal])
            )
            total_paths += _count_paths(dist, head_loc, tail_loc, on_path, s)[goal]
            per_source.append((s, on_path))

        if total_paths <= path_cap:
            for _, on_path in per_source:
                positive |= on_path
            continue

        truncated.append(concept)
        remaining = path_cap
        for s, on_path in per_source:
            if remaining <= 0:
                break
            for path in _enumerate_paths(s, goal, fwd_offsets, out_edges, tail_loc, on_path, remaining):
                positive[path] = True
                remaining -= 1
        logger.debug("Перебор путей до %d обрезан на %d (всего %.0f)", concept, path_cap, total_paths)

    positives = frozenset(subgraph.triple(i) for i in np.flatnonzero(positive))
    return SupervisionSet(bridge=bridge, positives=positives, truncated=tuple(truncated))


@dataclass
class HopReport:
    """Распределение минимального числа шагов до уникальных концептов объяснения."""

    concept_histogram: Counter = field(default_factory=Counter)
    example_histogram: Counter = field(default_factory=Counter)
    nodes_by_hop: Dict[int, float] = field(default_factory=dict)
    num_examples: int = 0

    def fraction_within(self, max_hop: int, by: str = "concept") -> float:
        histogram = self.concept_histogram if by == "concept" else self.example_histogram
        reachable = sum(v for k, v in histogram.items() if k != "unreachable")
        if not reachable:
            return 0.0
        return sum(v for k, v in histogram.items() if k != "unreachable" and int(k) <= max_hop) / reachable

    def as_dict(self) -> dict:
        def ordered(histogram: Counter) -> dict:
            numeric = sorted((k for k in histogram if k != "unreachable"), key=int)
            keys = numeric + (["unreachable"] if "unreachable" in histogram else [])
            return {str(k): histogram[k] for k in keys}

        return {
            "num_examples": self.num_examples,
            "concept_histogram": ordered(self.concept_histogram),
            "example_histogram": ordered(self.example_histogram),
            "nodes_by_hop": {str(k): v for k, v in sorted(self.nodes_by_hop.items())},
        }


def hop_requirements(
    graph: KnowledgeGraph,
    examples: Sequence[Example],
    max_hops: Optional[int] = None,
    size_hops: int = DEFAULT_HOP_BOUND,
    allowed: Optional[np.ndarray] = None,
) -> HopReport:
    """
    Для каждого концепта C_y - C_x минимальное расстояние от источников по
    полному графу; агрегаты по концептам и по примерам (максимум по
    достижимым концептам примера), плюс средний размер необрезанного
    подграфа на каждом шаге 0..size_hops. allowed ограничивает подсчёт
    размеров концептами словаря данных.
    """
    report = HopReport()
    size_sums = np.zeros(size_hops + 1, dtype=np.float64)
    horizon = None if max_hops is None else max(max_hops, size_hops)
    for example in examples:
        if not example.source_concepts or example.target_concepts is None:
            continue
        report.num_examples += 1
        dist = graph_distances(graph, example.source_concepts, horizon)
        counted = dist if allowed is None else np.where(allowed | (dist == 0), dist, UNREACHABLE)
        for hop in range(size_hops + 1):
            size_sums[hop] += np.count_nonzero((counted >= 0) & (counted <= hop))

        hops = []
        for concept in sorted(set(example.target_concepts) - set(example.source_concepts)):
            d = int(dist[concept])
            if d == UNREACHABLE or (max_hops is not None and d > max_hops):
                report.concept_histogram["unreachable"] += 1
            else:
                report.concept_histogram[str(d)] += 1
                hops.append(d)
        if hops:
            report.example_histogram[str(max(hops))] += 1
        elif set(example.target_concepts) - set(example.source_concepts):
            report.example_histogram["unreachable"] += 1

    if report.num_examples:
        report.nodes_by_hop = {hop: float(size_sums[hop] / report.num_examples) for hop in range(size_hops + 1)}
    return report
