"""
Извлечение концептов-мостов: оценка троек, маршрутизация по монотонным
путям, деактивация узлов, отбор концептов и функции потерь.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.numeric import binary_cross_entropy, sigmoid

from . import encoder
from .alignment import tokenize
from .encoder import ConceptTable, Gradients, ModelParams, StatementEncoding
from .errors import ConfigError, NumericalInstabilityError, SequenceLengthError
from .kg_store import KnowledgeGraph, Triple
from .subgraph import Example, Subgraph, SupervisionSet
from .vocab import UNK, TokenVocab

if TYPE_CHECKING:
    from .subgraph_cache import CacheEntry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lambda_triple: float = 1.0
    lambda_concept: float = 1.0
    k1: int = 30
    k2: int = 3
    lr: float = 1e-3
    epochs: int = 3
    batch_size: int = 4
    warmup: float = 0.1
    seed: int = 42
    negative_sample_rate: Optional[float] = None
    use_routing: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        if self.lambda_triple < 0 or self.lambda_concept < 0:
            raise ConfigError("Коэффициенты потерь должны быть неотрицательными")
        if self.k1 <= 0 or self.k2 <= 0 or self.k2 > self.k1:
            raise ConfigError(f"Нужно 0 < K2 <= K1, получено K1={self.k1}, K2={self.k2}")
        if self.epochs <= 0 or self.batch_size <= 0 or self.workers <= 0:
            raise ConfigError("epochs, batch_size и workers должны быть положительными")
        if self.lr < 0 or not 0.0 <= self.warmup <= 1.0:
            raise ConfigError("lr >= 0 и 0 <= warmup <= 1")
        if self.negative_sample_rate is not None and not 0.0 < self.negative_sample_rate <= 1.0:
            raise ConfigError("negative_sample_rate должен лежать в (0, 1]")


@dataclass
class PreparedSample:
    """Пример в виде, готовом для модели: индексы токенов и локальные индексы рёбер."""

    example: Example
    subgraph: Subgraph
    supervision: SupervisionSet
    token_ids: np.ndarray
    concept_tokens: List[np.ndarray]
    head_loc: np.ndarray
    tail_loc: np.ndarray
    positive: np.ndarray
    bridge_mask: np.ndarray
    is_source: np.ndarray


def concept_token_ids(surface: str, vocab: TokenVocab) -> np.ndarray:
    tokens = tokenize(surface) or [UNK]
    return vocab.encode(tokens)


def prepare_sample(entry: "CacheEntry", graph: KnowledgeGraph, vocab: TokenVocab, max_len: int) -> PreparedSample:
    """Утверждение длиннее max_len не обрезается: SequenceLengthError."""
    example, subgraph, supervision = entry.example, entry.subgraph, entry.supervision
    tokens = list(example.statement_tokens)
    if len(tokens) > max_len:
        raise SequenceLengthError(len(tokens), max_len)
    head_loc, tail_loc = subgraph.edge_local()
    bridge_mask = np.zeros(subgraph.num_nodes, dtype=bool)
    if supervision.bridge:
        bridge_mask[subgraph.local(supervision.bridge)] = True
    return PreparedSample(
        example=example,
        subgraph=subgraph,
        supervision=supervision,
        token_ids=vocab.encode(tokens),
        concept_tokens=[concept_token_ids(graph.surfaces[int(c)], vocab) for c in subgraph.nodes],
        head_loc=head_loc,
        tail_loc=tail_loc,
        positive=subgraph.edge_mask(supervision.positives),
        bridge_mask=bridge_mask,
        is_source=subgraph.distances == 0,
    )


@dataclass
class LossTerm:
    value: float
    warning: bool = False

    def __float__(self) -> float:
        return self.value


@dataclass
class Coverage:
    """Сколько концептов-мостов пережило деактивацию."""

    bridges: int = 0
    covered: int = 0

    def add(self, other: "Coverage") -> None:
        self.bridges += other.bridges
        self.covered += other.covered

    @property
    def ratio(self) -> float:
        return self.covered / self.bridges if self.bridges else 0.0


def _triple_logits(sample: PreparedSample, concepts: ConceptTable, encoding: StatementEncoding, params: ModelParams):
    d2 = 2 * params.d
    q = params["W_2"] @ encoding.h_x
    H_c = concepts.H_c
    logits = (
        H_c[sample.head_loc] @ q[:d2]
        + params["W_r"][sample.subgraph.rels] @ q[d2 : d2 + params.d]
        + H_c[sample.tail_loc] @ q[d2 + params.d :]
    )
    return logits, q


def score_triples(
    sample: PreparedSample,
    encoding: StatementEncoding,
    concepts: ConceptTable,
    params: ModelParams,
) -> np.ndarray:
    """P(e|x) = σ(h_e W_2 h_x^T), h_e = [h_head; h_r; h_tail], в порядке рёбер подграфа."""
    logits, _ = _triple_logits(sample, concepts, encoding, params)
    return sigmoid(logits)


def triple_loss(triple_prob: np.ndarray, positive: np.ndarray, weight: Optional[np.ndarray] = None) -> LossTerm:
    """Бинарная кросс-энтропия по всем тройкам подграфа."""
    if len(triple_prob) == 0:
        logger.warning("Пустой подграф: потеря по тройкам равна нулю")
        return LossTerm(0.0, warning=True)
    if weight is not None:
        triple_prob, positive = triple_prob[weight], positive[weight]
    return LossTerm(binary_cross_entropy(triple_prob, positive))


def route_paths(subgraph: Subgraph, triple_prob: np.ndarray) -> np.ndarray:
    """
    s(c) - среднее по всем монотонным путям длины d_c от источников до c
    от средней вероятности троек пути. Считается рекуррентно по слоям:
    N(c) = Σ N(u), S(c) = Σ [S(u) + N(u)·P(u->c)], s(c) = S(c) / (N(c)·d_c).
    Для источников и монотонно недостижимых узлов s = 0.
    """
    dist = subgraph.distances
    n = subgraph.num_nodes
    counts = np.zeros(n, dtype=np.float64)
    sums = np.zeros(n, dtype=np.float64)
    counts[dist == 0] = 1.0
    if subgraph.num_edges:
        head, tail = subgraph.edge_local()
        monotone = (dist[head] >= 0) & (dist[tail] == dist[head] + 1)
        prob = np.asarray(triple_prob, dtype=np.float64)
        for layer in range(1, int(dist.max(initial=0)) + 1):
            sel = monotone & (dist[tail] == layer)
            if not sel.any():
                continue
            h, t = head[sel], tail[sel]
            np.add.at(sums, t, sums[h] + counts[h] * prob[sel])
            np.add.at(counts, t, counts[h])
    routing = np.zeros(n, dtype=np.float64)
    ok = (dist >= 1) & (counts > 0)
    routing[ok] = sums[ok] / (counts[ok] * dist[ok])
    return routing


def deactivate(subgraph: Subgraph, routing: np.ndarray, k1: Optional[int]) -> np.ndarray:
    """
    Локальные индексы top-K1 неисходных узлов по (s убыв., ConceptId возр.).
    k1=None оставляет всех кандидатов в том же порядке.
    """
    candidates = np.flatnonzero(subgraph.distances != 0)
    order = np.lexsort((subgraph.nodes[candidates], -routing[candidates]))
    ranked = candidates[order]
    return ranked if k1 is None else ranked[:k1]


@dataclass
class Selection:
    active: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    ranked: List[Tuple[int, float]]
    warning: bool = False


def select_concepts(
    sample: PreparedSample,
    active: np.ndarray,
    concepts: ConceptTable,
    encoding: StatementEncoding,
    params: ModelParams,
    k2: int,
) -> Selection:
    """P(c|x) = σ(h_c W_3 h_x^T) для активных концептов; top-K2 по (P убыв., ConceptId возр.)."""
    if len(active) == 0:
        logger.warning("Пример %s: пустое множество активных концептов", sample.example.id)
        empty = np.zeros(0)
        return Selection(active, empty, empty, [], warning=True)
    logits = concepts.H_c[active] @ (params["W_3"] @ encoding.h_x)
    probs = sigmoid(logits)
    ids = sample.subgraph.nodes[active]
    order = np.lexsort((ids, -logits))[:k2]
    ranked = [(int(ids[i]), float(probs[i])) for i in order]
    return Selection(active, logits, probs, ranked)


def concept_loss(probs: np.ndarray, labels: np.ndarray, total_bridges: Optional[int] = None) -> Tuple[LossTerm, Coverage]:
    """
    BCE по активным концептам с метками принадлежности B_{x->y}. Мосты вне
    активного множества в сумму не входят и учитываются только в Coverage.
    """
    labels = np.asarray(labels, dtype=bool)
    covered = int(labels.sum())
    coverage = Coverage(bridges=covered if total_bridges is None else total_bridges, covered=covered)
    if len(probs) == 0:
        return LossTerm(0.0, warning=True), coverage
    return LossTerm(binary_cross_entropy(probs, labels)), coverage


def total_loss(example_losses: Sequence[Tuple[float, float]], lambda_triple: float, lambda_concept: float) -> float:
    """λ1·L_triple + λ2·L_concept, среднее по примерам пакета."""
    if not example_losses:
        return 0.0
    return float(np.mean([lambda_triple * float(lt) + lambda_concept * float(lc) for lt, lc in example_losses]))


@dataclass
class ExampleForward:
    sample: PreparedSample
    encoding: StatementEncoding
    concepts: ConceptTable
    triple_logits: np.ndarray
    triple_prob: np.ndarray
    triple_weight: np.ndarray
    routing: np.ndarray
    selection: Selection
    l_triple: LossTerm
    l_concept: LossTerm
    coverage: Coverage
    lambda_triple: float
    lambda_concept: float

    @property
    def loss(self) -> float:
        return self.lambda_triple * self.l_triple.value + self.lambda_concept * self.l_concept.value


def forward_example(
    sample: PreparedSample,
    params: ModelParams,
    config: TrainConfig,
    rng: Optional[np.random.Generator] = None,
) -> ExampleForward:
    """
    Полный прямой проход по примеру. Маршрутизация и срез top-K1 -
    детерминированное преобразование вероятностей без градиента.
    """
    encoding = encoder.encode_statement(sample.token_ids, params)
    concepts = encoder.encode_concepts(sample.concept_tokens, sample.subgraph.distances, encoding, params)
    logits, _ = _triple_logits(sample, concepts, encoding, params)
    prob = sigmoid(logits)

    weight = np.ones(len(prob), dtype=bool)
    if config.negative_sample_rate is not None and rng is not None:
        weight = sample.positive | (rng.random(len(prob)) < config.negative_sample_rate)
    l_triple = triple_loss(prob, sample.positive, weight)

    routing = route_paths(sample.subgraph, prob)
    active = deactivate(sample.subgraph, routing, config.k1 if config.use_routing else None)
    selection = select_concepts(sample, active, concepts, encoding, params, config.k2)
    l_concept, coverage = concept_loss(
        selection.probs, sample.bridge_mask[active], total_bridges=int(sample.bridge_mask.sum())
    )

    forward = ExampleForward(
        sample=sample,
        encoding=encoding,
        concepts=concepts,
        triple_logits=logits,
        triple_prob=prob,
        triple_weight=weight,
        routing=routing,
        selection=selection,
        l_triple=l_triple,
        l_concept=l_concept,
        coverage=coverage,
        lambda_triple=config.lambda_triple,
        lambda_concept=config.lambda_concept,
    )
    if not np.isfinite(forward.loss):
        raise NumericalInstabilityError("loss")
    return forward


def backward_example(forward: ExampleForward, params: ModelParams, grads: Optional[Gradients] = None) -> Gradients:
    """Градиенты λ1·L_triple + λ2·L_concept по всем параметрам."""
    sample, h_x = forward.sample, forward.encoding.h_x
    d, d2 = params.d, 2 * params.d
    H_c = forward.concepts.H_c
    dH_c = np.zeros_like(H_c)
    dh_x = np.zeros_like(h_x)
    grads = grads if grads is not None else params.zeros_like()

    if len(forward.triple_prob):
        g = forward.lambda_triple * (forward.triple_prob - sample.positive) * forward.triple_weight
        q = params["W_2"] @ h_x
        np.add.at(dH_c, sample.head_loc, np.outer(g, q[:d2]))
        np.add.at(dH_c, sample.tail_loc, np.outer(g, q[d2 + d :]))
        np.add.at(grads["W_r"], sample.subgraph.rels, np.outer(g, q[d2 : d2 + d]))
        dq = np.concatenate(
            [g @ H_c[sample.head_loc], g @ params["W_r"][sample.subgraph.rels], g @ H_c[sample.tail_loc]]
        )
        grads["W_2"] += np.outer(dq, h_x)
        dh_x += params["W_2"].T @ dq

    selection = forward.selection
    if len(selection.active):
        labels = sample.bridge_mask[selection.active]
        g = forward.lambda_concept * (selection.probs - labels)
        r = params["W_3"] @ h_x
        np.add.at(dH_c, selection.active, np.outer(g, r))
        pooled = g @ H_c[selection.active]
        grads["W_3"] += np.outer(pooled, h_x)
        dh_x += params["W_3"].T @ pooled

    return encoder.backward(forward.encoding, forward.concepts, dH_c, dh_x, params, grads)


@dataclass
class ScoredSubgraph:
    subgraph: Subgraph
    triple_prob: np.ndarray
    routing: np.ndarray
    active: Tuple[int, ...]
    selected: List[Tuple[int, float]]
    coverage: Coverage = field(default_factory=Coverage)

    def triple_prob_map(self) -> Dict[Triple, float]:
        return {self.subgraph.triple(i): float(p) for i, p in enumerate(self.triple_prob)}

    def routing_map(self) -> Dict[int, float]:
        return {int(c): float(s) for c, s in zip(self.subgraph.nodes, self.routing)}

    @property
    def ranking(self) -> List[int]:
        return [cid for cid, _ in self.selected]


def extract(sample: PreparedSample, params: ModelParams, config: TrainConfig, k2: Optional[int] = None) -> ScoredSubgraph:
    """Прямой проход без обучения; k2 позволяет вернуть более длинный рейтинг (для P/R@N)."""
    if k2 is not None:
        config = replace(config, k2=min(k2, config.k1))
    forward = forward_example(sample, params, config)
    return ScoredSubgraph(
        subgraph=sample.subgraph,
        triple_prob=forward.triple_prob,
        routing=forward.routing,
        active=tuple(int(c) for c in sample.subgraph.nodes[forward.selection.active]),
        selected=forward.selection.ranked,
        coverage=forward.coverage,
    )


def top_paths(subgraph: Subgraph, triple_prob: np.ndarray, concept: int, k: int = 3) -> List[Tuple[float, List[Triple]]]:
    """
    k лучших монотонных путей от источников до концепта по оценке пути
    (средняя вероятность троек). Все монотонные пути до c имеют длину d_c,
    поэтому сравнение по сумме эквивалентно сравнению по среднему.
    """
    goal = int(subgraph.local([concept])[0])
    dist = subgraph.distances
    if dist[goal] <= 0:
        return []
    head, tail = subgraph.edge_local()
    monotone = (dist[head] >= 0) & (dist[tail] == dist[head] + 1)
    best: Dict[int, List[Tuple[float, Tuple[int, ...]]]] = {int(i): [(0.0, ())] for i in np.flatnonzero(dist == 0)}
    for layer in range(1, int(dist[goal]) + 1):
        incoming: Dict[int, List[Tuple[float, Tuple[int, ...]]]] = {}
        for e in np.flatnonzero(monotone & (dist[tail] == layer)):
            for score, path in best.get(int(head[e]), []):
                incoming.setdefault(int(tail[e]), []).append((score + float(triple_prob[e]), path + (int(e),)))
        for node, candidates in incoming.items():
            candidates.sort(key=lambda item: (-item[0], item[1]))
            best[node] = candidates[:k]
    length = int(dist[goal])
    return [(score / length, [subgraph.triple(e) for e in path]) for score, path in best.get(goal, [])]
