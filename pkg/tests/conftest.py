from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pytest

from bridge_extractor import RelationVocab, load_conceptnet, load_stopwords
from bridge_extractor.encoder import EncoderConfig, ModelParams
from bridge_extractor.extractor import prepare_sample
from bridge_extractor.kg_store import KnowledgeGraph
from bridge_extractor.subgraph import (
    Example,
    extract_supervision_paths,
    label_bridge_concepts,
    retrieve_subgraph,
)
from bridge_extractor.subgraph_cache import CacheEntry
from bridge_extractor.vocab import build_vocab

# утверждения ConceptNet: 7 принятых, по одной иностранной, с неизвестным
# отношением, с петлёй и одна испорченная строка
TOY_ASSERTIONS = "\n".join(
    [
        "/a/1\t/r/AtLocation\t/c/en/fish\t/c/en/water\t{}",
        "/a/2\t/r/CapableOf\t/c/en/fish\t/c/en/swim\t{}",
        "/a/3\t/r/HasA\t/c/en/bird\t/c/en/wing\t{}",
        "/a/4\t/r/CapableOf\t/c/en/bird\t/c/en/fly\t{}",
        "/a/5\t/r/RelatedTo\t/c/en/water\t/c/en/wet\t{}",
        "/a/6\t/r/AtLocation\t/c/en/ice_cream\t/c/en/freezer\t{}",
        "/a/7\t/r/IsA\t/c/fr/poisson\t/c/en/fish\t{}",
        "/a/8\t/r/ExternalURL\t/c/en/fish\t/c/en/fish_wiki\t{}",
        "/a/9\t/r/RelatedTo\t/c/en/fish\t/c/en/fish\t{}",
        "garbage line",
        "/a/10\t/r/Synonym\t/c/en/fly\t/c/en/soar\t{}",
    ]
) + "\n"

TOY_SURFACES = ("fish", "water", "swim", "bird", "wing", "fly", "wet", "ice cream", "freezer", "soar")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: долгая проверка обучения на синтетическом корпусе")


@pytest.fixture(scope="session")
def relation_vocab() -> RelationVocab:
    return RelationVocab.from_file()


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture
def toy_assertions(tmp_path) -> Path:
    path = tmp_path / "assertions.csv"
    path.write_text(TOY_ASSERTIONS, encoding="utf-8")
    return path


@pytest.fixture
def toy_graph(toy_assertions, relation_vocab) -> KnowledgeGraph:
    return load_conceptnet(toy_assertions, relation_vocab)


def make_graph(
    num_nodes: int,
    forward: Sequence[Tuple[int, int, int]],
    vocab: Optional[RelationVocab] = None,
    surfaces: Optional[Sequence[str]] = None,
) -> KnowledgeGraph:
    """Граф из готовых прямых троек; поверхности n0, n1, ... служат и основами."""
    vocab = vocab or RelationVocab()
    surfaces = list(surfaces) if surfaces is not None else [f"n{i}" for i in range(num_nodes)]
    return KnowledgeGraph.build(vocab, surfaces, np.asarray(forward, dtype=np.int64).reshape(-1, 3), stems=surfaces)


def random_graph(rng: np.random.Generator, max_nodes: int = 50, num_rels: int = 4) -> KnowledgeGraph:
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(0, 2 * n + 1))
    heads = rng.integers(0, n, size=m)
    tails = rng.integers(0, n, size=m)
    rels = rng.integers(0, num_rels, size=m)
    keep = heads != tails
    return make_graph(n, np.stack([heads[keep], rels[keep], tails[keep]], axis=1))


def toy_instance(
    seed: int,
    d: int = 4,
    num_blocks: int = 1,
    num_nodes: int = 12,
    use_context_emb: bool = True,
    use_distance_emb: bool = True,
):
    """
    Маленький пример с подграфом, разметкой и параметрами: связный случайный
    граф, часть концептов из двух токенов, утверждение из поверхностей источников.
    """
    rng = np.random.default_rng(seed)
    surfaces = [f"n{i}" if i % 3 else f"n{i} big" for i in range(num_nodes)]
    forward = [(i, int(rng.integers(0, 4)), int(rng.integers(0, i))) for i in range(1, num_nodes)]
    for _ in range(num_nodes):
        h, t = rng.integers(0, num_nodes, size=2)
        if h != t:
            forward.append((int(h), int(rng.integers(0, 4)), int(t)))
    graph = make_graph(num_nodes, forward, surfaces=surfaces)

    sources = (0, 1)
    subgraph = retrieve_subgraph(graph, sources, hop_bound=3, budget=None)
    candidates = [int(c) for c in subgraph.nodes if c not in sources]
    targets = tuple(sorted(rng.choice(candidates, size=min(2, len(candidates)), replace=False).tolist()))
    bridge = label_bridge_concepts(subgraph, targets)
    supervision = extract_supervision_paths(subgraph, bridge)
    tokens = tuple(" ".join(["the", surfaces[0], "and", surfaces[1], "are", "odd"]).split())
    example = Example(f"toy-{seed}", tokens, ("ref",), sources, targets)
    entry = CacheEntry(example, subgraph, supervision)

    vocab = build_vocab([tokens, *(s.split() for s in surfaces)])
    config = EncoderConfig(
        d=d,
        num_blocks=num_blocks,
        max_len=16,
        max_dist=3,
        use_context_emb=use_context_emb,
        use_distance_emb=use_distance_emb,
    )
    params = ModelParams.init(config, len(vocab), graph.vocab.num_relations, rng)
    sample = prepare_sample(entry, graph, vocab, config.max_len)
    return graph, sample, params


@pytest.fixture
def instance():
    return toy_instance(0)


def enumerate_monotone_paths(distances: np.ndarray, edges: List[Tuple[int, int, int]]) -> dict:
    """Все монотонные пути от источников: узел -> список списков индексов рёбер."""
    out = {}
    for i, (h, _, t) in enumerate(edges):
        if distances[h] >= 0 and distances[t] == distances[h] + 1:
            out.setdefault(h, []).append(i)
    paths = {}
    stack = [(int(s), []) for s in np.flatnonzero(distances == 0)]
    while stack:
        node, path = stack.pop()
        if path:
            paths.setdefault(node, []).append(path)
        for e in out.get(node, []):
            stack.append((edges[e][2], path + [e]))
    return paths


def planted_samples(corpus, out_dir: Path):
    """Граф и подготовленные примеры синтетического корпуса по всем наборам."""
    from itertools import chain

    from bridge_extractor import load_dataset, make_example
    from bridge_extractor.alignment import tokenize
    from bridge_extractor.synthetic import write_planted_corpus

    paths = write_planted_corpus(corpus, out_dir)
    graph = load_conceptnet(paths["assertions"], RelationVocab.from_file())
    stopwords = load_stopwords()
    entries = {}
    for split in ("train", "dev", "test"):
        entries[split] = []
        for record in load_dataset(paths[split]):
            example = make_example(record, graph, stopwords)
            subgraph = retrieve_subgraph(graph, example.source_concepts)
            bridge = label_bridge_concepts(subgraph, example.target_concepts or ())
            entries[split].append(CacheEntry(example, subgraph, extract_supervision_paths(subgraph, bridge)))
    vocab = build_vocab(
        chain((e.example.statement_tokens for e in entries["train"]), (tokenize(s) for s in graph.surfaces))
    )
    samples = {
        split: [prepare_sample(e, graph, vocab, EncoderConfig().max_len) for e in items] for split, items in entries.items()
    }
    return graph, vocab, samples


@pytest.fixture(scope="session")
def small_planted(tmp_path_factory):
    from bridge_extractor import generate_planted_corpus

    corpus = generate_planted_corpus(seed=3, num_nodes=60, num_train=12, num_dev=4, num_test=6)
    return planted_samples(corpus, tmp_path_factory.mktemp("planted_small"))
