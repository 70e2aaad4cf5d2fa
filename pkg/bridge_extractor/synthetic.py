"""
Синтетический корпус с заложенной закономерностью.

Каждое утверждение называет одну "вещь" и содержит слова-подсказки обоих
выделенных отношений (located для atlocation, used для usedfor).
Концепты-мосты примера - ровно те, что достижимы из вещи одним ребром
выделенного отношения: её "место" и её "инструмент". Граф пишется в
формате файла утверждений ConceptNet, наборы - в формате JSONL, как
реальные данные.
"""
import json
import logging
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from utils.atomic_io import atomic_write

from .dataset import DatasetRecord, write_dataset

logger = logging.getLogger(__name__)

ID_WORDS = (
    "alfa", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliett", "kilo", "lima", "mike", "november", "oscar", "papa",
)

# вид концепта -> доля узлов графа
KIND_SHARES = {"thing": 0.53, "place": 0.14, "tool": 0.13, "part": 0.1, "trait": 0.1}

# выделенное отношение -> (URI, вид цели)
DESIGNATED = {
    "atlocation": ("/r/AtLocation", "place"),
    "usedfor": ("/r/UsedFor", "tool"),
}
STATEMENTS = (
    "{thing} is located somewhere and used with something",
    "{thing} is used with something and located somewhere",
)
EXPLANATION = "{thing} is located at {place} and used with {tool}"
RELATED_PER_THING = 2


@dataclass
class PlantedCorpus:
    assertions: List[str] = field(default_factory=list)
    train: List[DatasetRecord] = field(default_factory=list)
    dev: List[DatasetRecord] = field(default_factory=list)
    test: List[DatasetRecord] = field(default_factory=list)
    gold: Dict[str, List[str]] = field(default_factory=dict)


def _uri(surface: str) -> str:
    return "/c/en/" + surface.replace(" ", "_")


def _assertion(rel_uri: str, head: str, tail: str) -> str:
    return f"/a/[{rel_uri}/,{_uri(head)}/,{_uri(tail)}/]\t{rel_uri}\t{_uri(head)}\t{_uri(tail)}\t{{}}"


def _surfaces(num_nodes: int, rng: np.random.Generator) -> Dict[str, List[str]]:
    names = [" ".join(pair) for pair in product(ID_WORDS, repeat=2)]
    kinds: Dict[str, List[str]] = {}
    remaining = num_nodes
    for i, (kind, share) in enumerate(KIND_SHARES.items()):
        count = remaining if i == len(KIND_SHARES) - 1 else int(round(share * num_nodes))
        remaining -= count
        picked = rng.choice(len(names), size=count, replace=False)
        kinds[kind] = [f"{kind} {names[j]}" for j in sorted(picked)]
    return kinds


def generate_planted_corpus(
    seed: int = 42,
    num_nodes: int = 300,
    num_train: int = 200,
    num_dev: int = 25,
    num_test: int = 50,
) -> PlantedCorpus:
    """
    Граф: у каждой "вещи" по одному ребру atlocation к "месту", usedfor к
    "инструменту", partof к "части", hasproperty к "свойству" и несколько
    relatedto к другим вещам. Пример берёт одну вещь; эталон - её место и
    её инструмент, единственные место и инструмент на расстоянии 1.
    """
    if num_nodes < 20:
        raise ValueError("Для синтетического графа нужно хотя бы 20 узлов")
    rng = np.random.default_rng(seed)
    kinds = _surfaces(num_nodes, rng)
    things = kinds["thing"]
    corpus = PlantedCorpus()
    targets: Dict[Tuple[str, str], str] = {}

    for thing in things:
        for rel_uri, kind in DESIGNATED.values():
            target = kinds[kind][rng.integers(len(kinds[kind]))]
            targets[(thing, kind)] = target
            corpus.assertions.append(_assertion(rel_uri, thing, target))
        corpus.assertions.append(_assertion("/r/PartOf", thing, kinds["part"][rng.integers(len(kinds["part"]))]))
        corpus.assertions.append(
            _assertion("/r/HasProperty", thing, kinds["trait"][rng.integers(len(kinds["trait"]))])
        )
        others = [t for t in things if t != thing]
        for j in rng.choice(len(others), size=RELATED_PER_THING, replace=False):
            corpus.assertions.append(_assertion("/r/RelatedTo", thing, others[j]))

    splits = (("train", num_train), ("dev", num_dev), ("test", num_test))
    for split, count in splits:
        records = getattr(corpus, split)
        for k in range(count):
            thing = things[rng.integers(len(things))]
            statement = STATEMENTS[rng.integers(len(STATEMENTS))]
            place, tool = targets[(thing, "place")], targets[(thing, "tool")]
            record_id = f"{split}-{k:04d}"
            records.append(
                DatasetRecord(
                    record_id,
                    statement.format(thing=thing),
                    (EXPLANATION.format(thing=thing, place=place, tool=tool),),
                )
            )
            corpus.gold[record_id] = [place, tool]

    logger.info(
        "SYNTH: %d утверждений графа, примеров train/dev/test: %d/%d/%d",
        len(corpus.assertions),
        len(corpus.train),
        len(corpus.dev),
        len(corpus.test),
    )
    return corpus


def write_planted_corpus(corpus: PlantedCorpus, out_dir: Union[str, Path]) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "assertions": out_dir / "assertions.csv",
        "train": out_dir / "train.jsonl",
        "dev": out_dir / "dev.jsonl",
        "test": out_dir / "test.jsonl",
        "gold": out_dir / "gold.jsonl",
    }
    with atomic_write(paths["assertions"], "w") as f:
        f.write("".join(line + "\n" for line in corpus.assertions))
    for split in ("train", "dev", "test"):
        write_dataset(getattr(corpus, split), paths[split])
    with atomic_write(paths["gold"], "w") as f:
        for record_id, gold in corpus.gold.items():
            f.write(json.dumps({"id": record_id, "gold": gold}, ensure_ascii=False) + "\n")
    return paths
