"""
Неизменяемое хранилище графа знаний ConceptNet с индексом смежности (CSR).
"""
import gzip
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from .alignment import Stemmer, default_stemmer, stem_phrase
from .errors import ConfigError, InvalidConceptIdError
from .relations import CATCH_ALL_RELATION, RelationVocab

logger = logging.getLogger(__name__)

UNKNOWN_RELATION_POLICIES = ("skip", CATCH_ALL_RELATION)


class Triple(NamedTuple):
    head: int
    rel: int
    tail: int


@dataclass
class IngestionReport:
    rows_total: int = 0
    rows_kept: int = 0
    rows_foreign: int = 0
    rows_unknown_relation: int = 0
    rows_self_loop: int = 0
    malformed: List[Tuple[int, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "rows_total": self.rows_total,
            "rows_kept": self.rows_kept,
            "rows_foreign": self.rows_foreign,
            "rows_unknown_relation": self.rows_unknown_relation,
            "rows_self_loop": self.rows_self_loop,
            "malformed": [{"line": line, "reason": reason} for line, reason in self.malformed],
        }


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class KnowledgeGraph:
    """
    Граф G = (V, E): плотные идентификаторы концептов 0..|V|-1, тройки,
    отсортированные по (head, rel, tail), и смещения offsets длины |V|+1,
    так что исходящие рёбра концепта c занимают срез offsets[c]:offsets[c+1].
    """

    vocab: RelationVocab
    surfaces: Tuple[str, ...]
    stems: Tuple[str, ...]
    heads: np.ndarray
    rels: np.ndarray
    tails: np.ndarray
    offsets: np.ndarray
    stem_index: Dict[str, Tuple[int, ...]] = field(repr=False)
    surface_index: Dict[str, int] = field(repr=False)

    @classmethod
    def build(
        cls,
        vocab: RelationVocab,
        surfaces: Sequence[str],
        forward: np.ndarray,
        stemmer: Optional[Stemmer] = None,
        stems: Optional[Sequence[str]] = None,
    ) -> "KnowledgeGraph":
        """
        Собирает граф из прямых троек (массив m x 3): дедупликация,
        добавление обратных троек, сортировка, построение смещений.
        """
        num_concepts = len(surfaces)
        forward = np.asarray(forward, dtype=np.int64).reshape(-1, 3)
        if len(forward):
            forward = np.unique(forward, axis=0)
        reverse = np.empty_like(forward)
        reverse[:, 0] = forward[:, 2]
        reverse[:, 1] = (forward[:, 1] + vocab.num_forward) % vocab.num_relations
        reverse[:, 2] = forward[:, 0]
        triples = np.concatenate([forward, reverse])
        order = np.lexsort((triples[:, 2], triples[:, 1], triples[:, 0]))
        triples = triples[order]

        counts = np.bincount(triples[:, 0], minlength=num_concepts) if len(triples) else np.zeros(num_concepts, np.int64)
        offsets = np.zeros(num_concepts + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])

        if stems is None:
            stems = [stem_phrase(s.split(), stemmer) for s in surfaces]
        stem_lists: Dict[str, List[int]] = {}
        for cid, stem in enumerate(stems):
            stem_lists.setdefault(stem, []).append(cid)

        return cls(
            vocab=vocab,
            surfaces=tuple(surfaces),
            stems=tuple(stems),
            heads=_frozen(triples[:, 0], "<i4"),
            rels=_frozen(triples[:, 1], "<i4"),
            tails=_frozen(triples[:, 2], "<i4"),
            offsets=_frozen(offsets, "<i8"),
            stem_index={k: tuple(v) for k, v in stem_lists.items()},
            surface_index={s: i for i, s in enumerate(surfaces)},
        )

    @property
    def num_concepts(self) -> int:
        return len(self.surfaces)

    @property
    def num_triples(self) -> int:
        return int(len(self.heads))

    def concept_id(self, surface: str) -> Optional[int]:
        return self.surface_index.get(surface)

    def check_id(self, concept: int) -> None:
        if not 0 <= int(concept) < self.num_concepts:
            raise InvalidConceptIdError(int(concept), self.num_concepts)

    def triple(self, index: int) -> Triple:
        return Triple(int(self.heads[index]), int(self.rels[index]), int(self.tails[index]))

    def neighbors(self, concept: int) -> Iterator[Triple]:
        """Исходящие тройки концепта в порядке хранения."""
        self.check_id(concept)
        for index in range(self.offsets[concept], self.offsets[concept + 1]):
            yield self.triple(index)

    def degree(self, concept: int) -> int:
        return int(self.offsets[concept + 1] - self.offsets[concept])

    def edge_indices(self, nodes: np.ndarray) -> np.ndarray:
        """Индексы всех исходящих троек для набора концептов (векторизовано)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        starts = self.offsets[nodes]
        lengths = self.offsets[nodes + 1] - starts
        total = int(lengths.sum())
        if total == 0:
            return np.zeros(0, dtype=np.int64)
        shift = np.repeat(starts - np.concatenate([[0], np.cumsum(lengths)[:-1]]), lengths)
        return shift + np.arange(total, dtype=np.int64)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self.vocab.merged_names == other.vocab.merged_names
            and self.surfaces == other.surfaces
            and self.stems == other.stems
            and np.array_equal(self.heads, other.heads)
            and np.array_equal(self.rels, other.rels)
            and np.array_equal(self.tails, other.tails)
            and np.array_equal(self.offsets, other.offsets)
        )

    __hash__ = None  # type: ignore[assignment]


def normalize_concept_uri(uri: str, lang: str) -> Optional[str]:
    """
    '/c/en/ice_cream/n/...' -> 'ice cream'; None для другого языка.
    Пустая поверхность поднимает ValueError.
    """
    prefix = f"/c/{lang}/"
    if not uri.startswith(prefix):
        return None
    surface = uri[len(prefix):].split("/", 1)[0].replace("_", " ").lower().strip()
    surface = " ".join(surface.split())
    if not surface:
        raise ValueError(f"пустой концепт в URI '{uri}'")
    return surface


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def load_conceptnet(
    assertions_path: Union[str, Path],
    vocab: RelationVocab,
    lang_filter: str = "en",
    unknown_relation_policy: str = "skip",
    stemmer: Optional[Stemmer] = None,
    report: Optional[IngestionReport] = None,
    show_progress: bool = False,
) -> KnowledgeGraph:
    """
    Читает файл утверждений ConceptNet (5 полей через TAB) и строит граф.

    Испорченные строки записываются в отчёт с номером строки и пропускаются.
    Идентификаторы концептов назначаются по порядку первого появления.
    """
    if unknown_relation_policy not in UNKNOWN_RELATION_POLICIES:
        raise ConfigError(f"unknown_relation_policy должен быть одним из {UNKNOWN_RELATION_POLICIES}")
    report = report if report is not None else IngestionReport()
    catch_all = vocab.merged_id(CATCH_ALL_RELATION)
    stemmer = stemmer or default_stemmer()

    concept_ids: Dict[str, int] = {}
    surfaces: List[str] = []
    heads: List[int] = []
    rels: List[int] = []
    tails: List[int] = []

    def intern(surface: str) -> int:
        cid = concept_ids.get(surface)
        if cid is None:
            cid = concept_ids[surface] = len(surfaces)
            surfaces.append(surface)
        return cid

    path = Path(assertions_path)
    with _open_text(path) as f:
        rows = tqdm(f, desc="INGEST", unit=" rows", disable=not show_progress)
        for line_no, line in enumerate(rows, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            report.rows_total += 1
            fields = line.split("\t")
            if len(fields) != 5:
                report.malformed.append((line_no, f"ожидалось 5 полей, получено {len(fields)}"))
                continue
            _, rel_uri, start_uri, end_uri, _ = fields
            if not rel_uri.startswith("/r/"):
                report.malformed.append((line_no, f"некорректный URI отношения '{rel_uri}'"))
                continue
            try:
                start = normalize_concept_uri(start_uri, lang_filter)
                end = normalize_concept_uri(end_uri, lang_filter)
            except ValueError as e:
                report.malformed.append((line_no, str(e)))
                continue
            if start is None or end is None:
                report.rows_foreign += 1
                continue

            resolved = vocab.resolve(rel_uri)
            if resolved is None:
                report.rows_unknown_relation += 1
                if unknown_relation_policy == "skip":
                    continue
                resolved = (catch_all, False)
            rel_id, swap = resolved
            if start == end:
                report.rows_self_loop += 1
                continue

            head, tail = intern(start), intern(end)
            if swap:
                head, tail = tail, head
            heads.append(head)
            rels.append(rel_id)
            tails.append(tail)
            report.rows_kept += 1

    forward = np.stack([np.asarray(heads, np.int64), np.asarray(rels, np.int64), np.asarray(tails, np.int64)], axis=1)
    graph = KnowledgeGraph.build(vocab, surfaces, forward, stemmer=stemmer)
    logger.info(
        "INGEST: %d концептов, %d троек (строк: %d, принято: %d, испорчено: %d)",
        graph.num_concepts,
        graph.num_triples,
        report.rows_total,
        report.rows_kept,
        len(report.malformed),
    )
    return graph
