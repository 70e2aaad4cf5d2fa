"""
Кэш подграфов: извлекаем один раз, обучаем много раз.

    magic b"BKGS", u32 версия, u64 число записей,
    далее записи: u64 длина + полезная нагрузка:
        JSON-метаданные (u64 длина + utf-8),
        u64 n_nodes, u64 n_edges,
        nodes i64 x n, distances i64 x n,
        heads/rels/tails i64 x m, positive u8 x m
"""
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Union

import numpy as np

from utils.atomic_io import atomic_write
from utils.binary import ByteReader, pack_array, pack_blob

from .errors import ArtifactError, CacheFormatError
from .subgraph import Example, Subgraph, SupervisionSet

logger = logging.getLogger(__name__)

MAGIC = b"BKGS"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class CacheEntry:
    example: Example
    subgraph: Subgraph
    supervision: SupervisionSet


def _encode(entry: CacheEntry) -> bytes:
    example, subgraph, supervision = entry.example, entry.subgraph, entry.supervision
    meta = {
        "id": example.id,
        "statement_tokens": list(example.statement_tokens),
        "explanations": list(example.explanations),
        "sources": list(example.source_concepts),
        "targets": None if example.target_concepts is None else list(example.target_concepts),
        "subgraph_sources": list(subgraph.sources),
        "hop_bound": subgraph.hop_bound,
        "budget": subgraph.budget,
        "bridge": list(supervision.bridge),
        "truncated": list(supervision.truncated),
    }
    positive = subgraph.edge_mask(supervision.positives).astype(np.uint8)
    parts = [
        pack_blob(json.dumps(meta, sort_keys=True, ensure_ascii=False).encode("utf-8")),
        struct.pack("<QQ", subgraph.num_nodes, subgraph.num_edges),
        pack_array(subgraph.nodes, "<i8"),
        pack_array(subgraph.distances, "<i8"),
        pack_array(subgraph.heads, "<i8"),
        pack_array(subgraph.rels, "<i8"),
        pack_array(subgraph.tails, "<i8"),
        pack_array(positive, "u1"),
    ]
    return b"".join(parts)


def _decode(payload: bytes, source: str) -> CacheEntry:
    reader = ByteReader(payload, CacheFormatError, source)
    meta = json.loads(reader.blob().decode("utf-8"))
    n_nodes, n_edges = reader.unpack("<QQ")
    nodes = reader.array("<i8", n_nodes)
    distances = reader.array("<i8", n_nodes)
    heads = reader.array("<i8", n_edges)
    rels = reader.array("<i8", n_edges)
    tails = reader.array("<i8", n_edges)
    positive = reader.array("u1", n_edges).astype(bool)

    subgraph = Subgraph(
        nodes=nodes,
        distances=distances,
        heads=heads,
        rels=rels,
        tails=tails,
        sources=tuple(meta["subgraph_sources"]),
        hop_bound=meta["hop_bound"],
        budget=meta["budget"],
    )
    example = Example(
        id=meta["id"],
        statement_tokens=tuple(meta["statement_tokens"]),
        explanations=tuple(meta["explanations"]),
        source_concepts=tuple(meta["sources"]),
        target_concepts=None if meta["targets"] is None else tuple(meta["targets"]),
    )
    supervision = SupervisionSet(
        bridge=tuple(meta["bridge"]),
        positives=frozenset(subgraph.triple(i) for i in np.flatnonzero(positive)),
        truncated=tuple(meta["truncated"]),
    )
    return CacheEntry(example, subgraph, supervision)


def write_cache(entries: Iterable[CacheEntry], path: Union[str, Path]) -> int:
    encoded = [_encode(entry) for entry in entries]
    with atomic_write(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", FORMAT_VERSION, len(encoded)))
        for payload in encoded:
            f.write(pack_blob(payload))
    logger.info("Кэш подграфов записан: %s (%d примеров)", path, len(encoded))
    return len(encoded)


def iter_cache(path: Union[str, Path]) -> Iterator[CacheEntry]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ArtifactError(f"Не удалось прочитать кэш {path}: {e}") from e
    reader = ByteReader(data, CacheFormatError, str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise CacheFormatError(f"{path}: не является кэшем подграфов")
    version, count = reader.unpack("<IQ")
    if version != FORMAT_VERSION:
        raise CacheFormatError(f"{path}: версия кэша {version}, ожидается {FORMAT_VERSION}")
    for _ in range(count):
        yield _decode(reader.blob(), str(path))


def read_cache(path: Union[str, Path]) -> List[CacheEntry]:
    return list(iter_cache(path))
