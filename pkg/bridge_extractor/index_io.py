"""
Бинарный формат индекса графа.

Раскладка (все целые little-endian фиксированной ширины):

    magic        4 байта   b"BKG1"
    version      u32       FORMAT_VERSION
    checksum     32 байта  sha256 словаря (отношения, поверхности, основы)
    num_concepts u64
    num_triples  u64
    relations    u64 длина + utf-8, имена через '\\n'
    surfaces     u64 длина + utf-8, поверхности через '\\n'
    stems        u64 длина + utf-8, основы через '\\n'
    heads        i32 x num_triples
    rels         i32 x num_triples
    tails        i32 x num_triples
    offsets      i64 x (num_concepts + 1)
"""
import hashlib
import logging
import struct
from pathlib import Path
from typing import Optional, Union

from utils.atomic_io import atomic_write
from utils.binary import ByteReader, pack_array, pack_strings

from .errors import ArtifactError, IndexChecksumError, IndexTruncatedError, IndexVersionError
from .kg_store import KnowledgeGraph
from .relations import RelationVocab

logger = logging.getLogger(__name__)

MAGIC = b"BKG1"
FORMAT_VERSION = 1


def vocabulary_checksum(relation_names, surfaces, stems) -> bytes:
    digest = hashlib.sha256()
    for block in (relation_names, surfaces, stems):
        digest.update("\n".join(block).encode("utf-8"))
        digest.update(b"\0")
    return digest.digest()


def save_index(graph: KnowledgeGraph, path: Union[str, Path]) -> None:
    checksum = vocabulary_checksum(graph.vocab.merged_names, graph.surfaces, graph.stems)
    with atomic_write(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(checksum)
        f.write(struct.pack("<QQ", graph.num_concepts, graph.num_triples))
        f.write(pack_strings(graph.vocab.merged_names))
        f.write(pack_strings(graph.surfaces))
        f.write(pack_strings(graph.stems))
        for array in (graph.heads, graph.rels, graph.tails):
            f.write(pack_array(array, "<i4"))
        f.write(pack_array(graph.offsets, "<i8"))
    logger.info("Индекс сохранён: %s (%d концептов, %d троек)", path, graph.num_concepts, graph.num_triples)


def load_index(path: Union[str, Path], vocab: Optional[RelationVocab] = None) -> KnowledgeGraph:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ArtifactError(f"Не удалось прочитать индекс {path}: {e}") from e

    reader = ByteReader(data, IndexTruncatedError, str(path))
    magic = reader.take(len(MAGIC))
    if magic != MAGIC:
        raise ArtifactError(f"{path}: не является индексом графа (magic={magic!r})")
    version = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise IndexVersionError(f"{path}: версия формата {version}, ожидается {FORMAT_VERSION}")
    stored_checksum = reader.take(32)
    num_concepts, num_triples = reader.unpack("<QQ")
    relation_names = tuple(reader.strings())
    surfaces = reader.strings()
    stems = reader.strings()
    if len(surfaces) != num_concepts or len(stems) != num_concepts:
        raise IndexTruncatedError(f"{path}: число поверхностей не совпадает с заголовком")

    if vocabulary_checksum(relation_names, surfaces, stems) != stored_checksum:
        raise IndexChecksumError(f"{path}: контрольная сумма словаря не совпадает")

    heads = reader.array("<i4", num_triples)
    rels = reader.array("<i4", num_triples)
    tails = reader.array("<i4", num_triples)
    offsets = reader.array("<i8", num_concepts + 1)

    if vocab is None:
        vocab = RelationVocab(merged_names=relation_names)
    elif vocab.merged_names != relation_names:
        raise IndexChecksumError(f"{path}: набор отношений индекса не совпадает с конфигурацией")

    stem_lists = {}
    for cid, stem in enumerate(stems):
        stem_lists.setdefault(stem, []).append(cid)
    for array in (heads, rels, tails, offsets):
        array.setflags(write=False)
    return KnowledgeGraph(
        vocab=vocab,
        surfaces=tuple(surfaces),
        stems=tuple(stems),
        heads=heads,
        rels=rels,
        tails=tails,
        offsets=offsets,
        stem_index={k: tuple(v) for k, v in stem_lists.items()},
        surface_index={s: i for i, s in enumerate(surfaces)},
    )
