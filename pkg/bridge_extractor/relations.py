"""
Словарь отношений ConceptNet: 17 объединённых типов и 17 обратных к ним.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from .errors import ConfigError

DATA_DIR = Path(__file__).resolve().parent / "data"
DEFAULT_RELATION_MAP = DATA_DIR / "relation_map.tsv"

# Порядок объединённых отношений фиксирован: от него зависят идентификаторы в индексе.
MERGED_RELATIONS: Tuple[str, ...] = (
    "antonym",
    "atlocation",
    "capableof",
    "causes",
    "createdby",
    "isa",
    "desires",
    "hassubevent",
    "partof",
    "hascontext",
    "hasproperty",
    "madeof",
    "notcapableof",
    "notdesires",
    "receivesaction",
    "relatedto",
    "usedfor",
)

REVERSE_SUFFIX = "_rev"
CATCH_ALL_RELATION = "relatedto"


@dataclass(frozen=True)
class RelationVocab:
    """
    Отображение сырых URI отношений в объединённые идентификаторы.

    Идентификаторы 0..16 прямые, 17..33 обратные; reverse_of(r) = (r + 17) mod 34.
    Для каждого URI хранится флаг перестановки головы и хвоста (маркер '*').
    """

    merged_names: Tuple[str, ...] = MERGED_RELATIONS
    raw_map: Dict[str, Tuple[int, bool]] = field(default_factory=dict)

    @property
    def num_forward(self) -> int:
        return len(self.merged_names)

    @property
    def num_relations(self) -> int:
        return 2 * len(self.merged_names)

    def reverse_of(self, rel_id: int) -> int:
        return (rel_id + self.num_forward) % self.num_relations

    def name_of(self, rel_id: int) -> str:
        if rel_id < self.num_forward:
            return self.merged_names[rel_id]
        return self.merged_names[rel_id - self.num_forward] + REVERSE_SUFFIX

    def merged_id(self, name: str) -> int:
        try:
            return self.merged_names.index(name)
        except ValueError:
            raise ConfigError(f"Неизвестное объединённое отношение '{name}'") from None

    def id_of(self, raw_uri: str) -> Optional[int]:
        entry = self.raw_map.get(_normalize_uri(raw_uri))
        return None if entry is None else entry[0]

    def resolve(self, raw_uri: str) -> Optional[Tuple[int, bool]]:
        """(merged_id, swap) для сырого URI или None, если отношение не описано."""
        return self.raw_map.get(_normalize_uri(raw_uri))

    @classmethod
    def from_file(cls, path: Union[str, Path] = DEFAULT_RELATION_MAP) -> "RelationVocab":
        """
        Загружает таблицу 'raw_uri<TAB>merged_name'; строки с '#' игнорируются.
        """
        raw_map: Dict[str, Tuple[int, bool]] = {}
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ConfigError(f"{path}:{line_no}: ожидалось два поля через TAB")
                raw_uri, merged = parts[0].strip(), parts[1].strip()
                swap = merged.startswith("*")
                name = merged.lstrip("*")
                if name not in MERGED_RELATIONS:
                    raise ConfigError(f"{path}:{line_no}: неизвестное отношение '{name}'")
                key = _normalize_uri(raw_uri)
                if key in raw_map:
                    raise ConfigError(f"{path}:{line_no}: повторное описание '{raw_uri}'")
                raw_map[key] = (MERGED_RELATIONS.index(name), swap)
        return cls(merged_names=MERGED_RELATIONS, raw_map=raw_map)


def _normalize_uri(raw_uri: str) -> str:
    return raw_uri.strip().rstrip("/").lower()
