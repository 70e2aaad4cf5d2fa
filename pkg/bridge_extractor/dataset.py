"""
Чтение набора утверждений с объяснениями и его разбиение на train/dev/test.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.atomic_io import atomic_write

from .errors import ArtifactError, ConfigError

logger = logging.getLogger(__name__)

DEFAULT_SPLIT_RATIOS = (0.85, 0.05, 0.10)


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    statement: str
    explanations: Tuple[str, ...] = ()

    def as_json(self) -> str:
        return json.dumps(
            {"id": self.id, "statement": self.statement, "explanations": list(self.explanations)},
            ensure_ascii=False,
        )


@dataclass
class ParseReport:
    malformed: List[Tuple[int, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"malformed": [{"line": line, "reason": reason} for line, reason in self.malformed]}


def _parse_record(raw: str) -> DatasetRecord:
    obj = json.loads(raw)
    if not isinstance(obj, dict):
        raise ValueError("ожидался JSON-объект")
    record_id, statement = obj.get("id"), obj.get("statement")
    explanations = obj.get("explanations", [])
    if record_id is None or not isinstance(statement, str):
        raise ValueError("нет полей 'id' или 'statement'")
    if not isinstance(explanations, list) or not all(isinstance(e, str) for e in explanations):
        raise ValueError("'explanations' должен быть списком строк")
    return DatasetRecord(str(record_id), statement, tuple(explanations))


def load_dataset(path: Union[str, Path], report: Optional[ParseReport] = None) -> List[DatasetRecord]:
    """Читает JSONL; испорченные строки пропускаются и попадают в отчёт."""
    report = report if report is not None else ParseReport()
    records: List[DatasetRecord] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(_parse_record(line))
                except ValueError as e:
                    report.malformed.append((line_no, str(e)))
    except OSError as e:
        raise ArtifactError(f"Не удалось прочитать набор данных {path}: {e}") from e
    if report.malformed:
        logger.warning("%s: пропущено %d испорченных записей", path, len(report.malformed))
    return records


def write_dataset(records: Sequence[DatasetRecord], path: Union[str, Path]) -> None:
    with atomic_write(path, "w") as f:
        for record in records:
            f.write(record.as_json() + "\n")


def split_dataset(
    raw_path: Union[str, Path],
    out_dir: Union[str, Path],
    ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 42,
    report: Optional[ParseReport] = None,
) -> Dict[str, int]:
    """
    Детерминированное разбиение по seed. Обучающие примеры разворачиваются
    в пары "утверждение - одно объяснение"; dev и test сохраняют все объяснения.
    Возвращает размеры получившихся файлов.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split_ratios должны быть тремя неотрицательными числами с суммой 1: {ratios}")
    records = load_dataset(raw_path, report)
    n = len(records)
    permutation = np.random.default_rng(seed).permutation(n)
    n_test = int(round(ratios[2] * n))
    n_dev = min(int(round(ratios[1] * n)), n - n_test)
    test_idx = np.sort(permutation[:n_test])
    dev_idx = np.sort(permutation[n_test : n_test + n_dev])
    train_idx = np.sort(permutation[n_test + n_dev :])

    train: List[DatasetRecord] = []
    for i in train_idx:
        record = records[i]
        for k, explanation in enumerate(record.explanations):
            train.append(DatasetRecord(f"{record.id}#{k}", record.statement, (explanation,)))
    splits = {
        "train": train,
        "dev": [records[i] for i in dev_idx],
        "test": [records[i] for i in test_idx],
    }
    out_dir = Path(out_dir)
    for name, items in splits.items():
        write_dataset(items, out_dir / f"{name}.jsonl")
    sizes = {name: len(items) for name, items in splits.items()}
    logger.info("SPLIT: train=%d dev=%d test=%d (seed=%d)", sizes["train"], sizes["dev"], sizes["test"], seed)
    return sizes
