import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Sequence, TypeVar, Union

from bridge_extractor import load_dataset, make_example
from bridge_extractor.dataset import ParseReport
from bridge_extractor.errors import ArtifactError
from utils.atomic_io import atomic_write, file_sha256

from .config import PipelineConfig

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def require_inputs(*paths: Union[str, Path]) -> None:
    """Все входы должны существовать до того, как команда что-либо запишет."""
    missing = [str(p) for p in paths if not Path(p).is_file()]
    if missing:
        raise ArtifactError(f"Нет входных файлов: {', '.join(missing)}")


def log_run(command: str, config: PipelineConfig, inputs: Iterable[Union[str, Path]]) -> None:
    logger.info("%s: конфигурация %s", command.upper(), json.dumps(config.as_dict(), sort_keys=True, ensure_ascii=False))
    for path in inputs:
        logger.info("%s: вход %s sha256=%s", command.upper(), path, file_sha256(path))


def write_json(payload: dict, path: Union[str, Path]) -> None:
    with atomic_write(path, "w") as f:
        f.write(json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def parallel_map(func: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    """Порядок результатов совпадает с порядком входа при любом числе потоков."""
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def load_examples(config: PipelineConfig, split: str, graph, stopwords, stemmer=None):
    """Записи набора split, выровненные по графу."""
    report = ParseReport()
    records = load_dataset(config.split_path(split), report)
    examples = [make_example(r, graph, stopwords, config.max_ngram, stemmer) for r in records]
    return records, examples, report
