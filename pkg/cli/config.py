"""
Конфигурация конвейера: плоский файл "ключ = значение" и переопределения
из командной строки. Приоритет: --set > файл > значения по умолчанию.
"""
import logging
import typing
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple, Union

from bridge_extractor.alignment import DEFAULT_STOPWORDS
from bridge_extractor.conceptnet_importer import CONCEPTNET_URL
from bridge_extractor.encoder import EncoderConfig
from bridge_extractor.errors import ConfigError
from bridge_extractor.evaluation import F1_AGGREGATIONS
from bridge_extractor.extractor import TrainConfig
from bridge_extractor.kg_store import UNKNOWN_RELATION_POLICIES
from bridge_extractor.relations import DEFAULT_RELATION_MAP

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class PipelineConfig:
    # пути
    assertions: str = "data/conceptnet-assertions.csv.gz"
    relation_map: str = str(DEFAULT_RELATION_MAP)
    stopwords: str = str(DEFAULT_STOPWORDS)
    index: str = "artifacts/graph.bkg"
    raw_dataset: str = "data/raw.jsonl"
    data_dir: str = "data/splits"
    cache_dir: str = "artifacts/cache"
    checkpoint: str = "artifacts/model.bkgm"
    bundles: str = "artifacts/bundles.jsonl"
    templates: str = "artifacts/templates.jsonl"
    report_dir: str = "artifacts/reports"
    synth_dir: str = "data/synthetic"
    extract_split: str = "test"
    conceptnet_url: str = CONCEPTNET_URL

    # поиск подграфа
    budget: Optional[int] = 300
    hop_bound: int = 3
    max_ngram: int = 3
    path_cap: int = 10_000
    restrict_vocab: bool = False
    lang: str = "en"
    unknown_relation_policy: str = "skip"

    # модель и обучение
    k1: int = 30
    k2: int = 3
    lambda_triple: float = 1.0
    lambda_concept: float = 1.0
    lr: float = 1e-3
    epochs: int = 3
    batch_size: int = 4
    warmup: float = 0.1
    seed: int = 42
    d: int = 64
    num_blocks: int = 1
    max_len: int = 64
    max_dist: int = 4
    dtype: str = "float64"
    negative_sample_rate: Optional[float] = None
    use_context_emb: bool = True
    use_distance_emb: bool = True
    use_routing: bool = True
    workers: int = 1

    # оценка и экспорт
    f1_aggregation: str = "max"
    top_paths: int = 3
    split_ratios: Tuple[float, ...] = (0.85, 0.05, 0.10)

    def __post_init__(self) -> None:
        if self.budget is not None and self.budget <= 0:
            raise ConfigError("budget должен быть положительным или none")
        if self.hop_bound < 0 or self.max_ngram <= 0 or self.path_cap <= 0 or self.top_paths <= 0:
            raise ConfigError("hop_bound, max_ngram, path_cap и top_paths вне допустимого диапазона")
        if self.unknown_relation_policy not in UNKNOWN_RELATION_POLICIES:
            raise ConfigError(f"unknown_relation_policy: одно из {UNKNOWN_RELATION_POLICIES}")
        if self.f1_aggregation not in F1_AGGREGATIONS:
            raise ConfigError(f"f1_aggregation: одно из {F1_AGGREGATIONS}")
        if self.extract_split not in ("train", "dev", "test"):
            raise ConfigError("extract_split: train, dev или test")
        # инварианты модулей проверяются их собственными конфигурациями
        self.train_config()
        self.encoder_config()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lambda_triple=self.lambda_triple,
            lambda_concept=self.lambda_concept,
            k1=self.k1,
            k2=self.k2,
            lr=self.lr,
            epochs=self.epochs,
            batch_size=self.batch_size,
            warmup=self.warmup,
            seed=self.seed,
            negative_sample_rate=self.negative_sample_rate,
            use_routing=self.use_routing,
            workers=self.workers,
        )

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            d=self.d,
            num_blocks=self.num_blocks,
            max_len=self.max_len,
            max_dist=self.max_dist,
            use_context_emb=self.use_context_emb,
            use_distance_emb=self.use_distance_emb,
            dtype=self.dtype,
        )

    def split_path(self, split: str) -> Path:
        return Path(self.data_dir) / f"{split}.jsonl"

    def cache_path(self, split: str) -> Path:
        return Path(self.cache_dir) / f"{split}.bkgs"

    def report_path(self, name: str) -> Path:
        return Path(self.report_dir) / name

    def as_dict(self) -> dict:
        return asdict(self)


_HINTS = typing.get_type_hints(PipelineConfig)


def _coerce(key: str, raw: str):
    hint = _HINTS[key]
    value = raw.strip()
    optional = typing.get_origin(hint) is Union and type(None) in typing.get_args(hint)
    if optional:
        if value.lower() in ("none", "null", ""):
            return None
        hint = next(arg for arg in typing.get_args(hint) if arg is not type(None))
    try:
        if hint is bool:
            if value.lower() in _TRUE:
                return True
            if value.lower() in _FALSE:
                return False
            raise ValueError(value)
        if hint is int:
            return int(value)
        if hint is float:
            return float(value)
        if typing.get_origin(hint) is tuple:
            return tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError as e:
        raise ConfigError(f"Некорректное значение для '{key}': {raw!r}") from e
    return value


def parse_assignments(lines: Iterable[str], source: str) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for line_no, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: ожидалось 'ключ = значение'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _HINTS:
            raise ConfigError(f"{source}:{line_no}: неизвестный ключ '{key}'")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = ()) -> PipelineConfig:
    values: Dict[str, object] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                values.update(parse_assignments(f, str(path)))
        except OSError as e:
            raise ConfigError(f"Не удалось прочитать конфигурацию {path}: {e}") from e
    values.update(parse_assignments(overrides, "--set"))
    try:
        return PipelineConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def config_keys() -> Tuple[str, ...]:
    return tuple(f.name for f in fields(PipelineConfig))
