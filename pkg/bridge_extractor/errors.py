"""
Иерархия исключений движка.

Классы сгруппированы так, чтобы CLI мог однозначно превратить ошибку
в код возврата: конфигурация, ввод-вывод, данные, численная нестабильность.
"""
from typing import Any, Optional


class MostikError(Exception):
    """Базовое исключение движка."""


class ConfigError(MostikError, ValueError):
    """Некорректная конфигурация или нарушение инвариантов гиперпараметров."""


class ArtifactError(MostikError, OSError):
    """Ошибка чтения или записи файлов-артефактов (индекс, кэш, чекпоинт)."""


class IndexTruncatedError(ArtifactError):
    pass


class IndexVersionError(ArtifactError):
    pass


class IndexChecksumError(ArtifactError):
    pass


class CacheFormatError(ArtifactError):
    pass


class CheckpointError(ArtifactError):
    pass


class DataError(MostikError, ValueError):
    """Входные данные не удовлетворяют предусловиям операции."""


class InvalidConceptIdError(DataError, IndexError):
    def __init__(self, concept_id: int, size: int):
        super().__init__(f"Идентификатор концепта {concept_id} вне диапазона 0..{size - 1}")
        self.concept_id = concept_id


class InvalidSourceError(DataError):
    pass


class InvalidConceptError(DataError):
    pass


class SequenceLengthError(DataError):
    def __init__(self, length: int, max_len: int):
        super().__init__(f"Длина утверждения {length} превышает max_len={max_len}")
        self.length = length
        self.max_len = max_len


class NumericalInstabilityError(MostikError, ArithmeticError):
    def __init__(self, tensor_name: str):
        super().__init__(f"Нечисловое значение (nan/inf) в тензоре '{tensor_name}'")
        self.tensor_name = tensor_name


class TrainingAborted(NumericalInstabilityError):
    """Обучение остановлено; last_good хранит последние корректные параметры."""

    def __init__(self, tensor_name: str, last_good: Optional[Any] = None, epoch: int = 0):
        super().__init__(tensor_name)
        self.last_good = last_good
        self.epoch = epoch
