"""
Файл чекпоинта модели.

    magic     b"BKGM"
    version   u32
    d, L      u64, u64
    checksum  32 байта, sha256 словаря токенов
    config    u64 длина + JSON остальных полей EncoderConfig
    tokens    u64 длина + utf-8, токены через '\\n'
    count     u64 число тензоров
    далее для каждого тензора: имя (u64 длина + utf-8), u32 ndim,
    u64 x ndim размеры, f8 x prod(shape) по строкам
"""
import json
import logging
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from utils.atomic_io import atomic_write
from utils.binary import ByteReader, pack_array, pack_blob, pack_strings

from .encoder import EncoderConfig, ModelParams, param_shapes
from .errors import ArtifactError, CheckpointError
from .vocab import TokenVocab

logger = logging.getLogger(__name__)

MAGIC = b"BKGM"
FORMAT_VERSION = 1


def save_checkpoint(params: ModelParams, vocab: TokenVocab, path: Union[str, Path]) -> None:
    config = asdict(params.config)
    d, num_blocks = config.pop("d"), config.pop("num_blocks")
    with atomic_write(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQQ", FORMAT_VERSION, d, num_blocks))
        f.write(vocab.checksum)
        f.write(pack_blob(json.dumps(config, sort_keys=True).encode("utf-8")))
        f.write(pack_strings(vocab.tokens))
        f.write(struct.pack("<Q", len(params.tensors)))
        for name in sorted(params.tensors):
            tensor = params.tensors[name]
            f.write(pack_blob(name.encode("utf-8")))
            f.write(struct.pack(f"<I{tensor.ndim}Q", tensor.ndim, *tensor.shape))
            f.write(pack_array(tensor, "<f8"))
    logger.info("Чекпоинт сохранён: %s (%d тензоров)", path, len(params.tensors))


def load_checkpoint(path: Union[str, Path]) -> Tuple[ModelParams, TokenVocab]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ArtifactError(f"Не удалось прочитать чекпоинт {path}: {e}") from e

    reader = ByteReader(data, CheckpointError, str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: не является чекпоинтом модели")
    version, d, num_blocks = reader.unpack("<IQQ")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: версия чекпоинта {version}, ожидается {FORMAT_VERSION}")
    checksum = reader.take(32)
    extra = json.loads(reader.blob().decode("utf-8"))
    vocab = TokenVocab(tuple(reader.strings()))
    if vocab.checksum != checksum:
        raise CheckpointError(f"{path}: контрольная сумма словаря не совпадает")
    config = EncoderConfig(d=d, num_blocks=num_blocks, **extra)

    tensors = {}
    for _ in range(reader.unpack("<Q")):
        name = reader.blob().decode("utf-8")
        ndim = reader.unpack("<I")
        shape = tuple(struct.unpack(f"<{ndim}Q", reader.take(8 * ndim))) if ndim else ()
        count = int(np.prod(shape)) if shape else 1
        tensors[name] = reader.array("<f8", count).reshape(shape).astype(config.dtype)

    expected = param_shapes(config, len(vocab), tensors["W_r"].shape[0] if "W_r" in tensors else 0)
    if set(expected) != set(tensors) or any(tensors[k].shape != v for k, v in expected.items()):
        raise CheckpointError(f"{path}: набор тензоров не соответствует конфигурации модели")
    return ModelParams(config, tensors), vocab
