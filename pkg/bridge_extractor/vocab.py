import hashlib
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

UNK = "<unk>"


@dataclass(frozen=True)
class TokenVocab:
    """Словарь токенов модели; id 0 зарезервирован под неизвестный токен."""

    tokens: Tuple[str, ...]
    _index: Dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.tokens or self.tokens[0] != UNK:
            raise ValueError(f"Первый токен словаря должен быть {UNK}")
        self._index.update({token: i for i, token in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self._index.get(t, 0) for t in tokens], dtype=np.int64)

    @property
    def checksum(self) -> bytes:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).digest()


def build_vocab(token_streams: Iterable[Iterable[str]]) -> TokenVocab:
    """Токены в порядке первого появления, после зарезервированного <unk>."""
    seen: Dict[str, None] = {}
    for stream in token_streams:
        for token in stream:
            if token != UNK:
                seen.setdefault(token, None)
    ordered: List[str] = [UNK, *seen]
    return TokenVocab(tuple(ordered))
