"""
Сопоставление свободного текста с концептами графа по основам слов.
"""
import re
import string
from functools import lru_cache
from pathlib import Path
from typing import TYPE_CHECKING, FrozenSet, Iterable, List, Optional, Protocol, Sequence, Union

from nltk.stem import PorterStemmer as _NltkPorter

from .relations import DATA_DIR

if TYPE_CHECKING:
    from .kg_store import KnowledgeGraph

DEFAULT_STOPWORDS = DATA_DIR / "stopwords.txt"
DEFAULT_MAX_NGRAM = 3

_punctuation = re.compile("[%s]" % re.escape(string.punctuation))


class Stemmer(Protocol):
    def stem(self, word: str) -> str: ...


class PorterStemmer:
    """Стеммер по умолчанию: Porter из nltk с кэшем результатов."""

    def __init__(self) -> None:
        self._porter = _NltkPorter()
        self.stem = lru_cache(maxsize=200_000)(self._stem)

    def _stem(self, word: str) -> str:
        return self._porter.stem(word)


_default_stemmer: Optional[PorterStemmer] = None


def default_stemmer() -> PorterStemmer:
    global _default_stemmer
    if _default_stemmer is None:
        _default_stemmer = PorterStemmer()
    return _default_stemmer


def tokenize(text: str) -> List[str]:
    """Пробельная токенизация, нижний регистр, удаление пунктуации."""
    tokens = (_punctuation.sub("", token.lower()) for token in text.split())
    return [token for token in tokens if token]


def stem_phrase(tokens: Iterable[str], stemmer: Optional[Stemmer] = None) -> str:
    stemmer = stemmer or default_stemmer()
    return " ".join(stemmer.stem(token) for token in tokens)


def load_stopwords(path: Union[str, Path] = DEFAULT_STOPWORDS) -> FrozenSet[str]:
    with open(path, "r", encoding="utf-8") as f:
        return frozenset(line.strip().lower() for line in f if line.strip() and not line.startswith("#"))


def align_concepts(
    text: Sequence[str],
    graph: "KnowledgeGraph",
    stopwords: FrozenSet[str],
    max_ngram: int = DEFAULT_MAX_NGRAM,
    stemmer: Optional[Stemmer] = None,
) -> List[int]:
    """
    Возвращает концепты, чья основа совпадает с основой n-граммы текста.

    Просмотр слева направо, на каждой позиции сначала самая длинная n-грамма;
    найденный участок поглощается целиком. Униграммы-стоп-слова пропускаются.
    Результат упорядочен по позиции первого совпадения, без повторов.
    """
    stemmer = stemmer or default_stemmer()
    tokens = [t for t in (tok.lower() for tok in text) if t]
    stems = [stemmer.stem(t) for t in tokens]

    found: List[int] = []
    seen = set()
    i = 0
    while i < len(tokens):
        matched = 0
        for n in range(min(max_ngram, len(tokens) - i), 0, -1):
            if n == 1 and tokens[i] in stopwords:
                break
            concept_ids = graph.stem_index.get(" ".join(stems[i : i + n]))
            if concept_ids:
                for cid in concept_ids:
                    if cid not in seen:
                        seen.add(cid)
                        found.append(cid)
                matched = n
                break
        i += matched or 1
    return found
