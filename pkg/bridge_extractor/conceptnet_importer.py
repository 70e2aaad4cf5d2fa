import logging
from pathlib import Path
from typing import Union

import requests
from tqdm import tqdm

from utils.atomic_io import atomic_write

from .errors import ArtifactError

logger = logging.getLogger(__name__)

CONCEPTNET_URL = (
    "https://s3.amazonaws.com/conceptnet/downloads/2019/edges/conceptnet-assertions-5.7.0.csv.gz"
)
CHUNK_SIZE = 1 << 20


def fetch_conceptnet(
    cache_path: Union[str, Path],
    url: str = CONCEPTNET_URL,
    force: bool = False,
    timeout: int = 90,
) -> Path:
    """
    Скачивает дамп утверждений ConceptNet, используя файловый кэш.
    Повторный вызов возвращает уже скачанный файл без обращения к сети.
    """
    cache_path = Path(cache_path)
    # Проверка кэша
    if cache_path.exists() and cache_path.stat().st_size > 0 and not force:
        logger.info("CACHE HIT: %s уже скачан.", cache_path)
        return cache_path

    logger.info("CACHE MISS: загрузка ConceptNet с %s", url)
    try:
        with requests.get(url, stream=True, timeout=timeout) as response:
            response.raise_for_status()
            total = int(response.headers.get("content-length", 0)) or None
            with atomic_write(cache_path, "wb") as f:
                progress = tqdm(total=total, unit="B", unit_scale=True, desc="FETCH")
                for chunk in response.iter_content(chunk_size=CHUNK_SIZE):
                    if chunk:
                        f.write(chunk)
                        progress.update(len(chunk))
                progress.close()
    except requests.exceptions.RequestException as e:
        raise ArtifactError(f"Ошибка загрузки {url}: {e}") from e

    logger.info("Загрузка завершена: %s (%d байт).", cache_path, cache_path.stat().st_size)
    return cache_path
