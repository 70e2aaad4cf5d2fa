import struct
from typing import List, Type

import numpy as np


class ByteReader:
    """Курсор по буферу; нехватка байт поднимает переданный класс ошибки."""

    def __init__(self, data: bytes, truncated_error: Type[Exception], source: str = "<buffer>"):
        self.data = data
        self.pos = 0
        self.truncated_error = truncated_error
        self.source = source

    def take(self, size: int) -> bytes:
        if size < 0 or self.pos + size > len(self.data):
            raise self.truncated_error(
                f"{self.source}: файл обрезан (нужно {size} байт на позиции {self.pos}, всего {len(self.data)})"
            )
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str):
        values = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return values[0] if len(values) == 1 else values

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count), dtype=dtype).copy()

    def blob(self) -> bytes:
        return self.take(self.unpack("<Q"))

    def strings(self) -> List[str]:
        raw = self.blob()
        return raw.decode("utf-8").split("\n") if raw else []

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)


def pack_blob(payload: bytes) -> bytes:
    return struct.pack("<Q", len(payload)) + payload


def pack_strings(items) -> bytes:
    return pack_blob("\n".join(items).encode("utf-8"))


def pack_array(array: np.ndarray, dtype: str) -> bytes:
    return np.ascontiguousarray(array, dtype=dtype).tobytes()
