import numpy as np

LOG_CLAMP = 1e-12


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = np.exp(x - x.max(axis=axis, keepdims=True))
    return shifted / shifted.sum(axis=axis, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.result_type(x, np.float32))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def binary_cross_entropy(prob: np.ndarray, labels: np.ndarray) -> float:
    """-Σ [y·log p + (1-y)·log(1-p)], логарифм ограничен снизу на 1e-12."""
    prob = np.asarray(prob, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    return float(
        -np.sum(labels * np.log(np.clip(prob, LOG_CLAMP, None)) + (1.0 - labels) * np.log(np.clip(1.0 - prob, LOG_CLAMP, None)))
    )
