"""
Кодировщик утверждения и слитых представлений концептов.

Вместо предобученного трансформера используется обучаемый с нуля кодировщик
игрушечного масштаба: эмбеддинги токенов и позиций плюс L упрощённых блоков
(одна голова self-attention, остаток, feed-forward с tanh). Все градиенты
считаются аналитически; прямой проход сохраняет промежуточные значения,
а backward() проходит их в обратном порядке.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from utils.numeric import softmax

from .errors import ConfigError, DataError, InvalidConceptError, NumericalInstabilityError, SequenceLengthError

FAR = -1


@dataclass(frozen=True)
class EncoderConfig:
    d: int = 64
    num_blocks: int = 1
    max_len: int = 64
    max_dist: int = 4
    use_context_emb: bool = True
    use_distance_emb: bool = True
    dtype: str = "float64"

    def __post_init__(self) -> None:
        if self.d <= 0 or self.num_blocks < 0 or self.max_len <= 0 or self.max_dist < 0:
            raise ConfigError(f"Некорректные размеры кодировщика: {self}")
        if self.dtype not in ("float64", "float32"):
            raise ConfigError(f"dtype должен быть float64 или float32, получено {self.dtype}")

    @property
    def d_ff(self) -> int:
        return 2 * self.d


def param_shapes(config: EncoderConfig, vocab_size: int, num_relations: int) -> Dict[str, Tuple[int, ...]]:
    d = config.d
    shapes: Dict[str, Tuple[int, ...]] = {
        "W_e": (vocab_size, d),
        "W_p": (config.max_len, d),
    }
    for layer in range(config.num_blocks):
        prefix = f"block{layer}"
        for name in ("W_q", "W_k", "W_v", "W_o"):
            shapes[f"{prefix}.{name}"] = (d, d)
        shapes[f"{prefix}.ff_in"] = (d, config.d_ff)
        shapes[f"{prefix}.ff_in_bias"] = (config.d_ff,)
        shapes[f"{prefix}.ff_out"] = (config.d_ff, d)
        shapes[f"{prefix}.ff_out_bias"] = (d,)
    shapes.update(
        {
            "biattn.w_sim": (3 * d,),
            "mlp.W": (2 * d, d),
            "mlp.b": (d,),
            "W_d": (config.max_dist + 2, d),
            "W_r": (num_relations, d),
            "W_2": (5 * d, d),
            "W_3": (2 * d, d),
        }
    )
    return shapes


def _is_bias(name: str) -> bool:
    return name.endswith("bias") or name == "mlp.b"


@dataclass
class ModelParams:
    """Все обучаемые тензоры модели, по именам."""

    config: EncoderConfig
    tensors: Dict[str, np.ndarray]

    @classmethod
    def init(
        cls,
        config: EncoderConfig,
        vocab_size: int,
        num_relations: int,
        rng: np.random.Generator,
    ) -> "ModelParams":
        """Равномерная инициализация ±1/sqrt(d) для таблиц, нули для смещений."""
        bound = 1.0 / math.sqrt(config.d)
        tensors = {}
        for name, shape in param_shapes(config, vocab_size, num_relations).items():
            if _is_bias(name):
                tensors[name] = np.zeros(shape, dtype=config.dtype)
            else:
                tensors[name] = rng.uniform(-bound, bound, size=shape).astype(config.dtype)
        return cls(config, tensors)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    @property
    def d(self) -> int:
        return self.config.d

    @property
    def vocab_size(self) -> int:
        return int(self.tensors["W_e"].shape[0])

    @property
    def num_relations(self) -> int:
        return int(self.tensors["W_r"].shape[0])

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> "Gradients":
        return Gradients({k: np.zeros_like(v) for k, v in self.tensors.items()})

    def with_config(self, **changes) -> "ModelParams":
        return ModelParams(replace(self.config, **changes), self.tensors)


@dataclass
class Gradients:
    tensors: Dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        self.tensors[name] = value

    def add_(self, other: "Gradients", scale: float = 1.0) -> "Gradients":
        for name, value in other.tensors.items():
            self.tensors[name] += scale * value
        return self

    def scale_(self, factor: float) -> "Gradients":
        for value in self.tensors.values():
            value *= factor
        return self

    def check_finite(self) -> None:
        for name, value in self.tensors.items():
            if not np.all(np.isfinite(value)):
                raise NumericalInstabilityError(name)


@dataclass
class _BlockCache:
    X: np.ndarray
    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray
    A: np.ndarray
    C: np.ndarray
    Z: np.ndarray
    G: np.ndarray


@dataclass
class StatementEncoding:
    H_x: np.ndarray
    h_x: np.ndarray
    token_ids: np.ndarray = field(repr=False)
    argmax: np.ndarray = field(repr=False)
    blocks: List[_BlockCache] = field(default_factory=list, repr=False)


def encode_statement(token_ids: Sequence[int], params: ModelParams) -> StatementEncoding:
    """
    H^0 = one_hot(x)·W_e + W_p, затем L блоков; h_x - максимум по столбцам H^L.
    """
    ids = np.asarray(token_ids, dtype=np.int64)
    n = len(ids)
    if n > params.config.max_len:
        raise SequenceLengthError(n, params.config.max_len)
    if n == 0:
        raise DataError("Пустое утверждение")

    H = params["W_e"][ids] + params["W_p"][:n]
    scale = 1.0 / math.sqrt(params.d)
    caches = []
    for layer in range(params.config.num_blocks):
        p = f"block{layer}"
        X = H
        Q, K, V = X @ params[f"{p}.W_q"], X @ params[f"{p}.W_k"], X @ params[f"{p}.W_v"]
        A = softmax(Q @ K.T * scale, axis=-1)
        C = A @ V
        Z = X + C @ params[f"{p}.W_o"]
        G = np.tanh(Z @ params[f"{p}.ff_in"] + params[f"{p}.ff_in_bias"])
        H = Z + G @ params[f"{p}.ff_out"] + params[f"{p}.ff_out_bias"]
        caches.append(_BlockCache(X, Q, K, V, A, C, Z, G))

    argmax = H.argmax(axis=0)
    h_x = H[argmax, np.arange(H.shape[1])]
    return StatementEncoding(H_x=H, h_x=h_x, token_ids=ids, argmax=argmax, blocks=caches)


def _statement_backward(encoding: StatementEncoding, dH: np.ndarray, params: ModelParams, grads: Gradients) -> None:
    scale = 1.0 / math.sqrt(params.d)
    for layer in reversed(range(len(encoding.blocks))):
        p = f"block{layer}"
        c = encoding.blocks[layer]
        grads[f"{p}.ff_out"] += c.G.T @ dH
        grads[f"{p}.ff_out_bias"] += dH.sum(axis=0)
        dU = (dH @ params[f"{p}.ff_out"].T) * (1.0 - c.G * c.G)
        grads[f"{p}.ff_in"] += c.Z.T @ dU
        grads[f"{p}.ff_in_bias"] += dU.sum(axis=0)
        dZ = dH + dU @ params[f"{p}.ff_in"].T

        grads[f"{p}.W_o"] += c.C.T @ dZ
        dC = dZ @ params[f"{p}.W_o"].T
        dA = dC @ c.V.T
        dV = c.A.T @ dC
        dS = c.A * (dA - (dA * c.A).sum(axis=-1, keepdims=True)) * scale
        dQ = dS @ c.K
        dK = dS.T @ c.Q
        grads[f"{p}.W_q"] += c.X.T @ dQ
        grads[f"{p}.W_k"] += c.X.T @ dK
        grads[f"{p}.W_v"] += c.X.T @ dV
        dH = dZ + dQ @ params[f"{p}.W_q"].T + dK @ params[f"{p}.W_k"].T + dV @ params[f"{p}.W_v"].T

    n = len(encoding.token_ids)
    np.add.at(grads["W_e"], encoding.token_ids, dH)
    grads["W_p"][:n] += dH


def distance_row(distance: int, max_dist: int) -> int:
    """Строка W_d: min(d_c, max_dist); недостижимые - отдельная последняя строка."""
    if distance is None or distance < 0:
        return max_dist + 1
    return min(int(distance), max_dist)


def bi_attention(U: np.ndarray, H_x: np.ndarray, w_sim: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Внимание от токенов концепта к токенам утверждения:
    S[t, n] = w·[u_t; h_n; u_t*h_n], A = softmax по n, H_con = A·H_x.
    U может иметь форму (T, d) или (G, T, d).
    """
    d = H_x.shape[1]
    w1, w2, w3 = w_sim[:d], w_sim[d : 2 * d], w_sim[2 * d :]
    S = (U @ w1)[..., None] + (H_x @ w2) + (U * w3) @ H_x.T
    A = softmax(S, axis=-1)
    return A @ H_x, A


@dataclass
class _ConceptGroup:
    rows: np.ndarray
    token_ids: np.ndarray
    dist_rows: np.ndarray
    U: np.ndarray
    A: Optional[np.ndarray]
    pooled: np.ndarray
    argmax: np.ndarray


@dataclass
class ConceptTable:
    """Представления h_c для набора концептов (n x 2d) и кэш для backward."""

    H_c: np.ndarray
    groups: List[_ConceptGroup] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class ConceptRepr:
    h_c: np.ndarray

    @property
    def h_text(self) -> np.ndarray:
        return self.h_c[: len(self.h_c) // 2]

    @property
    def h_dist(self) -> np.ndarray:
        return self.h_c[len(self.h_c) // 2 :]


def encode_concepts(
    token_lists: Sequence[Sequence[int]],
    distances: Sequence[int],
    encoding: StatementEncoding,
    params: ModelParams,
) -> ConceptTable:
    """
    h_c = [mlp(max([H_tok; H_con])); W_d[d_c]] для каждого концепта.
    Концепты с одинаковой длиной в токенах кодируются одним пакетом.
    """
    cfg = params.config
    d = cfg.d
    H_x = encoding.H_x
    out = np.zeros((len(token_lists), 2 * d), dtype=H_x.dtype)
    by_length: Dict[int, List[int]] = {}
    for i, tokens in enumerate(token_lists):
        if len(tokens) == 0:
            raise InvalidConceptError(f"Концепт #{i} не содержит токенов")
        by_length.setdefault(len(tokens), []).append(i)

    groups = []
    for length in sorted(by_length):
        rows = np.asarray(by_length[length], dtype=np.int64)
        ids = np.asarray([token_lists[i] for i in rows], dtype=np.int64).reshape(len(rows), length)
        dist_rows = np.asarray([distance_row(distances[i], cfg.max_dist) for i in rows], dtype=np.int64)
        U = params["W_e"][ids]
        if cfg.use_context_emb:
            H_con, A = bi_attention(U, H_x, params["biattn.w_sim"])
        else:
            H_con, A = np.zeros_like(U), None
        M = np.concatenate([U, H_con], axis=-1)
        argmax = M.argmax(axis=1)
        pooled = np.take_along_axis(M, argmax[:, None, :], axis=1)[:, 0, :]
        out[rows, :d] = pooled @ params["mlp.W"] + params["mlp.b"]
        if cfg.use_distance_emb:
            out[rows, d:] = params["W_d"][dist_rows]
        groups.append(_ConceptGroup(rows, ids, dist_rows, U, A, pooled, argmax))
    return ConceptTable(out, groups)


def encode_concept(
    concept_tokens: Sequence[int],
    distance: int,
    encoding: StatementEncoding,
    params: ModelParams,
) -> ConceptRepr:
    return ConceptRepr(encode_concepts([concept_tokens], [distance], encoding, params).H_c[0])


def _concept_backward(
    group: _ConceptGroup,
    dOut: np.ndarray,
    H_x: np.ndarray,
    params: ModelParams,
    grads: Gradients,
) -> np.ndarray:
    cfg = params.config
    d = cfg.d
    d_text, d_dist = dOut[:, :d], dOut[:, d:]
    if cfg.use_distance_emb:
        np.add.at(grads["W_d"], group.dist_rows, d_dist)
    grads["mlp.W"] += group.pooled.T @ d_text
    grads["mlp.b"] += d_text.sum(axis=0)
    d_pooled = d_text @ params["mlp.W"].T

    dM = np.zeros(group.U.shape[:2] + (2 * d,), dtype=dOut.dtype)
    np.put_along_axis(dM, group.argmax[:, None, :], d_pooled[:, None, :], axis=1)
    dU = dM[..., :d].copy()
    dH_con = dM[..., d:]
    dH_x = np.zeros_like(H_x)

    if cfg.use_context_emb:
        A, U = group.A, group.U
        w_sim = params["biattn.w_sim"]
        w1, w2, w3 = w_sim[:d], w_sim[d : 2 * d], w_sim[2 * d :]
        dA = dH_con @ H_x.T
        dH_x += np.einsum("gtn,gtd->nd", A, dH_con)
        dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True))

        row_sums = dS.sum(axis=-1)
        dw1 = np.einsum("gt,gtd->d", row_sums, U)
        dU += row_sums[..., None] * w1

        col_sums = dS.sum(axis=(0, 1))
        dw2 = H_x.T @ col_sums
        dH_x += np.outer(col_sums, w2)

        P = U * w3
        dP = dS @ H_x
        dH_x += np.einsum("gtn,gtd->nd", dS, P)
        dU += dP * w3
        dw3 = (dP * U).sum(axis=(0, 1))
        grads["biattn.w_sim"] += np.concatenate([dw1, dw2, dw3])

    np.add.at(grads["W_e"], group.token_ids.ravel(), dU.reshape(-1, d))
    return dH_x


def backward(
    encoding: StatementEncoding,
    concepts: ConceptTable,
    d_concepts: np.ndarray,
    d_h_x: np.ndarray,
    params: ModelParams,
    grads: Optional[Gradients] = None,
) -> Gradients:
    """
    Обратный проход по записанному графу вычислений: от градиентов по h_c
    (n x 2d) и по h_x ко всем тензорам ModelParams. Нетронутые тензоры
    получают нулевой градиент.
    """
    grads = grads if grads is not None else params.zeros_like()
    dH = np.zeros_like(encoding.H_x)
    for group in concepts.groups:
        dH += _concept_backward(group, d_concepts[group.rows], encoding.H_x, params, grads)
    dH[encoding.argmax, np.arange(dH.shape[1])] += d_h_x
    _statement_backward(encoding, dH, params, grads)
    grads.check_finite()
    return grads
