"""
Обучение всех параметров по слабой разметке: Adam с линейным разогревом.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from utils.metrics import recall_at_n

from .encoder import EncoderConfig, Gradients, ModelParams
from .errors import NumericalInstabilityError, TrainingAborted
from .extractor import Coverage, PreparedSample, ScoredSubgraph, TrainConfig, backward_example, extract, forward_example

logger = logging.getLogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


def init_params(config: EncoderConfig, vocab_size: int, num_relations: int, seed: int) -> ModelParams:
    return ModelParams.init(config, vocab_size, num_relations, np.random.default_rng([seed, 0]))


class AdamOptimizer:
    """Adam; скорость растёт линейно первые warmup_steps шагов, затем постоянна."""

    def __init__(self, params: ModelParams, lr: float, warmup_steps: int = 0):
        self.lr = lr
        self.warmup_steps = warmup_steps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}

    def current_lr(self) -> float:
        if self.warmup_steps <= 0:
            return self.lr
        return self.lr * min(1.0, self.step_count / self.warmup_steps)

    def step(self, params: ModelParams, grads: Gradients) -> None:
        self.step_count += 1
        lr = self.current_lr()
        correction1 = 1.0 - BETA1**self.step_count
        correction2 = 1.0 - BETA2**self.step_count
        for name, value in params.tensors.items():
            g = grads[name]
            self.m[name] = BETA1 * self.m[name] + (1.0 - BETA1) * g
            self.v[name] = BETA2 * self.v[name] + (1.0 - BETA2) * g * g
            update = lr * (self.m[name] / correction1) / (np.sqrt(self.v[name] / correction2) + EPSILON)
            value -= update.astype(value.dtype, copy=False)


@dataclass
class EpochReport:
    epoch: int
    mean_triple_loss: float
    mean_concept_loss: float
    mean_total_loss: float
    coverage: float
    dev_recall: Optional[float] = None


@dataclass
class TrainingReport:
    epochs: List[EpochReport] = field(default_factory=list)
    steps: int = 0

    def as_dict(self) -> dict:
        return {"steps": self.steps, "epochs": [asdict(e) for e in self.epochs]}


def _example_step(args) -> Tuple[Gradients, float, float, Coverage]:
    sample, params, config, seed = args
    rng = np.random.default_rng(seed) if config.negative_sample_rate is not None else None
    forward = forward_example(sample, params, config, rng)
    grads = backward_example(forward, params)
    return grads, forward.l_triple.value, forward.l_concept.value, forward.coverage


def extract_all(
    samples: Sequence[PreparedSample],
    params: ModelParams,
    config: TrainConfig,
    k2: Optional[int] = None,
    workers: int = 1,
) -> List[ScoredSubgraph]:
    """Извлечение по всем примерам; порядок результатов совпадает с порядком входа."""
    if workers <= 1:
        return [extract(s, params, config, k2) for s in samples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: extract(s, params, config, k2), samples))


def dev_recall(samples: Sequence[PreparedSample], params: ModelParams, config: TrainConfig) -> Optional[float]:
    scores = []
    for sample, scored in zip(samples, extract_all(samples, params, config, workers=config.workers)):
        gold = set(sample.supervision.bridge)
        if gold:
            scores.append(recall_at_n(scored.ranking, gold, config.k2))
    return float(np.mean(scores)) if scores else None


def train(
    samples: Sequence[PreparedSample],
    config: TrainConfig,
    params: ModelParams,
    dev_samples: Sequence[PreparedSample] = (),
    on_epoch_end: Optional[Callable[[int, ModelParams], None]] = None,
    show_progress: bool = False,
) -> Tuple[ModelParams, TrainingReport]:
    """
    Минимизирует среднее по пакету λ1·L_triple + λ2·L_concept.

    Градиенты примеров пакета считаются независимо (в потоках при
    workers > 1) и складываются в фиксированном порядке, поэтому результат
    детерминирован при заданном seed. При nan/inf обучение прерывается
    с TrainingAborted, содержащим параметры конца последней эпохи.
    """
    if not samples:
        raise ValueError("Пустая обучающая выборка")
    params = params.copy()
    rng = np.random.default_rng(config.seed)
    steps_per_epoch = math.ceil(len(samples) / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    optimizer = AdamOptimizer(params, config.lr, math.ceil(config.warmup * total_steps))
    report = TrainingReport()
    last_good = params.copy()
    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None

    try:
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(len(samples))
            triple_losses, concept_losses = [], []
            coverage = Coverage()
            batches = range(0, len(order), config.batch_size)
            for start in tqdm(batches, desc=f"TRAIN epoch {epoch}", disable=not show_progress):
                batch = [samples[i] for i in order[start : start + config.batch_size]]
                seeds = rng.integers(0, 2**63 - 1, size=len(batch))
                jobs = [(s, params, config, int(seed)) for s, seed in zip(batch, seeds)]
                try:
                    results = list(pool.map(_example_step, jobs)) if pool else [_example_step(j) for j in jobs]
                    total = params.zeros_like()
                    for grads, l_triple, l_concept, cov in results:
                        total.add_(grads)
                        triple_losses.append(l_triple)
                        concept_losses.append(l_concept)
                        coverage.add(cov)
                    total.scale_(1.0 / len(batch))
                    total.check_finite()
                    optimizer.step(params, total)
                    for name, value in params.tensors.items():
                        if not np.all(np.isfinite(value)):
                            raise NumericalInstabilityError(name)
                except NumericalInstabilityError as e:
                    logger.error("TRAIN: эпоха %d прервана: %s", epoch, e)
                    raise TrainingAborted(e.tensor_name, last_good=last_good, epoch=epoch) from e
                report.steps += 1

            mean_triple = float(np.mean(triple_losses))
            mean_concept = float(np.mean(concept_losses))
            epoch_report = EpochReport(
                epoch=epoch,
                mean_triple_loss=mean_triple,
                mean_concept_loss=mean_concept,
                mean_total_loss=config.lambda_triple * mean_triple + config.lambda_concept * mean_concept,
                coverage=coverage.ratio,
                dev_recall=dev_recall(dev_samples, params, config) if dev_samples else None,
            )
            report.epochs.append(epoch_report)
            logger.info(
                "TRAIN: эпоха %d: L_triple=%.4f L_concept=%.4f покрытие=%.3f dev Recall@%d=%s",
                epoch,
                mean_triple,
                mean_concept,
                coverage.ratio,
                config.k2,
                "-" if epoch_report.dev_recall is None else f"{epoch_report.dev_recall:.4f}",
            )
            last_good = params.copy()
            if on_epoch_end is not None:
                on_epoch_end(epoch, last_good)
    finally:
        if pool is not None:
            pool.shutdown()
    return params, report
