import logging
from itertools import chain

import numpy as np

from bridge_extractor import build_vocab, load_index, prepare_sample, read_cache, save_checkpoint, train
from bridge_extractor.alignment import tokenize
from bridge_extractor.errors import DataError, TrainingAborted
from bridge_extractor.training import init_params

from ..common import log_run, require_inputs, write_json

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("train", help="Кэш подграфов -> чекпоинт модели и отчёт обучения")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    train_cache, dev_cache = config.cache_path("train"), config.cache_path("dev")
    require_inputs(config.index, train_cache)
    inputs = [config.index, train_cache] + ([dev_cache] if dev_cache.is_file() else [])
    log_run("train", config, inputs)

    graph = load_index(config.index)
    entries = read_cache(train_cache)
    if not entries:
        raise DataError(f"{train_cache}: пустая обучающая выборка")
    dev_entries = read_cache(dev_cache) if dev_cache.is_file() else []

    # словарь: токены утверждений, затем поверхности концептов подграфов по возрастанию id
    concepts = np.unique(np.concatenate([e.subgraph.nodes for e in entries]))
    vocab = build_vocab(
        chain((e.example.statement_tokens for e in entries), (tokenize(graph.surfaces[int(c)]) for c in concepts))
    )
    logger.info("TRAIN: словарь %d токенов, %d примеров, dev %d", len(vocab), len(entries), len(dev_entries))

    samples = [prepare_sample(e, graph, vocab, config.max_len) for e in entries]
    dev_samples = [prepare_sample(e, graph, vocab, config.max_len) for e in dev_entries]
    params = init_params(config.encoder_config(), len(vocab), graph.vocab.num_relations, config.seed)

    try:
        params, report = train(
            samples,
            config.train_config(),
            params,
            dev_samples=dev_samples,
            on_epoch_end=lambda epoch, p: save_checkpoint(p, vocab, config.checkpoint),
            show_progress=args.progress,
        )
    except TrainingAborted as e:
        if e.last_good is not None:
            save_checkpoint(e.last_good, vocab, config.checkpoint)
        logger.error("TRAIN: обучение прервано на эпохе %d, сохранён последний корректный чекпоинт", e.epoch)
        raise
    write_json(report.as_dict(), config.report_path("train.json"))
    return 0
