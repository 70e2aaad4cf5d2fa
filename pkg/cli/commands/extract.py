import logging

from bridge_extractor import load_checkpoint, load_index, prepare_sample, read_cache
from bridge_extractor.bundles import make_bundle, write_bundles
from bridge_extractor.training import extract_all

from ..common import log_run, require_inputs

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("extract", help="Чекпоинт + кэш -> пакеты концептов (JSONL)")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    cache = config.cache_path(config.extract_split)
    require_inputs(config.checkpoint, config.index, cache)
    log_run("extract", config, [config.checkpoint, config.index, cache])

    params, vocab = load_checkpoint(config.checkpoint)
    graph = load_index(config.index)
    entries = read_cache(cache)
    samples = [prepare_sample(e, graph, vocab, params.config.max_len) for e in entries]

    train_config = config.train_config()
    # полный рейтинг до K1 нужен для P/R@N
    scored = extract_all(samples, params, train_config, k2=train_config.k1, workers=config.workers)
    bundles = [
        make_bundle(sample, result, graph, " ".join(sample.example.statement_tokens), config.k2, config.top_paths)
        for sample, result in zip(samples, scored)
    ]
    count = write_bundles(bundles, config.bundles)
    logger.info("EXTRACT: %d пакетов записано в %s", count, config.bundles)
    return 0
