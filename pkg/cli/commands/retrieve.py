import logging
from functools import partial

import numpy as np

from bridge_extractor import (
    extract_supervision_paths,
    label_bridge_concepts,
    load_index,
    load_stopwords,
    retrieve_subgraph,
    write_cache,
)
from bridge_extractor.errors import ArtifactError
from bridge_extractor.subgraph_cache import CacheEntry

from ..common import load_examples, log_run, parallel_map, require_inputs, write_json

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")


def add_parser(subparsers):
    parser = subparsers.add_parser("retrieve", help="Набор данных + индекс -> кэш подграфов и разметки")
    parser.set_defaults(handler=run)
    return parser


def build_entry(example, graph, config, node_filter) -> CacheEntry:
    subgraph = retrieve_subgraph(graph, example.source_concepts, config.hop_bound, config.budget, node_filter)
    bridge = label_bridge_concepts(subgraph, example.target_concepts or ())
    supervision = extract_supervision_paths(subgraph, bridge, config.path_cap)
    return CacheEntry(example, subgraph, supervision)


def vocabulary_mask(num_concepts: int, examples) -> np.ndarray:
    """Концепты, встречающиеся в утверждениях и объяснениях набора данных."""
    mask = np.zeros(num_concepts, dtype=bool)
    for example in examples:
        mask[list(example.source_concepts)] = True
        if example.target_concepts:
            mask[list(example.target_concepts)] = True
    return mask


def run(config, args) -> int:
    splits = [s for s in SPLITS if config.split_path(s).is_file()]
    if not splits:
        raise ArtifactError(f"В {config.data_dir} нет ни одного из файлов train/dev/test.jsonl")
    require_inputs(config.index, config.stopwords)
    log_run("retrieve", config, [config.index, config.stopwords, *(config.split_path(s) for s in splits)])

    graph = load_index(config.index)
    stopwords = load_stopwords(config.stopwords)
    loaded = {split: load_examples(config, split, graph, stopwords) for split in splits}

    node_filter = None
    if config.restrict_vocab:
        node_filter = vocabulary_mask(graph.num_concepts, [e for _, examples, _ in loaded.values() for e in examples])
        logger.info("RETRIEVE: словарь ограничен %d концептами набора данных", int(node_filter.sum()))

    summary = {}
    for split, (_, examples, parse_report) in loaded.items():
        usable = [e for e in examples if e.usable]
        too_long = [e for e in usable if len(e.statement_tokens) > config.max_len]
        for example in too_long:
            logger.warning("RETRIEVE: %s: утверждение длиннее max_len=%d, пример пропущен", example.id, config.max_len)
        usable = [e for e in usable if len(e.statement_tokens) <= config.max_len]
        worker = partial(build_entry, graph=graph, config=config, node_filter=node_filter)
        entries = parallel_map(worker, usable, config.workers)
        write_cache(entries, config.cache_path(split))
        summary[split] = {
            "examples": len(entries),
            "skipped_no_sources": len(examples) - len(usable) - len(too_long),
            "skipped_too_long": len(too_long),
            "malformed": len(parse_report.malformed),
            "mean_nodes": float(np.mean([e.subgraph.num_nodes for e in entries])) if entries else 0.0,
            "mean_bridges": float(np.mean([len(e.supervision.bridge) for e in entries])) if entries else 0.0,
            "truncated": sum(len(e.supervision.truncated) for e in entries),
        }
        logger.info("RETRIEVE: %s: %s", split, summary[split])
    write_json(summary, config.report_path("retrieve.json"))
    return 0
