from bridge_extractor import corpus_stats, load_index, load_stopwords
from bridge_extractor.errors import ArtifactError
from bridge_extractor.evaluation import format_stats_table

from ..common import load_examples, log_run, require_inputs, write_json
from .retrieve import SPLITS, vocabulary_mask


def add_parser(subparsers):
    parser = subparsers.add_parser("stats", help="Гистограмма шагов до концептов объяснения и размеры подграфов")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    splits = [s for s in SPLITS if config.split_path(s).is_file()]
    if not splits:
        raise ArtifactError(f"В {config.data_dir} нет ни одного из файлов train/dev/test.jsonl")
    require_inputs(config.index, config.stopwords)
    log_run("stats", config, [config.index, config.stopwords, *(config.split_path(s) for s in splits)])

    graph = load_index(config.index)
    stopwords = load_stopwords(config.stopwords)
    examples = [e for split in splits for e in load_examples(config, split, graph, stopwords)[1]]
    allowed = vocabulary_mask(graph.num_concepts, examples) if config.restrict_vocab else None
    report = corpus_stats(examples, graph, size_hops=config.hop_bound, allowed=allowed)

    write_json(report.as_dict(), config.report_path("stats.json"))
    print(format_stats_table(report, config.hop_bound))
    return 0
