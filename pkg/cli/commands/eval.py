import json
import logging

from bridge_extractor import concept_f1, load_index, load_stopwords, pr_at_n, read_cache
from bridge_extractor.bundles import read_bundles
from bridge_extractor.errors import DataError
from bridge_extractor.evaluation import concept_f1_report, format_pr_table
from utils.atomic_io import atomic_write

from ..common import log_run, require_inputs

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("eval", help="Пакеты + эталоны -> Concept F1 и P/R@N")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    cache = config.cache_path(config.extract_split)
    require_inputs(config.bundles, config.index, cache, config.stopwords)
    log_run("eval", config, [config.bundles, config.index, cache, config.stopwords])

    graph = load_index(config.index)
    stopwords = load_stopwords(config.stopwords)
    entries = {e.example.id: e for e in read_cache(cache)}
    bundles = read_bundles(config.bundles)

    f1_entries, rankings, gold_sets = [], [], []
    for bundle in bundles:
        entry = entries.get(bundle["id"])
        if entry is None:
            raise DataError(f"Пакет {bundle['id']} отсутствует в кэше {cache}")
        predicted = {graph.concept_id(item["concept"]) for item in bundle["selected"]}
        f1_entries.append(
            concept_f1(
                entry.example.id,
                predicted,
                entry.example.explanations,
                entry.example.source_concepts,
                graph,
                stopwords,
                aggregation=config.f1_aggregation,
                max_ngram=config.max_ngram,
            )
        )
        rankings.append([graph.concept_id(item["concept"]) for item in bundle["ranking"]])
        gold_sets.append(entry.supervision.bridge)

    f1_report = concept_f1_report(f1_entries)
    curve = pr_at_n(rankings, gold_sets, config.k1)

    with atomic_write(config.report_path("eval.jsonl"), "w") as f:
        f.write(json.dumps({"metric": "concept_f1", **f1_report.as_dict()}, sort_keys=True) + "\n")
        f.write(json.dumps({"metric": "pr_at_n", **curve.as_dict()}, sort_keys=True) + "\n")
        for item in f1_report.entries:
            f.write(json.dumps({"metric": "concept_f1_example", **item.as_dict()}, sort_keys=True) + "\n")

    print(
        f"Concept F1: {f1_report.f1:.4f} (P={f1_report.precision:.4f}, R={f1_report.recall:.4f}, "
        f"примеров {len(f1_report.entries)}, исключено {f1_report.excluded})"
    )
    print(format_pr_table(curve))
    logger.info("EVAL: Recall@%d = %.4f", config.k2, curve.recall[config.k2 - 1])
    return 0
