import logging

from bridge_extractor import RelationVocab, load_conceptnet, save_index
from bridge_extractor.kg_store import IngestionReport

from ..common import log_run, require_inputs, write_json

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("ingest", help="Утверждения ConceptNet -> индекс графа")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    require_inputs(config.assertions, config.relation_map)
    log_run("ingest", config, [config.assertions, config.relation_map])

    vocab = RelationVocab.from_file(config.relation_map)
    report = IngestionReport()
    graph = load_conceptnet(
        config.assertions,
        vocab,
        lang_filter=config.lang,
        unknown_relation_policy=config.unknown_relation_policy,
        report=report,
        show_progress=args.progress,
    )
    save_index(graph, config.index)
    write_json(report.as_dict(), config.report_path("ingest.json"))
    if report.malformed:
        logger.warning("INGEST: %d испорченных строк, подробности в ingest.json", len(report.malformed))
    return 0
