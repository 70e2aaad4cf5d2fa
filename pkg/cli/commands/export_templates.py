import json

from bridge_extractor import load_stopwords
from bridge_extractor.bundles import read_bundles, render_templates
from utils.atomic_io import atomic_write

from ..common import log_run, require_inputs


def add_parser(subparsers):
    parser = subparsers.add_parser("export-templates", help="Шаблонные заготовки объяснений по пакетам")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    require_inputs(config.bundles, config.stopwords)
    log_run("export-templates", config, [config.bundles, config.stopwords])
    stopwords = load_stopwords(config.stopwords)
    with atomic_write(config.templates, "w") as f:
        for bundle in read_bundles(config.bundles):
            line = {"id": bundle["id"], "templates": render_templates(bundle, stopwords)}
            f.write(json.dumps(line, ensure_ascii=False) + "\n")
    return 0
