from bridge_extractor import fetch_conceptnet

from ..common import log_run


def add_parser(subparsers):
    parser = subparsers.add_parser("fetch", help="Скачать дамп утверждений ConceptNet")
    parser.add_argument("--force", action="store_true", help="Игнорировать кэш и скачать заново")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    log_run("fetch", config, [])
    fetch_conceptnet(config.assertions, url=config.conceptnet_url, force=args.force)
    return 0
