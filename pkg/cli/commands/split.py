from bridge_extractor import split_dataset
from bridge_extractor.dataset import ParseReport

from ..common import log_run, require_inputs, write_json


def add_parser(subparsers):
    parser = subparsers.add_parser("split", help="Разбить исходный набор на train/dev/test")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    require_inputs(config.raw_dataset)
    log_run("split", config, [config.raw_dataset])
    report = ParseReport()
    sizes = split_dataset(config.raw_dataset, config.data_dir, config.split_ratios, config.seed, report)
    write_json({"sizes": sizes, **report.as_dict()}, config.report_path("split.json"))
    return 0
