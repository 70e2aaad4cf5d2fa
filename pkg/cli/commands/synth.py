import logging
from pathlib import Path

from bridge_extractor import generate_planted_corpus
from bridge_extractor.synthetic import write_planted_corpus
from utils.atomic_io import atomic_write

from ..common import log_run

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("synth", help="Сгенерировать синтетический корпус с заложенной закономерностью")
    parser.add_argument("--train", type=int, default=200, help="Число обучающих примеров")
    parser.add_argument("--dev", type=int, default=25, help="Число примеров dev")
    parser.add_argument("--test", type=int, default=50, help="Число тестовых примеров")
    parser.add_argument("--nodes", type=int, default=300, help="Число узлов графа")
    parser.set_defaults(handler=run)
    return parser


def run(config, args) -> int:
    log_run("synth", config, [])
    corpus = generate_planted_corpus(
        seed=config.seed, num_nodes=args.nodes, num_train=args.train, num_dev=args.dev, num_test=args.test
    )
    out_dir = Path(config.synth_dir)
    paths = write_planted_corpus(corpus, out_dir)

    # конфигурация, направляющая остальные команды на синтетические данные
    artifacts = out_dir / "artifacts"
    conf = {
        "assertions": paths["assertions"],
        "data_dir": out_dir,
        "index": artifacts / "graph.bkg",
        "cache_dir": artifacts / "cache",
        "checkpoint": artifacts / "model.bkgm",
        "bundles": artifacts / "bundles.jsonl",
        "templates": artifacts / "templates.jsonl",
        "report_dir": artifacts / "reports",
        "seed": config.seed,
    }
    with atomic_write(out_dir / "pipeline.conf", "w") as f:
        f.writelines(f"{key} = {value}\n" for key, value in conf.items())
    logger.info("SYNTH: корпус записан в %s, конфигурация %s", out_dir, out_dir / "pipeline.conf")
    return 0
