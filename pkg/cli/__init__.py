import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from bridge_extractor.errors import ArtifactError, ConfigError, DataError, NumericalInstabilityError

from .commands import eval as eval_command
from .commands import export_templates, extract, fetch, ingest, retrieve, split, stats, synth, train
from .config import load_config

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "MOSTIK_LOG_LEVEL"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_NUMERICAL = 5


def configure_logging() -> None:
    level = os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def create_parser() -> argparse.ArgumentParser:
    """
    Фабрика парсера: общие флаги и подкоманды из cli/commands.
    """
    parser = argparse.ArgumentParser(prog="mostik", description="Извлечение концептов-мостов из графа знаний")
    parser.add_argument("--config", help="Файл конфигурации 'ключ = значение'")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Переопределить ключ конфигурации (можно повторять)",
    )
    parser.add_argument("--progress", action="store_true", help="Показывать индикаторы прогресса")

    # Регистрация подкоманд
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (fetch, ingest, split, retrieve, stats, train, extract, eval_command, export_templates, synth):
        command.add_parser(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = create_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
        return args.handler(config, args)
    except ConfigError as e:
        logger.error("Ошибка конфигурации: %s", e)
        return EXIT_CONFIG
    except DataError as e:
        logger.error("Ошибка данных: %s", e)
        return EXIT_DATA
    except NumericalInstabilityError as e:
        logger.error("Численная ошибка: %s", e)
        return EXIT_NUMERICAL
    except (ArtifactError, OSError) as e:
        logger.error("Ошибка ввода-вывода: %s", e)
        return EXIT_IO
