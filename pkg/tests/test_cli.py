import json

import pytest
import requests

from bridge_extractor import fetch_conceptnet
from bridge_extractor.errors import ArtifactError, ConfigError
from cli import EXIT_CONFIG, EXIT_DATA, EXIT_IO, EXIT_OK, create_parser, main
from cli.config import PipelineConfig, config_keys, load_config

from .conftest import TOY_ASSERTIONS

FISH_RECORD = {"id": "fish-1", "statement": "Fish swim", "explanations": ["fish live in water and water is wet"]}


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "assertions.csv").write_text(TOY_ASSERTIONS, encoding="utf-8")
    data = tmp_path / "data"
    data.mkdir()
    (data / "train.jsonl").write_text(json.dumps(FISH_RECORD) + "\n", encoding="utf-8")
    return tmp_path


def settings(root):
    return [
        "--set", f"assertions={root / 'assertions.csv'}",
        "--set", f"index={root / 'artifacts' / 'graph.bkg'}",
        "--set", f"data_dir={root / 'data'}",
        "--set", f"cache_dir={root / 'artifacts' / 'cache'}",
        "--set", f"report_dir={root / 'reports'}",
    ]


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_parser_lists_every_command():
    parser = create_parser()
    for command in ("fetch", "ingest", "split", "retrieve", "stats", "train", "extract", "eval", "export-templates", "synth"):
        args = parser.parse_args([command])
        assert callable(args.handler)
    with pytest.raises(SystemExit):
        parser.parse_args([])


def test_ingest_then_stats(workspace, capsys):
    assert main(settings(workspace) + ["ingest"]) == EXIT_OK
    ingest = read_json(workspace / "reports" / "ingest.json")
    assert (ingest["rows_total"], ingest["rows_kept"], ingest["rows_self_loop"]) == (11, 7, 1)
    assert ingest["malformed"][0]["line"] == 10

    assert main(settings(workspace) + ["stats"]) == EXIT_OK
    assert read_json(workspace / "reports" / "stats.json") == {
        "num_examples": 1,
        "concept_histogram": {"1": 1, "2": 1},
        "example_histogram": {"2": 1},
        "nodes_by_hop": {"0": 2.0, "1": 3.0, "2": 4.0, "3": 4.0},
    }
    assert "Примеров: 1" in capsys.readouterr().out


def test_retrieve_writes_cache_and_report(workspace):
    assert main(settings(workspace) + ["ingest"]) == EXIT_OK
    assert main(settings(workspace) + ["retrieve"]) == EXIT_OK
    assert (workspace / "artifacts" / "cache" / "train.bkgs").is_file()
    report = read_json(workspace / "reports" / "retrieve.json")
    assert set(report) == {"train"}
    assert report["train"]["examples"] == 1
    assert report["train"]["mean_bridges"] == 2.0


def test_missing_index_is_io_error_without_outputs(workspace):
    assert main(settings(workspace) + ["retrieve"]) == EXIT_IO
    assert not (workspace / "reports").exists()
    assert not (workspace / "artifacts").exists()


def test_no_usable_examples_is_data_error(workspace):
    (workspace / "data" / "train.jsonl").write_text(
        json.dumps({"id": "x", "statement": "nothing to see", "explanations": ["none"]}) + "\n", encoding="utf-8"
    )
    assert main(settings(workspace) + ["ingest"]) == EXIT_OK
    assert main(settings(workspace) + ["retrieve"]) == EXIT_OK
    assert read_json(workspace / "reports" / "retrieve.json")["train"]["skipped_no_sources"] == 1
    assert main(settings(workspace) + ["train"]) == EXIT_DATA


LONG_RECORD = {
    "id": "fish-long",
    "statement": "fish swim in the deep blue cold water every single day",
    "explanations": ["fish live in water"],
}


def test_long_statements_are_skipped_not_truncated(workspace):
    with open(workspace / "data" / "train.jsonl", "a", encoding="utf-8") as f:
        f.write(json.dumps(LONG_RECORD) + "\n")
    assert main(settings(workspace) + ["ingest"]) == EXIT_OK
    assert main(settings(workspace) + ["--set", "max_len=5", "retrieve"]) == EXIT_OK
    report = read_json(workspace / "reports" / "retrieve.json")["train"]
    assert (report["examples"], report["skipped_too_long"], report["skipped_no_sources"]) == (1, 1, 0)


def test_training_on_statements_longer_than_max_len_is_data_error(workspace):
    with open(workspace / "data" / "train.jsonl", "a", encoding="utf-8") as f:
        f.write(json.dumps(LONG_RECORD) + "\n")
    checkpoint = workspace / "artifacts" / "model.bkgm"
    argv = settings(workspace) + ["--set", f"checkpoint={checkpoint}"]
    assert main(argv + ["ingest"]) == EXIT_OK
    assert main(argv + ["retrieve"]) == EXIT_OK
    assert read_json(workspace / "reports" / "retrieve.json")["train"]["examples"] == 2
    assert main(argv + ["--set", "max_len=5", "train"]) == EXIT_DATA
    assert not checkpoint.exists()


@pytest.mark.parametrize("override", ["k2=50", "no_such_key=1", "budget=-3", "use_routing=maybe", "k1"])
def test_bad_configuration_exit_code(workspace, override):
    assert main(["--set", override, "stats"]) == EXIT_CONFIG


def test_config_precedence(tmp_path):
    path = tmp_path / "pipeline.conf"
    path.write_text("# комментарий\nk1 = 40\nk2 = 5\nbudget = none\nuse_routing = off\nsplit_ratios = 0.8, 0.1, 0.1\n", encoding="utf-8")
    config = load_config(path, ["k1=50"])
    assert (config.k1, config.k2) == (50, 5)
    assert config.budget is None
    assert config.use_routing is False
    assert config.split_ratios == (0.8, 0.1, 0.1)
    assert load_config().k1 == PipelineConfig().k1 == 30
    assert "lambda_concept" in config_keys()


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.conf")


def test_split_command(tmp_path):
    raw = tmp_path / "raw.jsonl"
    raw.write_text("".join(json.dumps({"id": f"r{i}", "statement": "s", "explanations": ["a", "b"]}) + "\n" for i in range(20)), encoding="utf-8")
    argv = ["--set", f"raw_dataset={raw}", "--set", f"data_dir={tmp_path / 'splits'}", "--set", f"report_dir={tmp_path / 'reports'}"]
    assert main(argv + ["split"]) == EXIT_OK
    assert read_json(tmp_path / "reports" / "split.json")["sizes"] == {"train": 34, "dev": 1, "test": 2}


def run_synthetic_pipeline(root, *extra):
    synth_dir = root / "synth"
    assert main(["--set", f"synth_dir={synth_dir}", "synth", "--nodes", "60", "--train", "12", "--dev", "4", "--test", "6"]) == EXIT_OK
    base = ["--config", str(synth_dir / "pipeline.conf"), "--set", "d=8", "--set", "epochs=1", "--set", "k1=10", *extra]
    for command in ("ingest", "retrieve", "stats", "train", "extract", "eval", "export-templates"):
        assert main(base + [command]) == EXIT_OK, command
    return synth_dir / "artifacts"


PRODUCED = (
    "graph.bkg",
    "cache/train.bkgs",
    "cache/dev.bkgs",
    "cache/test.bkgs",
    "model.bkgm",
    "bundles.jsonl",
    "templates.jsonl",
    "reports/retrieve.json",
    "reports/stats.json",
    "reports/train.json",
    "reports/eval.jsonl",
)


def test_synthetic_pipeline_is_deterministic(tmp_path):
    first = run_synthetic_pipeline(tmp_path / "a")
    second = run_synthetic_pipeline(tmp_path / "b")
    for name in PRODUCED:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    lines = [json.loads(line) for line in (first / "reports" / "eval.jsonl").read_text(encoding="utf-8").splitlines()]
    assert [line["metric"] for line in lines[:2]] == ["concept_f1", "pr_at_n"]
    assert len(lines[1]["curve"]) == 10
    bundle = json.loads((first / "bundles.jsonl").read_text(encoding="utf-8").splitlines()[0])
    assert set(bundle) == {"id", "statement", "selected", "ranking", "paths"}
    assert len(bundle["selected"]) <= 3
    assert all(len(step) == 3 for path in bundle["paths"] for step in path)


def test_thread_count_does_not_change_artifacts(tmp_path):
    serial = run_synthetic_pipeline(tmp_path / "serial", "--set", "workers=1")
    threaded = run_synthetic_pipeline(tmp_path / "threaded", "--set", "workers=3")
    for name in PRODUCED:
        assert (serial / name).read_bytes() == (threaded / name).read_bytes(), name


def test_fetch_uses_cached_file(tmp_path, monkeypatch):
    cached = tmp_path / "assertions.csv.gz"
    cached.write_bytes(b"cached")

    def offline(*args, **kwargs):
        raise AssertionError("сеть не должна использоваться")

    monkeypatch.setattr(requests, "get", offline)
    assert fetch_conceptnet(cached) == cached
    assert cached.read_bytes() == b"cached"


def test_fetch_failure_leaves_no_file(tmp_path, monkeypatch):
    def unreachable(*args, **kwargs):
        raise requests.exceptions.ConnectionError("нет сети")

    monkeypatch.setattr(requests, "get", unreachable)
    target = tmp_path / "assertions.csv.gz"
    with pytest.raises(ArtifactError):
        fetch_conceptnet(target)
    assert not target.exists()


def test_fetch_command_downloads(tmp_path, monkeypatch):
    class FakeResponse:
        headers = {"content-length": "7"}

        def __enter__(self):
            return self

        def __exit__(self, *exc):
            return False

        def raise_for_status(self):
            pass

        def iter_content(self, chunk_size):
            yield b"abc"
            yield b"defg"

    monkeypatch.setattr(requests, "get", lambda *a, **k: FakeResponse())
    target = tmp_path / "dl" / "assertions.csv.gz"
    assert main(["--set", f"assertions={target}", "fetch"]) == EXIT_OK
    assert target.read_bytes() == b"abcdefg"
