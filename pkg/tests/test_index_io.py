import pytest

from bridge_extractor import load_index, save_index
from bridge_extractor.errors import (
    ArtifactError,
    IndexChecksumError,
    IndexTruncatedError,
    IndexVersionError,
)


@pytest.fixture
def saved_index(tmp_path, toy_graph):
    path = tmp_path / "graph.bkg"
    save_index(toy_graph, path)
    return path


def corrupt(path, offset):
    data = bytearray(path.read_bytes())
    data[offset] ^= 0xFF
    path.write_bytes(bytes(data))


def test_round_trip(saved_index, toy_graph):
    loaded = load_index(saved_index)
    assert loaded == toy_graph
    assert loaded.stem_index == toy_graph.stem_index
    assert list(loaded.neighbors(0)) == list(toy_graph.neighbors(0))
    assert loaded.concept_id("ice cream") == 7


def test_round_trip_with_relation_vocab(saved_index, relation_vocab):
    assert load_index(saved_index, relation_vocab).vocab is relation_vocab


def test_zero_byte_file(tmp_path):
    path = tmp_path / "empty.bkg"
    path.write_bytes(b"")
    with pytest.raises(IndexTruncatedError):
        load_index(path)


def test_truncated_file(saved_index):
    data = saved_index.read_bytes()
    saved_index.write_bytes(data[: len(data) - 3])
    with pytest.raises(IndexTruncatedError):
        load_index(saved_index)


def test_bad_magic(saved_index):
    corrupt(saved_index, 0)
    with pytest.raises(ArtifactError):
        load_index(saved_index)


def test_version_mismatch(saved_index):
    corrupt(saved_index, 4)
    with pytest.raises(IndexVersionError):
        load_index(saved_index)


def test_checksum_mismatch(saved_index):
    corrupt(saved_index, 8)
    with pytest.raises(IndexChecksumError):
        load_index(saved_index)


def test_missing_file(tmp_path):
    with pytest.raises(ArtifactError):
        load_index(tmp_path / "absent.bkg")
