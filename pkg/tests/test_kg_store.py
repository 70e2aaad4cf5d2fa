import pytest

from bridge_extractor import load_conceptnet
from bridge_extractor.errors import ConfigError, InvalidConceptIdError
from bridge_extractor.kg_store import IngestionReport, Triple, normalize_concept_uri

from .conftest import TOY_SURFACES, make_graph


def write(tmp_path, rows, name="assertions.csv"):
    path = tmp_path / name
    path.write_text("".join(f"/a/{i}\t{r}\t/c/en/{h}\t/c/en/{t}\t{{}}\n" for i, (h, r, t) in enumerate(rows)), encoding="utf-8")
    return path


def test_three_row_file_dedup_and_reverse(tmp_path, relation_vocab):
    path = write(tmp_path, [("a", "/r/AtLocation", "b"), ("b", "/r/UsedFor", "c"), ("a", "/r/AtLocation", "b")])
    graph = load_conceptnet(path, relation_vocab)
    assert graph.num_concepts == 3
    assert graph.num_triples == 4
    atloc = relation_vocab.merged_id("atlocation")
    assert Triple(0, atloc, 1) in set(graph.neighbors(0))
    assert Triple(1, relation_vocab.reverse_of(atloc), 0) in set(graph.neighbors(1))


def test_empty_file(tmp_path, relation_vocab):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    report = IngestionReport()
    graph = load_conceptnet(path, relation_vocab, report=report)
    assert graph.num_concepts == 0
    assert graph.num_triples == 0
    assert report.rows_total == 0
    assert report.malformed == []


def test_toy_assertions(toy_assertions, relation_vocab):
    report = IngestionReport()
    graph = load_conceptnet(toy_assertions, relation_vocab, report=report)
    assert graph.surfaces == TOY_SURFACES
    assert graph.num_triples == 14
    assert (report.rows_total, report.rows_kept) == (11, 7)
    assert (report.rows_foreign, report.rows_unknown_relation, report.rows_self_loop) == (1, 1, 1)
    assert [line for line, _ in report.malformed] == [10]


def test_rows_must_have_five_fields(tmp_path, relation_vocab):
    path = tmp_path / "assertions.csv"
    path.write_text(
        "/a/1\t/r/AtLocation\t/c/en/fish\t/c/en/water\t{}\n"
        "/a/2\t/r/AtLocation\t/c/en/bird\t/c/en/nest\n"
        "/a/3\t/r/UsedFor\t/c/en/net\t/c/en/fish\t{}\textra\n",
        encoding="utf-8",
    )
    report = IngestionReport()
    graph = load_conceptnet(path, relation_vocab, report=report)
    assert (report.rows_total, report.rows_kept) == (3, 1)
    assert report.malformed == [(2, "ожидалось 5 полей, получено 4"), (3, "ожидалось 5 полей, получено 6")]
    assert graph.surfaces == ("fish", "water")


def test_has_a_is_stored_as_part_of(toy_graph, relation_vocab):
    wing, bird = toy_graph.concept_id("wing"), toy_graph.concept_id("bird")
    partof = relation_vocab.merged_id("partof")
    assert Triple(wing, partof, bird) in set(toy_graph.neighbors(wing))


def test_every_triple_has_its_reverse(toy_graph):
    vocab = toy_graph.vocab
    stored = {toy_graph.triple(i) for i in range(toy_graph.num_triples)}
    for h, r, t in stored:
        assert Triple(t, vocab.reverse_of(r), h) in stored


def test_triples_sorted_and_offsets_consistent(toy_graph):
    keys = [tuple(toy_graph.triple(i)) for i in range(toy_graph.num_triples)]
    assert keys == sorted(keys)
    for c in range(toy_graph.num_concepts):
        assert all(t.head == c for t in toy_graph.neighbors(c))
        assert toy_graph.degree(c) == len(list(toy_graph.neighbors(c)))


def test_multiword_surface(toy_graph):
    assert toy_graph.concept_id("ice cream") == 7
    assert normalize_concept_uri("/c/en/ice_cream/n/wn/food", "en") == "ice cream"
    assert normalize_concept_uri("/c/fr/glace", "en") is None


def test_one_forward_edge_neighbors():
    graph = make_graph(3, [(0, 2, 1)])
    assert list(graph.neighbors(0)) == [Triple(0, 2, 1)]
    assert list(graph.neighbors(1)) == [Triple(1, 2 + 17, 0)]
    assert list(graph.neighbors(2)) == []


def test_neighbors_invalid_id(toy_graph):
    with pytest.raises(InvalidConceptIdError):
        list(toy_graph.neighbors(toy_graph.num_concepts))
    with pytest.raises(InvalidConceptIdError):
        list(toy_graph.neighbors(-1))


def test_unknown_relation_mapped_to_catch_all(toy_assertions, relation_vocab):
    report = IngestionReport()
    graph = load_conceptnet(toy_assertions, relation_vocab, unknown_relation_policy="relatedto", report=report)
    assert report.rows_kept == 8
    wiki = graph.concept_id("fish wiki")
    assert Triple(0, relation_vocab.merged_id("relatedto"), wiki) in set(graph.neighbors(0))


def test_bad_unknown_relation_policy(toy_assertions, relation_vocab):
    with pytest.raises(ConfigError):
        load_conceptnet(toy_assertions, relation_vocab, unknown_relation_policy="drop")


def test_ingestion_is_deterministic(toy_assertions, relation_vocab):
    assert load_conceptnet(toy_assertions, relation_vocab) == load_conceptnet(toy_assertions, relation_vocab)


def test_gzip_input(tmp_path, relation_vocab):
    import gzip

    from .conftest import TOY_ASSERTIONS

    path = tmp_path / "assertions.csv.gz"
    with gzip.open(path, "wt", encoding="utf-8") as f:
        f.write(TOY_ASSERTIONS)
    assert load_conceptnet(path, relation_vocab).surfaces == TOY_SURFACES
