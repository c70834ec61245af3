"""Tests for corpus ingestion, preprocessing and filtering"""
import json

import pytest

from backend.errors import ConsistencyError, CorpusParseError, EmptyGraphError
from backend.models import ClassFrequencies, FilterConfig
from backend.services.corpus_service import (
    dump_corpus,
    filter_corpus,
    normalize_label,
    parse_corpus,
    preprocess_graph,
    read_split_manifest,
    split_corpus,
)
from tests.synthetic import corpus_entry

BOX = (10, 10, 100, 100)


def _document(*entries):
    return json.dumps({"samples": list(entries)})


def _parse_one(entry):
    return parse_corpus(_document(entry))[0]


@pytest.fixture
def frequencies():
    """Class counts straddling the default 2000 / 500 thresholds"""
    return ClassFrequencies(
        objects={"person": 2000, "horse": 2000, "dog": 2000, "tree": 2000, "car": 2000, "bird": 1999},
        predicates={"riding": 500, "near": 500, "on": 500, "flying": 499},
    )


class TestParseCorpus:
    """Test parse_corpus"""

    def test_minimal_document(self):
        """One image, two objects, one relationship"""
        samples = parse_corpus(
            _document(corpus_entry("a", [(1, "person", BOX), (2, "horse", BOX)], [(1, "riding", 2)]))
        )
        assert len(samples) == 1
        assert len(samples[0].graph.relationships) == 1
        assert samples[0].layout.image_w == 800

    def test_relationship_order_preserved(self, horse_sample):
        """Test relationships keep document order"""
        assert [r.predicate for r in horse_sample.graph.relationships] == ["riding", "on"]

    def test_unknown_node_reference(self):
        """Test a relationship to an unknown node names the field"""
        entry = corpus_entry("bad", [(1, "person", BOX)], [(1, "riding", 7)])
        with pytest.raises(CorpusParseError) as excinfo:
            parse_corpus(_document(entry))
        assert excinfo.value.sample_id == "bad"
        assert excinfo.value.field == "relationships[0].object"

    def test_zero_width_box(self):
        """Test a zero-width box is rejected"""
        entry = corpus_entry("flat", [(1, "person", (0, 0, 0, 10)), (2, "dog", BOX)], [(1, "near", 2)])
        with pytest.raises(CorpusParseError) as excinfo:
            parse_corpus(_document(entry))
        assert excinfo.value.field == "objects[0].box"

    @pytest.mark.parametrize("box", [(float("nan"), 0, 100, 100), (0, 0, float("nan"), 50), (0, 0, float("inf"), 50)])
    def test_non_finite_box(self, box):
        """Test NaN and infinite coordinates are rejected, not clamped"""
        entry = corpus_entry("nan", [(1, "person", box), (2, "dog", BOX)], [(1, "near", 2)])
        with pytest.raises(CorpusParseError) as excinfo:
            parse_corpus(_document(entry))
        assert excinfo.value.sample_id == "nan"
        assert excinfo.value.field.startswith("objects[0].box")

    def test_missing_field_names_location(self):
        """Test a missing field names its location"""
        entry = corpus_entry("nofield", [(1, "person", BOX)], [])
        del entry["objects"][0]["box"]
        with pytest.raises(CorpusParseError) as excinfo:
            parse_corpus(_document(entry))
        assert excinfo.value.sample_id == "nofield"
        assert "objects[0].box" in excinfo.value.field

    def test_self_relationship(self):
        """Test a relationship from a node to itself"""
        entry = corpus_entry("self", [(1, "person", BOX)], [(1, "near", 1)])
        with pytest.raises(CorpusParseError):
            parse_corpus(_document(entry))

    def test_duplicate_sample_ids(self):
        """Test sample ids must be unique"""
        entry = corpus_entry("twice", [(1, "a", BOX), (2, "b", BOX)], [(1, "on", 2)])
        with pytest.raises(CorpusParseError):
            parse_corpus(_document(entry, entry))

    def test_not_json(self):
        """Test a document that is not JSON"""
        with pytest.raises(CorpusParseError):
            parse_corpus("{samples: ")

    def test_box_clamped_to_image(self):
        """Test boxes are clipped to the image"""
        sample = _parse_one(
            corpus_entry("edge", [(1, "car", (-20, 550, 100, 100)), (2, "dog", BOX)], [(1, "near", 2)])
        )
        box = sample.layout.boxes[1]
        assert (box.x, box.y, box.w, box.h) == (0.0, 550.0, 80.0, 50.0)

    def test_box_outside_image(self):
        """Test a box entirely outside the image"""
        entry = corpus_entry("off", [(1, "car", (900, 0, 10, 10)), (2, "dog", BOX)], [(1, "near", 2)])
        with pytest.raises(CorpusParseError):
            parse_corpus(_document(entry))

    def test_labels_normalized(self):
        """Test class and predicate labels are normalized"""
        sample = _parse_one(
            corpus_entry("n", [(1, "Traffic  Light", BOX), (2, "pole", BOX)], [(1, "Attached To", 2)])
        )
        assert sample.graph.node_map()[1].class_label == "traffic_light"
        assert sample.graph.relationships[0].predicate == "attached_to"

    @pytest.mark.parametrize(
        "label,expected",
        [("Tree", "tree"), (" t-shirt ", "t_shirt"), ("man's hat", "man_s_hat"), ("!!", "")],
    )
    def test_normalize_label(self, label, expected):
        """Test label normalization"""
        assert normalize_label(label) == expected

    def test_dump_round_trip(self, small_corpus):
        """dump_corpus writes what parse_corpus reads"""
        assert parse_corpus(dump_corpus(small_corpus)) == small_corpus


class TestPreprocessGraph:
    """Test preprocess_graph"""

    def test_drops_isolated_objects(self, horse_sample):
        """Test objects in no relationship are dropped"""
        processed = preprocess_graph(horse_sample)
        assert [n.node_id for n in processed.graph.nodes] == [1, 2, 3]
        assert set(processed.layout.boxes) == {1, 2, 3}
        assert processed.graph.relationships == horse_sample.graph.relationships

    def test_drops_attributes(self):
        """Test attributes are dropped"""
        entry = corpus_entry("attr", [(1, "car", BOX), (2, "dog", BOX)], [(1, "near", 2)])
        entry["objects"][0]["attributes"] = ["Red"]
        sample = _parse_one(entry)
        assert sample.graph.nodes[0].attributes == ("red",)
        assert preprocess_graph(sample).graph.nodes[0].attributes == ()

    def test_idempotent(self, small_corpus):
        """Test preprocessing twice changes nothing"""
        for sample in small_corpus:
            once = preprocess_graph(sample)
            assert preprocess_graph(once) == once

    def test_no_relationships(self):
        """Test a graph without relationships"""
        sample = _parse_one(corpus_entry("empty", [(1, "car", BOX)], []))
        with pytest.raises(EmptyGraphError):
            preprocess_graph(sample)


class TestFilterCorpus:
    """Test filter_corpus rules and their order"""

    def test_rare_object_class_removed_with_relationships(self, frequencies):
        """Test rare object classes take their relationships with them"""
        sample = _parse_one(
            corpus_entry(
                "rare",
                [(1, "person", BOX), (2, "horse", BOX), (3, "dog", BOX), (4, "bird", BOX)],
                [(1, "riding", 2), (3, "near", 1), (4, "on", 2)],
            )
        )
        [kept] = filter_corpus([sample], FilterConfig(), frequencies)
        assert [n.node_id for n in kept.graph.nodes] == [1, 2, 3]
        assert [r.predicate for r in kept.graph.relationships] == ["riding", "near"]
        assert 4 not in kept.layout.boxes

    def test_rare_predicate_removed(self, frequencies):
        """Test rare predicates are removed"""
        sample = _parse_one(
            corpus_entry(
                "pred",
                [(1, "person", BOX), (2, "horse", BOX), (3, "dog", BOX)],
                [(1, "riding", 2), (3, "flying", 1)],
            )
        )
        [kept] = filter_corpus([sample], FilterConfig(), frequencies)
        assert [r.predicate for r in kept.graph.relationships] == ["riding"]
        assert len(kept.graph.nodes) == 3

    def test_small_box_removed(self, frequencies):
        """A 31-pixel side is culled, 32 survives"""
        sample = _parse_one(
            corpus_entry(
                "tiny",
                [(1, "person", BOX), (2, "horse", (0, 0, 31, 200)), (3, "dog", (0, 0, 32, 32)), (4, "car", BOX)],
                [(1, "riding", 2), (3, "near", 1), (4, "near", 1)],
            )
        )
        [kept] = filter_corpus([sample], FilterConfig(), frequencies)
        assert [n.node_id for n in kept.graph.nodes] == [1, 3, 4]
        assert [(r.subject_id, r.object_id) for r in kept.graph.relationships] == [(3, 1), (4, 1)]

    def test_two_objects_dropped(self, frequencies):
        """Test samples with too few objects are dropped"""
        sample = _parse_one(corpus_entry("pair", [(1, "person", BOX), (2, "horse", BOX)], [(1, "riding", 2)]))
        assert filter_corpus([sample], FilterConfig(), frequencies) == []

    def test_thirty_one_objects_dropped(self, frequencies):
        """Test samples with too many objects are dropped"""
        objects = [(i, "car", BOX) for i in range(31)]
        sample = _parse_one(corpus_entry("crowd", objects, [(0, "near", 1)]))
        assert filter_corpus([sample], FilterConfig(), frequencies) == []
        thirty = _parse_one(corpus_entry("thirty", objects[:30], [(0, "near", 1)]))
        assert len(filter_corpus([thirty], FilterConfig(), frequencies)) == 1

    def test_only_rare_relationships_dropped(self, frequencies):
        """Test samples left without relationships are dropped"""
        sample = _parse_one(
            corpus_entry(
                "norel",
                [(1, "person", BOX), (2, "horse", BOX), (3, "dog", BOX)],
                [(1, "flying", 2)],
            )
        )
        assert filter_corpus([sample], FilterConfig(), frequencies) == []

    def test_relationship_cap_keeps_first(self, frequencies):
        """Ten relationships are capped to the first nine in document order"""
        objects = [(i, "car", BOX) for i in range(11)]
        relationships = [(i, "near", i + 1) for i in range(10)]
        sample = _parse_one(corpus_entry("long", objects, relationships))
        [kept] = filter_corpus([sample], FilterConfig(), frequencies)
        assert [(r.subject_id, r.object_id) for r in kept.graph.relationships] == relationships_pairs(9)

    def test_cap_applies_after_class_cull(self, frequencies):
        """Test the relationship cap counts surviving relationships"""
        objects = [(i, "car", BOX) for i in range(12)] + [(99, "bird", BOX)]
        relationships = [(99, "near", 0)] + [(i, "near", i + 1) for i in range(11)]
        sample = _parse_one(corpus_entry("order", objects, relationships))
        [kept] = filter_corpus([sample], FilterConfig(), frequencies)
        assert [(r.subject_id, r.object_id) for r in kept.graph.relationships] == relationships_pairs(9)

    def test_fixed_point(self, frequencies, small_corpus):
        """Test filtering twice changes nothing"""
        config = FilterConfig(min_box_side=5, min_object_class_count=0, min_relationship_class_count=0, min_objects=2)
        once = filter_corpus(small_corpus, config, frequencies)
        assert filter_corpus(once, config, frequencies) == once

    def test_frequencies_default_to_input(self):
        """Without an explicit table, counts come from the samples themselves"""
        sample = _parse_one(
            corpus_entry("self", [(1, "person", BOX), (2, "horse", BOX), (3, "dog", BOX)], [(1, "riding", 2)])
        )
        config = FilterConfig(min_object_class_count=1, min_relationship_class_count=1)
        assert len(filter_corpus([sample], config)) == 1
        assert filter_corpus([sample], FilterConfig()) == []

    def test_empty_input(self, frequencies):
        """Test filtering an empty corpus"""
        assert filter_corpus([], FilterConfig(), frequencies) == []


def relationships_pairs(count):
    return [(i, i + 1) for i in range(count)]


class TestSplits:
    """Test split manifests"""

    def test_read_manifest(self, tmp_path):
        """Test manifests skip blanks and comments"""
        path = tmp_path / "train.txt"
        path.write_text("# training ids\ns01\n\ns02  # second\n", encoding="utf-8")
        assert read_split_manifest(path) == ["s01", "s02"]

    def test_split_keeps_manifest_order(self, small_corpus):
        """Test splits follow manifest order"""
        splits = split_corpus(small_corpus, {"train": ["s03", "s01"], "test": ["s02"]})
        assert [s.sample_id for s in splits["train"]] == ["s03", "s01"]
        assert [s.sample_id for s in splits["test"]] == ["s02"]

    def test_unknown_id(self, small_corpus):
        """Test a manifest naming an unknown sample"""
        with pytest.raises(ConsistencyError):
            split_corpus(small_corpus, {"train": ["nope"]})

    def test_id_in_two_splits(self, small_corpus):
        """Test a sample listed in two splits"""
        with pytest.raises(ConsistencyError):
            split_corpus(small_corpus, {"train": ["s01"], "val": ["s01"]})
