"""Tests for SF and node sequences"""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backend.errors import EmptyGraphError, SequenceFormatError
from backend.models import NodeSequence, ObjectNode, Relationship, SceneGraph, SfSequence
from backend.services.corpus_service import preprocess_graph
from backend.services.sf_codec import encode_sf, parse_nodes, parse_sf, serialize_nodes, serialize_sf
from tests.synthetic import random_graph

tokens = st.from_regex(r"[a-z0-9_]{1,8}", fullmatch=True)
triplets = st.lists(st.tuples(tokens, tokens, tokens), min_size=1, max_size=9)
node_pairs = st.lists(
    st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)), min_size=1, max_size=9
)


def _graph(*relationships):
    ids = sorted({n for s, _, o in relationships for n in (s, o)})
    labels = {1: "person", 2: "horse", 3: "hat"}
    return SceneGraph(
        nodes=tuple(ObjectNode(node_id=i, class_label=labels[i]) for i in ids),
        relationships=tuple(Relationship(subject_id=s, predicate=p, object_id=o) for s, p, o in relationships),
    )


class TestEncodeSf:
    """Test encode_sf"""

    def test_single_relationship(self):
        """Test one relationship gives one triplet"""
        sf, nodes = encode_sf(_graph((1, "ride", 2)))
        assert sf.triplets == (("person", "ride", "horse"),)
        assert nodes.pairs == ((1, 2),)

    def test_two_relationships_six_tokens(self):
        """Test two relationships give six tokens"""
        sf, _ = encode_sf(_graph((1, "ride", 2), (3, "on", 1)))
        assert serialize_sf(sf) == "person ride horse hat on person"

    def test_shared_subject_repeats_node_id(self):
        """Test a shared subject repeats its node id"""
        _, nodes = encode_sf(_graph((1, "ride", 2), (1, "wearing", 3)))
        assert nodes.pairs == ((1, 2), (1, 3))

    def test_empty_graph(self):
        """Test a graph without relationships"""
        with pytest.raises(EmptyGraphError):
            encode_sf(SceneGraph(nodes=(ObjectNode(node_id=1, class_label="a"),), relationships=()))

    def test_lengths_match_relationships(self, small_corpus):
        """Test one triplet and node pair per relationship"""
        for sample in small_corpus:
            sf, nodes = encode_sf(preprocess_graph(sample).graph)
            assert len(sf) == len(nodes) == len(sample.graph.relationships)
            assert parse_sf(serialize_sf(sf)) == sf


class TestParseSf:
    """Test parse_sf"""

    def test_one_triplet(self):
        """Test reading one triplet"""
        assert parse_sf("person ride horse").triplets == (("person", "ride", "horse"),)

    def test_length_error(self):
        """Test token counts must be a multiple of three"""
        with pytest.raises(SequenceFormatError):
            parse_sf("person ride")

    def test_two_triplets(self):
        """Test reading two triplets"""
        assert len(parse_sf("a b c d e f")) == 2

    def test_empty_line(self):
        """Test an empty line"""
        with pytest.raises(SequenceFormatError):
            parse_sf("   ")

    @given(triplets)
    def test_round_trip(self, value):
        """Test serialize then parse returns the value"""
        seq = SfSequence(triplets=tuple(value))
        assert parse_sf(serialize_sf(seq)) == seq


class TestNodes:
    """Test node sequence text form"""

    def test_serialize(self):
        """Test node pair text form"""
        assert serialize_nodes(NodeSequence(pairs=((3, 7),))) == "3 7"

    def test_empty_sequence_cannot_be_reread(self):
        """Test an empty node line is rejected"""
        with pytest.raises(SequenceFormatError):
            parse_nodes(serialize_nodes(NodeSequence(pairs=())))

    @pytest.mark.parametrize("text", ["3", "3 x", "1 2;3", "1 2 3"])
    def test_malformed(self, text):
        """Test malformed node lines"""
        with pytest.raises(SequenceFormatError):
            parse_nodes(text)

    @given(node_pairs)
    def test_round_trip(self, value):
        """Test serialize then parse returns the value"""
        seq = NodeSequence(pairs=tuple(value))
        assert parse_nodes(serialize_nodes(seq)) == seq

    @given(st.randoms(use_true_random=False), st.integers(1, 9))
    def test_graph_round_trip(self, rng, k):
        """encode, serialize and parse reproduce the graph's triplets and pairs"""
        sf, nodes = encode_sf(random_graph(rng, k))
        assert parse_sf(serialize_sf(sf)) == sf
        assert parse_nodes(serialize_nodes(nodes)) == nodes
