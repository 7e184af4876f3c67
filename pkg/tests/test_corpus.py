import random

import pytest
from hypothesis import given, settings, strategies as st

from lexstrata.config import Config
from lexstrata.corpus import (BinaryCodebook, CodebookOverflowError, CorpusError,
                              decode_binary, encode_binary, load_corpus,
                              make_binary_episode, make_episode, strip_line)
from lexstrata.network import ConceptNetwork


def boundary_oracle(line):
    """Independent boundary computation from the token split."""
    tokens = line.split()
    positions = set()
    acc = 0
    for tok in tokens[:-1]:
        acc += len(tok)
        positions.add(acc)
    return frozenset(positions)


class TestStripLine:
    def test_sentence_with_punctuation(self):
        stripped, bounds = strip_line("An apple (or 2) a day!")
        assert stripped == "Anapple(or2)aday!"
        assert bounds == boundary_oracle("An apple (or 2) a day!")
        assert bounds == frozenset({2, 7, 10, 12, 13})

    def test_no_spaces(self):
        assert strip_line("abc") == ("abc", frozenset())

    def test_whitespace_run_collapses(self):
        assert strip_line("a  b") == ("ab", frozenset({1}))

    def test_leading_trailing_not_boundaries(self):
        stripped, bounds = strip_line("  hi there  ")
        assert stripped == "hithere"
        assert bounds == frozenset({2})

    def test_tabs_and_unicode_whitespace(self):
        stripped, bounds = strip_line("a\tb c")
        assert stripped == "abc"
        assert bounds == frozenset({1, 2})


@settings(max_examples=300, deadline=None)
@given(st.text(min_size=1, max_size=60))
def test_strip_line_properties(line):
    stripped, bounds = strip_line(line)
    assert stripped == "".join(ch for ch in line if not ch.isspace())
    assert all(0 < b < len(stripped) for b in bounds)
    assert sorted(bounds) == sorted(set(bounds))


class TestMakeEpisode:
    def test_allocates_primitives(self):
        net = ConceptNetwork(Config())
        ep = make_episode("abc", net)
        assert ep.stripped == "abc"
        assert ep.boundaries == frozenset()
        assert len(ep.primitive_ids) == 3
        assert len(net.concepts) == 3

    def test_reuses_primitives(self):
        net = ConceptNetwork(Config())
        make_episode("aba", net)
        ep = make_episode("ba", net)
        assert len(net.concepts) == 2
        assert ep.primitive_ids[0] == net.char_to_primitive["b"]

    def test_blank_line_rejected(self):
        net = ConceptNetwork(Config())
        with pytest.raises(CorpusError):
            make_episode("   ", net)


class TestLoadCorpus:
    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("ab\n\ncd\n", encoding="utf-8")
        handle = load_corpus(path)
        assert len(handle) == 2

    def test_empty_corpus_rejected(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("\n  \n", encoding="utf-8")
        with pytest.raises(CorpusError):
            load_corpus(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_corpus(tmp_path / "nope.txt")

    def test_sampling_is_uniform_ish(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("\n".join(f"line{i}" for i in range(4)) + "\n", encoding="utf-8")
        handle = load_corpus(path)
        rng = random.Random(0)
        counts = {}
        for _ in range(4000):
            line = handle.sample(rng)
            counts[line] = counts.get(line, 0) + 1
        assert set(counts) == {f"line{i}" for i in range(4)}
        assert all(800 < n < 1200 for n in counts.values())


class TestBinaryCodebook:
    def test_first_seen_order_codes(self):
        book = BinaryCodebook()
        encoded = encode_binary("goal", book)
        assert encoded == "00000000" + "00000001" + "00000010" + "00000011"

    def test_codes_are_stable(self):
        book = BinaryCodebook()
        assert encode_binary("oo", book) == encode_binary("oo", book)

    def test_overflow(self):
        book = BinaryCodebook()
        for i in range(256):
            book.code_for(chr(0x2500 + i))
        with pytest.raises(CodebookOverflowError):
            book.code_for("x")

    def test_state_round_trip(self):
        book = BinaryCodebook()
        encode_binary("stone", book)
        book2 = BinaryCodebook.from_state(book.to_state())
        assert book2.char_to_code == book.char_to_code
        assert book2.next_counter == book.next_counter


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.characters(blacklist_categories=("Z", "C")),
               min_size=1, max_size=20))
def test_binary_round_trip(token):
    book = BinaryCodebook()
    bits = encode_binary(token, book)
    assert len(bits) == 8 * len(token)
    assert set(bits) <= {"0", "1"}
    assert decode_binary(bits, book) == token


def test_make_binary_episode():
    net = ConceptNetwork(Config(binary_mode=True))
    book = BinaryCodebook()
    rng = random.Random(1)
    ep = make_binary_episode("two words", book, net, rng)
    assert ep.raw_line in ("two", "words")
    assert len(ep.stripped) == 8 * len(ep.raw_line)
    assert ep.boundaries == frozenset(range(8, len(ep.stripped), 8))
    assert set(net.char_to_primitive) <= {"0", "1"}
