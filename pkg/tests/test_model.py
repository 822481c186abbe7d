"""
Tests for the shared domain types and the similarity/merge primitives.
"""

import random

import pytest

from logmend.model import (
    WILDCARD,
    LengthMismatchError,
    ParsedRecord,
    Template,
    TemplateIdAllocator,
    TemplateToken,
    TokenSeq,
    merge,
    render,
    similarity,
    wildcard_count,
)


class TestSimilarity:
    """Test positional similarity."""

    def test_wildcard_counts_as_match(self):
        """A wildcard on the template side matches any log token."""
        log = TokenSeq(("eth1", "send", "<*>", "packages"))
        tpl = Template.from_texts(1, ["eth0", "send", "<*>", "packages"])
        assert similarity(log, tpl) == 0.75

    def test_identical(self):
        log = TokenSeq(("a", "b", "c", "d"))
        assert similarity(log, Template.from_texts(1, log.tokens)) == 1.0

    def test_disjoint(self):
        assert similarity(TokenSeq(("a", "b")), Template.from_texts(1, ["c", "d"])) == 0.0

    def test_log_wildcard_counts_as_match(self):
        assert similarity(TokenSeq(("<*>", "x")), Template.from_texts(1, ["y", "x"])) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            similarity(TokenSeq(("a",)), Template.from_texts(1, ["a", "b"]))

    def test_symmetric(self):
        """Swapping the roles of log and template never changes the score."""
        rng = random.Random(3)
        vocab = ["a", "b", "c", WILDCARD]
        for _ in range(200):
            n = rng.randint(1, 8)
            x = [rng.choice(vocab) for _ in range(n)]
            y = [rng.choice(vocab) for _ in range(n)]
            assert similarity(x, y) == similarity(y, x)


class TestMerge:
    """Test positional merge."""

    def test_iface_update(self):
        merged = merge(TokenSeq(("eth1", "send", "<*>", "packages")),
                       Template.from_texts(1, ["eth0", "send", "<*>", "packages"]))
        assert render(merged) == "<*> send <*> packages"

    def test_identity(self):
        tpl = Template.from_texts(1, ["a", "b"])
        assert merge(TokenSeq(("a", "b")), tpl) == tpl.tokens

    def test_disjoint_gives_all_wildcards(self):
        merged = merge(TokenSeq(("a", "b", "c")), Template.from_texts(1, ["x", "y", "z"]))
        assert all(t.is_wildcard for t in merged)

    def test_keeps_cached_pos(self):
        tpl = Template.from_texts(1, ["send", "x"])
        tpl.cache_pos(0, "VERB")
        merged = merge(TokenSeq(("send", "y")), tpl)
        assert merged[0] == TemplateToken("send", "VERB")
        assert merged[1].is_wildcard

    def test_idempotent_and_monotone(self):
        """Merging twice changes nothing; a wildcard never turns back into a constant."""
        rng = random.Random(11)
        vocab = ["a", "b", "c", WILDCARD]
        for _ in range(200):
            n = rng.randint(1, 8)
            log = TokenSeq(tuple(rng.choice(vocab) for _ in range(n)))
            tpl = [rng.choice(vocab) for _ in range(n)]
            once = merge(log, tpl)
            twice = merge(log, once)
            assert [t.text for t in twice] == [t.text for t in once]
            for before, after in zip(tpl, once):
                if before == WILDCARD:
                    assert after.is_wildcard

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            merge(TokenSeq(("a", "b")), ["a"])


class TestTemplate:
    """Test template bookkeeping."""

    def test_wildcard_count(self):
        assert wildcard_count(Template.from_texts(1, ["<*>", "send", "<*>", "packages"])) == 2
        assert wildcard_count(Template.from_texts(2, ["a", "b"])) == 0
        assert wildcard_count(Template.from_texts(3, ["<*>"] * 3)) == 3

    def test_new_template_priority(self):
        tpl = Template.from_texts(1, ["a"])
        assert tpl.priority == (0, 1)

    def test_replace_tokens_marks_updated(self):
        tpl = Template.from_texts(1, ["eth0", "send"])
        assert tpl.replace_tokens([TemplateToken.wildcard(), TemplateToken("send")]) is True
        assert tpl.updated is True
        assert tpl.text == "<*> send"

    def test_replace_with_same_text_keeps_flag(self):
        tpl = Template.from_texts(1, ["a", "b"])
        assert tpl.replace_tokens([TemplateToken("a"), TemplateToken("b")]) is False
        assert tpl.updated is False

    def test_replace_tokens_length_mismatch(self):
        tpl = Template.from_texts(1, ["a", "b"])
        with pytest.raises(LengthMismatchError):
            tpl.replace_tokens([TemplateToken("a")])

    def test_empty_template_rejected(self):
        with pytest.raises(ValueError):
            Template(id=1, tokens=[])

    def test_to_dict(self):
        data = Template.from_texts(4, ["a", "<*>"]).to_dict()
        assert data == {'id': 4, 'template': 'a <*>', 'length': 2, 'updated': False, 'match_count': 1}


class TestMisc:
    def test_token_seq_from_list(self):
        seq = TokenSeq(["a", "b"])
        assert seq.tokens == ("a", "b")
        assert seq.length == 2
        assert seq.reversed() == ("b", "a")
        assert seq.text() == "a b"

    def test_allocator_is_monotonic(self):
        ids = TemplateIdAllocator()
        assert [ids.allocate() for _ in range(3)] == [1, 2, 3]
        assert ids.issued == [1, 2, 3]

    def test_record_to_dict(self):
        record = ParsedRecord(1, "eth0 send 2048 packages", 7)
        assert record.to_dict() == {'line_id': 1, 'content': 'eth0 send 2048 packages', 'template_id': 7}
