"""
Tests for the two-stage match arbiter.
"""

import pytest

from logmend.llm_client import LlmClient, LlmReply, LlmTimeout, MockLlmClient
from logmend.model import LengthMismatchError, Template, TokenSeq, render
from logmend.nlpe import (
    CONSTANT_RULES,
    VARIABLE_RULES,
    ComparisonInput,
    Extractor,
    MatchVerdict,
    Stage2Unavailable,
    VerdictKind,
    build_prompt,
    describe,
    diff_positions,
    parse_reply,
)
from logmend.pos import PosTag


class FixedReply(LlmClient):
    """Answers every prompt with the same text and keeps the prompts."""

    def __init__(self, text):
        super().__init__(cfg=None)
        self.text = text
        self.prompts = []

    def _complete(self, prompt):
        self.prompts.append(prompt)
        return LlmReply(self.text)


class Unreachable(LlmClient):
    def __init__(self):
        super().__init__(cfg=None)

    def _complete(self, prompt):
        raise LlmTimeout("endpoint timed out")


def _log(text):
    return TokenSeq(tuple(text.split()))


def _inp(log_text, tpl_text, template_id=1):
    log = _log(log_text)
    tpl = Template.from_texts(template_id, tpl_text.split())
    return ComparisonInput(log, tpl, 0.0)


@pytest.fixture
def extractor(lexicon):
    return Extractor(lexicon=lexicon, llm=MockLlmClient())


class TestStage1:
    """Test the syntactic check."""

    def test_verb_difference_rejects(self, extractor):
        verdict = extractor.stage1(_inp("send <*> packets", "received <*> packets"))
        assert verdict.kind is VerdictKind.NO_MATCH

    def test_identical_matches(self, extractor):
        verdict = extractor.stage1(_inp("eth0 send <*>", "eth0 send <*>"))
        assert verdict.is_match
        assert render(verdict.merged) == "eth0 send <*>"

    def test_wildcards_are_not_differences(self, extractor):
        verdict = extractor.stage1(_inp("eth0 send 2048", "<*> send <*>"))
        assert verdict.is_match
        assert render(verdict.merged) == "<*> send <*>"

    def test_noun_difference_undetermined(self, extractor):
        verdict = extractor.stage1(_inp("Failed password for user oracle", "Failed password for user ubuntu"))
        assert verdict.kind is VerdictKind.UNDETERMINED
        assert verdict.diff_positions == (4,)

    def test_numeral_only_difference_matches(self, extractor):
        verdict = extractor.stage1(_inp("queue size 12", "queue size 40"))
        assert verdict.is_match
        assert render(verdict.merged) == "queue size <*>"

    def test_pos_disabled(self, lexicon):
        extractor = Extractor(lexicon=lexicon, llm=MockLlmClient(), use_pos=False)
        verdict = extractor.stage1(_inp("send <*> packets", "received <*> packets"))
        assert verdict.kind is VerdictKind.UNDETERMINED

    def test_caches_template_tags(self, extractor):
        inp = _inp("send <*> packets", "received <*> packets")
        extractor.stage1(inp)
        assert inp.template.tokens[0].pos == 'VERB'

    def test_custom_tagger(self):
        class EverythingNoun:
            def tag(self, token):
                return PosTag.NOUN

        extractor = Extractor(lexicon=EverythingNoun(), llm=MockLlmClient())
        verdict = extractor.stage1(_inp("send <*> packets", "received <*> packets"))
        assert verdict.kind is VerdictKind.UNDETERMINED

    def test_tagger_without_tag_method(self):
        with pytest.raises(TypeError):
            Extractor(lexicon=object(), llm=MockLlmClient())

    def test_no_llm_call(self, extractor):
        extractor.stage1(_inp("Failed password for user oracle", "Failed password for user ubuntu"))
        assert extractor.llm.usage.invocations == 0


class TestStage2:
    """Test LLM resolution."""

    def test_adjective_labels_rejected(self, extractor):
        verdict = extractor.stage2(_inp("Removable base files : <*>", "Active base files : <*>"))
        assert verdict.kind is VerdictKind.NO_MATCH
        assert extractor.stats.llm_calls == 1

    def test_user_instance_matches(self, extractor):
        verdict = extractor.stage2(_inp("Failed password for user oracle", "Failed password for user ubuntu"))
        assert verdict.is_match
        assert render(verdict.merged) == "Failed password for user <*>"

    def test_identical_skips_llm(self, extractor):
        verdict = extractor.stage2(_inp("a b c", "a b c"))
        assert verdict.is_match
        assert extractor.stats.llm_calls == 0

    def test_answers_are_cached(self, extractor):
        inp = _inp("Failed password for user oracle", "Failed password for user ubuntu")
        first = extractor.stage2(inp)
        second = extractor.stage2(inp)
        assert first == second
        assert extractor.stats.llm_calls == 1
        assert extractor.stats.llm_cache_hits == 1
        assert extractor.llm.usage.invocations == 1

    def test_malformed_reply(self, lexicon):
        extractor = Extractor(lexicon=lexicon, llm=FixedReply("I am not sure."))
        verdict = extractor.stage2(_inp("a b x", "a b y"))
        assert verdict.kind is VerdictKind.NO_MATCH
        assert verdict.malformed
        assert extractor.stats.malformed_replies == 1

    def test_llm_wildcards_are_kept(self, lexicon):
        extractor = Extractor(lexicon=lexicon, llm=FixedReply("MATCH: <*> password for user <*>"))
        verdict = extractor.stage2(_inp("Failed password for user oracle", "Failed password for user ubuntu"))
        assert render(verdict.merged) == "<*> password for user <*>"

    def test_unreachable_llm(self, lexicon, caplog):
        extractor = Extractor(lexicon=lexicon, llm=Unreachable())
        with pytest.raises(Stage2Unavailable) as exc:
            extractor.stage2(_inp("a b x", "a b y", template_id=7))
        assert exc.value.template_id == 7
        assert isinstance(exc.value.cause, LlmTimeout)
        assert "Stage II unavailable" in caplog.text

    def test_llm_disabled_merges(self, lexicon):
        extractor = Extractor(lexicon=lexicon, llm=None, use_llm=False)
        verdict = extractor.resolve(_inp("Removable base files", "Active base files"))
        assert render(verdict.merged) == "<*> base files"

    def test_llm_required_when_enabled(self, lexicon):
        with pytest.raises(ValueError):
            Extractor(lexicon=lexicon, llm=None)


class TestCompare:
    """Test arbitration over a candidate list."""

    def test_at_most_one_llm_call(self, extractor):
        log = _log("Failed password for user oracle")
        candidates = [
            ComparisonInput(log, Template.from_texts(1, "Failed password for user ubuntu".split()), 0.8),
            ComparisonInput(log, Template.from_texts(2, "Failed password for user guest".split()), 0.8),
        ]
        result = extractor.compare(log, candidates)
        assert result.template_id == 1
        assert extractor.stats.llm_calls == 1

    def test_stage1_match_wins_without_llm(self, extractor):
        log = _log("Failed password for user oracle")
        candidates = [
            ComparisonInput(log, Template.from_texts(1, "Failed password for user ubuntu".split()), 0.8),
            ComparisonInput(log, Template.from_texts(2, "Failed password for user <*>".split()), 0.8),
        ]
        result = extractor.compare(log, candidates)
        assert result.template_id == 2
        assert extractor.stats.llm_calls == 0

    def test_all_rejected(self, extractor):
        log = _log("alpha recv <*> bytes")
        rejected = set()
        candidates = [ComparisonInput(log, Template.from_texts(3, "alpha send <*> bytes".split()), 0.75)]
        assert extractor.compare(log, candidates, rejected) is None
        assert rejected == {3}
        assert extractor.stats.llm_calls == 0

    def test_llm_rejection_recorded(self, extractor):
        log = _log("System boot completed in <*> seconds")
        rejected = set()
        candidates = [
            ComparisonInput(log, Template.from_texts(5, "System shutdown completed in <*> seconds".split()), 0.83),
        ]
        assert extractor.compare(log, candidates, rejected) is None
        assert rejected == {5}
        assert extractor.stats.llm_calls == 1

    def test_empty_candidates(self, extractor):
        assert extractor.compare(_log("a"), []) is None

    def test_foreign_candidate(self, extractor):
        other = ComparisonInput(_log("x y"), Template.from_texts(1, ["x", "z"]), 0.5)
        with pytest.raises(ValueError):
            extractor.compare(_log("x q"), [other])


class TestPromptAndReply:
    """Test prompt construction and reply parsing."""

    def test_prompt_contents(self):
        prompt = build_prompt("eth1 send <*>", "eth0 send <*>")
        assert "LOG: eth1 send <*>" in prompt
        assert "TEMPLATE: eth0 send <*>" in prompt
        for rule in CONSTANT_RULES + VARIABLE_RULES:
            assert f"- {rule}" in prompt
        assert prompt.rstrip().endswith("NO_MATCH")

    @pytest.mark.parametrize('phrase', [
        "Domain-specific term (e.g., IPv4).",
        "Modifier in a compound noun representing a fixed label (e.g., Failed).",
        "Subject in a subject–verb–object structure.",
        "Tokens expressing opposing or discrete semantics (e.g., boot vs. shutdown).",
        "Singular/plural variants are not treated as equivalent (e.g., user vs. users).",
        "Identifiers, IPs, timestamps, user names, and other data-like tokens.",
        "retain the key and abstract the value",
        "key:value or key=value forms: keep key, abstract value.",
    ])
    def test_prompt_carries_rule_text(self, phrase):
        assert phrase in build_prompt("a b", "a c")

    def test_rule_counts(self):
        assert len(CONSTANT_RULES) == 5
        assert len(VARIABLE_RULES) == 3

    def test_prompt_deterministic(self):
        assert build_prompt("a b", "a c") == build_prompt("a b", "a c")

    def test_custom_prompt_template(self):
        assert build_prompt("a", "b", "{log}|{template}") == "a|b"

    @pytest.mark.parametrize('text,kind,malformed', [
        ("reasoning\nMATCH: a <*> c d e", VerdictKind.MATCH, False),
        ("reasoning\nNO_MATCH", VerdictKind.NO_MATCH, False),
        ("`MATCH: a b c d e`", VerdictKind.MATCH, False),
        ("I cannot tell.", VerdictKind.NO_MATCH, True),
        ("MATCH: a b c d", VerdictKind.NO_MATCH, True),
        ("MATCH:", VerdictKind.NO_MATCH, True),
        ("", VerdictKind.NO_MATCH, True),
    ])
    def test_parse_reply(self, preprocessor, text, kind, malformed):
        verdict = parse_reply(text, 5, preprocessor)
        assert verdict.kind is kind
        assert verdict.malformed is malformed

    def test_last_verdict_line_wins(self, preprocessor):
        verdict = parse_reply("MATCH: a b\nactually no\nNO_MATCH", 2, preprocessor)
        assert verdict.kind is VerdictKind.NO_MATCH


class TestVerdicts:
    def test_match_needs_template(self):
        with pytest.raises(ValueError):
            MatchVerdict(VerdictKind.MATCH)

    def test_undetermined_needs_positions(self):
        with pytest.raises(ValueError):
            MatchVerdict.undetermined([])

    def test_comparison_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            ComparisonInput(_log("a b"), Template.from_texts(1, ["a"]), 0.0)

    def test_diff_positions(self):
        assert diff_positions(_log("a <*> c d"), Template.from_texts(1, "a b <*> e".split())) == [3]

    def test_describe(self):
        assert describe(MatchVerdict.no_match()) == "no match"
        assert describe(MatchVerdict.no_match(malformed=True)) == "no match (malformed reply)"
        assert describe(MatchVerdict.undetermined([2])) == "undetermined at [2]"
