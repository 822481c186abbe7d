"""
Two-stage match arbiter.

Stage I compares a log with a candidate template position by position
and looks at the part-of-speech tags of the tokens that differ: a verb,
punctuation mark, conjunction, adposition or determiner never varies
within one template, so any such difference rejects the candidate.
Numeral-only differences are accepted outright. Everything else is
undetermined and goes to Stage II, a single LLM call on the most similar
undetermined candidate.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence

from logmend.config import DATA_DIR
from logmend.llm_client import LlmClient, LlmError
from logmend.model import (
    WILDCARD,
    LengthMismatchError,
    Template,
    TemplateToken,
    TokenSeq,
    merge,
    render,
)
from logmend.pos import PosTag, Tagger, is_fixed_constant, load_lexicon
from logmend.preprocess import EmptyLineError, Preprocessor

logger = logging.getLogger(__name__)

PROMPT_PATH = DATA_DIR / 'prompt_v1.txt'

CONSTANT_RULES = (
    "Domain-specific term (e.g., IPv4).",
    "Modifier in a compound noun representing a fixed label (e.g., Failed).",
    "Subject in a subject–verb–object structure.",
    "Tokens expressing opposing or discrete semantics (e.g., boot vs. shutdown).",
    "Singular/plural variants are not treated as equivalent (e.g., user vs. users).",
)
VARIABLE_RULES = (
    "Identifiers, IPs, timestamps, user names, and other data-like tokens.",
    "Key–value patterns: retain the key and abstract the value (e.g., user root -> user <*>).",
    "key:value or key=value forms: keep key, abstract value.",
)


def format_rules() -> str:
    lines = ["Constants:"]
    lines.extend(f"- {rule}" for rule in CONSTANT_RULES)
    lines.append("Variables:")
    lines.extend(f"- {rule}" for rule in VARIABLE_RULES)
    return '\n'.join(lines)


@lru_cache(maxsize=None)
def load_prompt_template() -> str:
    return PROMPT_PATH.read_text(encoding='utf-8')


class Stage2Unavailable(RuntimeError):
    """The LLM could not be reached for a Stage II decision."""

    def __init__(self, template_id: int, cause: LlmError):
        super().__init__(f"Stage II unavailable for template {template_id}: {cause}")
        self.template_id = template_id
        self.cause = cause


class VerdictKind(str, Enum):
    MATCH = "match"
    NO_MATCH = "no_match"
    UNDETERMINED = "undetermined"


@dataclass
class MatchVerdict:
    kind: VerdictKind
    merged: Optional[list] = None
    diff_positions: tuple = ()
    malformed: bool = False

    def __post_init__(self):
        if self.kind is VerdictKind.MATCH and self.merged is None:
            raise ValueError("A Match verdict needs a merged template")
        if self.kind is VerdictKind.UNDETERMINED and not self.diff_positions:
            raise ValueError("An Undetermined verdict needs at least one differing position")

    @classmethod
    def match(cls, merged: Sequence) -> 'MatchVerdict':
        return cls(VerdictKind.MATCH, merged=list(merged))

    @classmethod
    def no_match(cls, malformed: bool = False) -> 'MatchVerdict':
        return cls(VerdictKind.NO_MATCH, malformed=malformed)

    @classmethod
    def undetermined(cls, positions: Sequence[int]) -> 'MatchVerdict':
        return cls(VerdictKind.UNDETERMINED, diff_positions=tuple(positions))

    @property
    def is_match(self) -> bool:
        return self.kind is VerdictKind.MATCH


@dataclass
class ComparisonInput:
    log: TokenSeq
    template: Template
    similarity: float

    def __post_init__(self):
        if self.log.length != self.template.length:
            raise LengthMismatchError(
                f"Log has {self.log.length} tokens, template {self.template.id} has {self.template.length}"
            )


@dataclass
class Resolution:
    template_id: int
    merged: list
    verdict: MatchVerdict


@dataclass
class NlpeStats:
    llm_calls: int = 0
    llm_cache_hits: int = 0
    malformed_replies: int = 0


def diff_positions(log: TokenSeq, template: Template) -> list:
    """Positions where both sides are concrete tokens and differ."""
    return [
        i for i, (a, tok) in enumerate(zip(log.tokens, template.tokens))
        if a != tok.text and a != WILDCARD and tok.text != WILDCARD
    ]


def build_prompt(log: str, template: str, prompt_template: Optional[str] = None) -> str:
    """Fill the prompt asset; identical inputs give byte-identical prompts."""
    asset = prompt_template if prompt_template is not None else load_prompt_template()
    return asset.format(log=log, template=template, rules=format_rules())


def parse_reply(text: str, expected_length: int, preprocessor: Optional[Preprocessor] = None) -> MatchVerdict:
    """
    Read the verdict off the last MATCH:/NO_MATCH line of a reply.

    A missing verdict line, an empty template or a template whose token
    count differs from the input is a malformed reply and counts as NoMatch.
    """
    for line in reversed((text or '').splitlines()):
        line = line.strip().strip('`').strip()
        if line == 'NO_MATCH':
            return MatchVerdict.no_match()
        if line.startswith('MATCH:'):
            preprocessor = preprocessor or Preprocessor()
            try:
                tokens = preprocessor.tokenize(line[len('MATCH:'):])
            except EmptyLineError:
                return MatchVerdict.no_match(malformed=True)
            if tokens.length != expected_length:
                return MatchVerdict.no_match(malformed=True)
            return MatchVerdict.match([TemplateToken(t) for t in tokens])
    return MatchVerdict.no_match(malformed=True)


class Extractor:
    """
    Stage I / Stage II arbiter bound to a tagger (the lexicon by default) and an LLM client.

    use_pos=False skips the syntactic check (every difference goes to the
    LLM); use_llm=False resolves undetermined candidates by positional
    merge instead of calling the LLM.
    """

    def __init__(
        self,
        lexicon: Optional[Tagger] = None,
        llm: Optional[LlmClient] = None,
        preprocessor: Optional[Preprocessor] = None,
        use_pos: bool = True,
        use_llm: bool = True,
        prompt_template: Optional[str] = None,
    ):
        if use_llm and llm is None:
            raise ValueError("An LLM client is required unless use_llm is False")
        if lexicon is not None and not isinstance(lexicon, Tagger):
            raise TypeError(f"{type(lexicon).__name__} has no tag(token) method")
        self.lexicon = lexicon if lexicon is not None else load_lexicon()
        self.llm = llm
        self.preprocessor = preprocessor or Preprocessor()
        self.use_pos = use_pos
        self.use_llm = use_llm
        self.prompt_template = prompt_template
        self.stats = NlpeStats()
        self._answers = {}

    # ------------------------------------------------------------------
    # Stage I
    # ------------------------------------------------------------------

    def _template_tag(self, template: Template, index: int) -> PosTag:
        cached = template.tokens[index].pos
        if cached is not None:
            return PosTag(cached)
        computed = self.lexicon.tag(template.tokens[index].text)
        template.cache_pos(index, computed.value)
        return computed

    def stage1(self, inp: ComparisonInput) -> MatchVerdict:
        positions = diff_positions(inp.log, inp.template)
        if not positions:
            return MatchVerdict.match(merge(inp.log, inp.template))
        if not self.use_pos:
            return MatchVerdict.undetermined(positions)

        all_numeric = True
        for i in positions:
            log_tag = self.lexicon.tag(inp.log[i])
            tpl_tag = self._template_tag(inp.template, i)
            if is_fixed_constant(log_tag) or is_fixed_constant(tpl_tag):
                logger.debug(
                    f"Stage I rejects template {inp.template.id}: "
                    f"'{inp.log[i]}' [{log_tag.value}] vs '{inp.template.tokens[i].text}' [{tpl_tag.value}]"
                )
                return MatchVerdict.no_match()
            if PosTag.NUM not in (log_tag, tpl_tag):
                all_numeric = False

        if all_numeric:
            return MatchVerdict.match(merge(inp.log, inp.template))
        return MatchVerdict.undetermined(positions)

    # ------------------------------------------------------------------
    # Stage II
    # ------------------------------------------------------------------

    def stage2(self, inp: ComparisonInput) -> MatchVerdict:
        if not diff_positions(inp.log, inp.template):
            return MatchVerdict.match(merge(inp.log, inp.template))

        key = (inp.template.texts, inp.log.tokens)
        cached = self._answers.get(key)
        if cached is not None:
            self.stats.llm_cache_hits += 1
            return self._bind(cached, inp)

        prompt = build_prompt(inp.log.text(), inp.template.text, self.prompt_template)
        self.stats.llm_calls += 1
        try:
            reply = self.llm.complete(prompt)
        except LlmError as e:
            logger.warning(f"Stage II unavailable for template {inp.template.id}: {e}")
            raise Stage2Unavailable(inp.template.id, e) from e

        verdict = parse_reply(reply.text, inp.log.length, self.preprocessor)
        if verdict.malformed:
            self.stats.malformed_replies += 1
            logger.warning(f"Malformed LLM reply for template {inp.template.id}: {reply.text[-120:]!r}")
        self._answers[key] = verdict
        return self._bind(verdict, inp)

    def _bind(self, verdict: MatchVerdict, inp: ComparisonInput) -> MatchVerdict:
        """Reconcile an LLM template with the positional merge of this pair."""
        if not verdict.is_match:
            return verdict
        merged = merge(inp.log, inp.template)
        reconciled = [
            TemplateToken.wildcard() if llm_tok.is_wildcard else tok
            for tok, llm_tok in zip(merged, verdict.merged)
        ]
        return MatchVerdict.match(reconciled)

    # ------------------------------------------------------------------
    # Arbitration
    # ------------------------------------------------------------------

    def resolve(self, inp: ComparisonInput) -> MatchVerdict:
        """Settle an undetermined candidate: Stage II, or a plain merge with the LLM disabled."""
        if not self.use_llm:
            return MatchVerdict.match(merge(inp.log, inp.template))
        return self.stage2(inp)

    def compare(
        self,
        log: TokenSeq,
        candidates: Sequence[ComparisonInput],
        rejected: Optional[set] = None,
    ) -> Optional[Resolution]:
        """
        Arbitrate over candidates sorted best first.

        Stage I runs on every candidate; the first Match wins. Otherwise
        only the best undetermined candidate is resolved, so at most one
        LLM call happens per call. Rejected template ids are added to
        `rejected` when given.
        """
        best_undetermined = None
        for inp in candidates:
            if inp.log.tokens != log.tokens:
                raise ValueError("Candidate inputs must refer to the log being compared")
            verdict = self.stage1(inp)
            if verdict.is_match:
                return Resolution(inp.template.id, verdict.merged, verdict)
            if verdict.kind is VerdictKind.NO_MATCH:
                if rejected is not None:
                    rejected.add(inp.template.id)
            elif best_undetermined is None:
                best_undetermined = inp

        if best_undetermined is None:
            return None
        verdict = self.resolve(best_undetermined)
        if verdict.is_match:
            return Resolution(best_undetermined.template.id, verdict.merged, verdict)
        if rejected is not None:
            rejected.add(best_undetermined.template.id)
        return None

    # ptmp.global_match callbacks

    def arbitrate(self, log: TokenSeq, template: Template, sim: float) -> MatchVerdict:
        return self.stage1(ComparisonInput(log, template, sim))

    def resolver(self, log: TokenSeq, template: Template, sim: float) -> MatchVerdict:
        return self.resolve(ComparisonInput(log, template, sim))


def describe(verdict: MatchVerdict) -> str:
    if verdict.is_match:
        return f"match '{render(verdict.merged)}'"
    if verdict.kind is VerdictKind.UNDETERMINED:
        return f"undetermined at {list(verdict.diff_positions)}"
    return "no match (malformed reply)" if verdict.malformed else "no match"
