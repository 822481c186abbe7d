"""
Online parsing pipeline.

Each line is tokenized, then matched against the parse tree in both
directions; if the tree yields nothing the priority-ordered pool is
scanned; if that fails too the line becomes a new template. Matches that
generalize a template update it in place under its id, so every earlier
line bound to that id picks up the corrected text at export time.

Usage:
    from logmend.pipeline import LogParser

    parser = LogParser()
    for line in lines:
        parser.parse_line(line)
    result = parser.export()
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Optional

import pandas as pd

from logmend.bdpt import Direction, ParseTree
from logmend.config import AppConfig, load_config
from logmend.llm_client import LlmClient, UsageCounters, create_client
from logmend.model import (
    ParsedRecord,
    Template,
    TemplateIdAllocator,
    TokenSeq,
    merge,
    render,
    similarity,
    wildcard_count,
)
from logmend.nlpe import ComparisonInput, Extractor, MatchVerdict, Stage2Unavailable, describe
from logmend.pos import Tagger, load_lexicon
from logmend.preprocess import EmptyLineError, Preprocessor
from logmend.ptmp import TemplatePool, global_match

logger = logging.getLogger(__name__)

STRUCTURED_COLUMNS = ['LineId', 'Content', 'EventId', 'EventTemplate']
TEMPLATE_COLUMNS = ['EventId', 'EventTemplate', 'Occurrences']


@dataclass
class AblationFlags:
    """Component switches; disable_nlpe turns off both the POS and the LLM stage."""
    disable_nlpe: bool = False
    disable_llm: bool = False
    disable_pos: bool = False
    disable_ptmp: bool = False
    disable_bdpt: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'AblationFlags':
        return cls(**{k: bool(v) for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass
class PipelineCounters:
    matched_bdpt_forward: int = 0
    matched_bdpt_reverse: int = 0
    matched_ptmp: int = 0
    new_templates: int = 0
    nlpe_invocations: int = 0
    llm_calls: int = 0
    malformed_replies: int = 0
    template_updates: int = 0
    llm_cache_hits: int = 0
    stage2_unavailable: int = 0
    empty_lines: int = 0

    @property
    def lines_parsed(self) -> int:
        return self.matched_bdpt_forward + self.matched_bdpt_reverse + self.matched_ptmp + self.new_templates

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'PipelineCounters':
        return cls(**{k: int(v) for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass
class ParserState:
    tree: ParseTree = field(default_factory=ParseTree)
    pool: TemplatePool = field(default_factory=TemplatePool)
    records: list = field(default_factory=list)
    counters: PipelineCounters = field(default_factory=PipelineCounters)
    flags: AblationFlags = field(default_factory=AblationFlags)


class ExportResult(NamedTuple):
    structured: pd.DataFrame
    templates: pd.DataFrame
    report: dict


def event_id(template_id: int) -> str:
    return f"E{template_id}"


class LogParser:
    """
    Single-writer online parser.

    Args:
        config: Full application config (defaults when omitted)
        flags: Ablation switches
        llm: LLM client; built from config.llm when needed and not given
        lexicon: POS tagger; the lexicon at config.lexicon.path when not given
    """

    def __init__(
        self,
        config: Optional[AppConfig] = None,
        flags: Optional[AblationFlags] = None,
        llm: Optional[LlmClient] = None,
        lexicon: Optional[Tagger] = None,
        preprocessor: Optional[Preprocessor] = None,
    ):
        self.config = config or load_config()
        self.flags = flags or AblationFlags()
        self.preprocessor = preprocessor or Preprocessor(self.config.preprocess)

        parser_cfg = self.config.parser
        self.threshold = parser_cfg.similarity_threshold
        self.top_k = parser_cfg.top_k
        self.pool_skip_updated = parser_cfg.pool_skip_updated

        self.llm = None
        self.extractor = None
        if not self.flags.disable_nlpe:
            use_llm = not self.flags.disable_llm
            if use_llm:
                self.llm = llm if llm is not None else create_client(self.config.llm)
            if lexicon is None:
                lexicon = load_lexicon(self.config.lexicon.path)
            self.extractor = Extractor(
                lexicon=lexicon,
                llm=self.llm,
                preprocessor=self.preprocessor,
                use_pos=not self.flags.disable_pos,
                use_llm=use_llm,
            )

        self.ids = TemplateIdAllocator()
        self.state = ParserState(flags=self.flags)

    @property
    def counters(self) -> PipelineCounters:
        return self.state.counters

    @property
    def tree(self) -> ParseTree:
        return self.state.tree

    @property
    def pool(self) -> TemplatePool:
        return self.state.pool

    @property
    def records(self) -> list:
        return self.state.records

    # ------------------------------------------------------------------
    # Parsing
    # ------------------------------------------------------------------

    def parse_line(self, raw: str) -> Optional[int]:
        """Parse one line and return its template id (None for a blank line)."""
        try:
            log = self.preprocessor.tokenize(raw)
        except EmptyLineError:
            self.counters.empty_lines += 1
            logger.warning(f"Skipping empty line after line {len(self.records)}")
            return None

        rejected = set()
        template_id = None
        if not self.flags.disable_bdpt:
            template_id = self._match_tree(log, rejected)
        if template_id is None and not self.flags.disable_ptmp:
            template_id = self._match_pool(log, rejected)
        if template_id is None:
            template_id = self._create(log).id

        self.records.append(ParsedRecord(len(self.records) + 1, raw.strip(), template_id))
        self._sync_counters()
        return template_id

    def parse_lines(self, lines: Iterable[str]) -> list:
        return [self.parse_line(line) for line in lines]

    def _match_tree(self, log: TokenSeq, rejected: set) -> Optional[int]:
        found = {}
        for direction in Direction:
            group = self.tree.descend(direction, log)
            if group:
                for template in group:
                    found.setdefault(template.id, (template, direction))

        scored = []
        for template, direction in found.values():
            sim = similarity(log, template)
            if sim >= self.threshold:
                scored.append((sim, template, direction))
        if not scored:
            return None
        scored.sort(key=lambda c: (
            -c[0], wildcard_count(c[1]), 0 if c[2] is Direction.FORWARD else 1, c[1].id,
        ))

        # A full cover needs no arbitration
        if self.extractor is None or scored[0][0] == 1.0:
            sim, template, direction = scored[0]
            merged = merge(log, template)
        else:
            self.counters.nlpe_invocations += 1
            inputs = [ComparisonInput(log, template, sim) for sim, template, _ in scored]
            try:
                resolution = self.extractor.compare(log, inputs, rejected)
            except Stage2Unavailable as e:
                self.counters.stage2_unavailable += 1
                rejected.add(e.template_id)
                resolution = None
            if resolution is None:
                return None
            template, direction = found[resolution.template_id]
            merged = resolution.merged
            logger.debug(f"Tree candidate {template.id}: {describe(resolution.verdict)}")

        self._bind(template, merged)
        if direction is Direction.FORWARD:
            self.counters.matched_bdpt_forward += 1
        else:
            self.counters.matched_bdpt_reverse += 1
        return template.id

    def _match_pool(self, log: TokenSeq, rejected: set) -> Optional[int]:
        examined = []

        if self.extractor is None:
            def arbiter(log, template, sim):
                examined.append(template.id)
                return MatchVerdict.match(merge(log, template))
            resolver = None
        else:
            def arbiter(log, template, sim):
                examined.append(template.id)
                return self.extractor.arbitrate(log, template, sim)

            def resolver(log, template, sim):
                try:
                    return self.extractor.resolver(log, template, sim)
                except Stage2Unavailable:
                    self.counters.stage2_unavailable += 1
                    return MatchVerdict.no_match()

        result = global_match(
            self.pool,
            log,
            arbiter,
            top_k=self.top_k,
            resolver=resolver,
            exclude=rejected,
            skip_updated=self.pool_skip_updated,
            threshold=self.threshold,
        )
        if examined and self.extractor is not None:
            self.counters.nlpe_invocations += 1
        if result is None:
            return None

        template = self.pool.get(result.template_id)
        self._bind(template, result.merged)
        self.counters.matched_ptmp += 1
        logger.debug(f"Pool matched template {template.id}: {template.text}")
        return template.id

    def _bind(self, template: Template, merged: list) -> None:
        """Record a match, updating the template (and its tree branches) if it generalized."""
        changed = [t.text for t in merged] != list(template.texts)
        if changed:
            old_tokens = list(template.tokens)
            if template.id in self.tree:
                self.tree.apply_update(template.id, old_tokens, merged)
            else:
                template.replace_tokens(merged)
            self.counters.template_updates += 1
            logger.debug(f"Template {template.id} updated: '{render(old_tokens)}' -> '{template.text}'")
        self.pool.record_match(template.id, changed)

    def _create(self, log: TokenSeq) -> Template:
        template = Template.from_texts(self.ids.allocate(), log.tokens)
        self.pool.add(template)
        if not self.flags.disable_bdpt:
            self.tree.insert(template)
        self.counters.new_templates += 1
        logger.debug(f"New template {template.id}: {template.text}")
        return template

    def _sync_counters(self) -> None:
        if self.extractor is not None:
            stats = self.extractor.stats
            self.counters.llm_calls = stats.llm_calls
            self.counters.llm_cache_hits = stats.llm_cache_hits
            self.counters.malformed_replies = stats.malformed_replies

    def seed_templates(self, texts: Iterable[str]) -> int:
        """Preload templates (u=0, n=1) from an earlier run; returns how many were added."""
        seen = {t.texts for t in self.pool.templates()}
        added = 0
        for text in texts:
            try:
                tokens = self.preprocessor.tokenize(text)
            except EmptyLineError:
                continue
            if tokens.tokens in seen:
                continue
            seen.add(tokens.tokens)
            template = Template.from_texts(self.ids.allocate(), tokens.tokens)
            self.pool.add(template)
            if not self.flags.disable_bdpt:
                self.tree.insert(template)
            added += 1
        logger.info(f"Seeded {added} template(s)")
        return added

    # ------------------------------------------------------------------
    # Export
    # ------------------------------------------------------------------

    @property
    def usage(self) -> UsageCounters:
        return self.llm.usage if self.llm is not None else UsageCounters()

    def export(self) -> ExportResult:
        """Render every record with its template's current text."""
        occurrences = {}
        rows = []
        for record in self.records:
            template = self.pool.get(record.template_id)
            occurrences[template.id] = occurrences.get(template.id, 0) + 1
            rows.append([record.line_id, record.content, event_id(template.id), template.text])
        structured = pd.DataFrame(rows, columns=STRUCTURED_COLUMNS)

        template_rows = [
            [event_id(t.id), t.text, occurrences.get(t.id, 0)] for t in self.pool.templates()
        ]
        templates = pd.DataFrame(template_rows, columns=TEMPLATE_COLUMNS)

        report = {
            'lines': len(self.records),
            'counters': self.counters.to_dict(),
            'usage': self.usage.to_dict(),
            'flags': self.flags.to_dict(),
            'pool': self.pool.stats(),
            'tree': {**self.tree.stats(), 'length_node_count': self.tree.length_node_count},
        }
        return ExportResult(structured, templates, report)
