"""
Priority-ordered template pool.

Every template lives in the bucket of its token length. Buckets are kept
stable-sorted ascending by the priority tuple (u, n): templates that were
never updated and have matched few lines come first, since they are the
most likely to still need correction.
"""

import logging
from collections import Counter
from typing import Callable, Iterable, NamedTuple, Optional

from logmend.model import ConsistencyError, Template, TokenSeq, similarity
from logmend.nlpe import MatchVerdict, VerdictKind

logger = logging.getLogger(__name__)

Arbiter = Callable[[TokenSeq, Template, float], MatchVerdict]


class PoolMatch(NamedTuple):
    template_id: int
    merged: list
    verdict: MatchVerdict


class CandidateError(RuntimeError):
    """Arbitration of a pool candidate failed; carries the candidate's id and text."""

    def __init__(self, template_id: int, template_text: str, cause: Exception):
        super().__init__(f"Arbitration failed on pool candidate {template_id} '{template_text}': {cause}")
        self.template_id = template_id
        self.template_text = template_text
        self.cause = cause


def sort_by_priority(templates: Iterable[Template]) -> list:
    """Stable ascending sort on (u, n)."""
    return sorted(templates, key=lambda t: t.priority)


class TemplatePool:
    def __init__(self):
        self.by_length = {}
        self.by_id = {}

    def __len__(self) -> int:
        return len(self.by_id)

    def __contains__(self, template_id: int) -> bool:
        return template_id in self.by_id

    def get(self, template_id: int) -> Template:
        try:
            return self.by_id[template_id]
        except KeyError:
            raise ConsistencyError(f"Template {template_id} is not in the pool") from None

    def add(self, template: Template) -> None:
        if template.id in self.by_id:
            raise ConsistencyError(f"Template {template.id} is already in the pool")
        self.by_id[template.id] = template
        bucket = self.by_length.setdefault(template.length, [])
        bucket.append(template)
        bucket[:] = sort_by_priority(bucket)

    def bucket(self, length: int) -> list:
        return self.by_length.get(length, [])

    def templates(self) -> list:
        """All templates ordered by id."""
        return [self.by_id[k] for k in sorted(self.by_id)]

    def record_match(self, template_id: int, was_updated: bool) -> None:
        template = self.get(template_id)
        template.match_count += 1
        if was_updated:
            template.updated = True
        bucket = self.by_length[template.length]
        bucket[:] = sort_by_priority(bucket)

    def is_ordered(self) -> bool:
        for bucket in self.by_length.values():
            for a, b in zip(bucket, bucket[1:]):
                if a.priority > b.priority:
                    return False
        return True

    def stats(self) -> dict:
        histogram = Counter(t.match_count for t in self.by_id.values())
        return {
            'templates': len(self.by_id),
            'updated': sum(1 for t in self.by_id.values() if t.updated),
            'buckets': {str(n): len(b) for n, b in sorted(self.by_length.items())},
            'match_count_histogram': {str(k): histogram[k] for k in sorted(histogram)},
        }


def global_match(
    pool: TemplatePool,
    log: TokenSeq,
    arbiter: Arbiter,
    top_k: Optional[int] = None,
    resolver: Optional[Arbiter] = None,
    exclude: Iterable[int] = (),
    skip_updated: bool = False,
    threshold: float = 0.5,
) -> Optional[PoolMatch]:
    """
    Scan the length-N bucket in priority order and return the first Match.

    Candidates below the similarity threshold are skipped without calling
    the arbiter. If nothing matched but some candidates came back
    Undetermined, the resolver (if given) gets exactly one attempt, on the
    most similar of them.
    """
    candidates = pool.bucket(log.length)
    if top_k is not None:
        candidates = candidates[:top_k]
    excluded = set(exclude)

    undetermined = None
    undetermined_sim = -1.0
    for template in list(candidates):
        if template.id in excluded or (skip_updated and template.updated):
            continue
        sim = similarity(log, template)
        if sim < threshold:
            continue
        verdict = _arbitrate(arbiter, log, template, sim)
        if verdict.kind is VerdictKind.MATCH:
            return PoolMatch(template.id, verdict.merged, verdict)
        if verdict.kind is VerdictKind.UNDETERMINED and sim > undetermined_sim:
            undetermined, undetermined_sim = template, sim

    if undetermined is None or resolver is None:
        return None
    verdict = _arbitrate(resolver, log, undetermined, undetermined_sim)
    if verdict.kind is VerdictKind.MATCH:
        return PoolMatch(undetermined.id, verdict.merged, verdict)
    return None


def _arbitrate(arbiter: Arbiter, log: TokenSeq, template: Template, sim: float) -> MatchVerdict:
    try:
        return arbiter(log, template, sim)
    except Exception as e:
        logger.error(f"Arbiter failed on pool candidate {template.id} '{template.text}': {e}")
        raise CandidateError(template.id, template.text, e) from e
