"""
Shared domain types for logmend.

Templates, token sequences and parsed records, plus the positional
similarity/merge primitives used by every matcher (tree, pool, NLPE).

Usage:
    from logmend.model import Template, TokenSeq, similarity, merge

    log = TokenSeq(("eth1", "send", "<*>", "packages"))
    tpl = Template.from_texts(1, ["eth0", "send", "<*>", "packages"])
    similarity(log, tpl)          # 0.75
    merge(log, tpl)               # <*> send <*> packages
"""

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence, Union

WILDCARD = "<*>"


class LengthMismatchError(ValueError):
    """A log and a template of different lengths were compared."""


class ConsistencyError(RuntimeError):
    """Internal state no longer agrees with itself (unknown id, unreachable template)."""


class TemplateToken(NamedTuple):
    """
    One template position: a constant (with an optional cached POS tag) or the wildcard.

    The wildcard is the token whose text is exactly "<*>".
    """
    text: str
    pos: Optional[str] = None

    @property
    def is_wildcard(self) -> bool:
        return self.text == WILDCARD

    @classmethod
    def wildcard(cls) -> 'TemplateToken':
        return cls(WILDCARD)


@dataclass(frozen=True)
class TokenSeq:
    """A preprocessed log message: punctuation-split tokens with variables masked."""
    tokens: tuple

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, 'tokens', tuple(self.tokens))

    @property
    def length(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, index):
        return self.tokens[index]

    def reversed(self) -> tuple:
        return self.tokens[::-1]

    def text(self) -> str:
        return ' '.join(self.tokens)


@dataclass
class Template:
    """
    A log template with its priority metadata.

    `updated` (u) flips to True the first time the tokens change and never
    reverts; `match_count` (n) counts the log lines bound to the template.
    """
    id: int
    tokens: list
    match_count: int = 1
    updated: bool = False

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"Template {self.id} must have at least one token")

    @classmethod
    def from_texts(cls, template_id: int, texts: Iterable[str]) -> 'Template':
        return cls(id=template_id, tokens=[TemplateToken(t) for t in texts])

    @property
    def length(self) -> int:
        return len(self.tokens)

    @property
    def texts(self) -> tuple:
        return tuple(tok.text for tok in self.tokens)

    @property
    def text(self) -> str:
        return ' '.join(tok.text for tok in self.tokens)

    @property
    def priority(self) -> tuple:
        """Priority tuple (u, n); ascending order puts the least settled templates first."""
        return (int(self.updated), self.match_count)

    def replace_tokens(self, new_tokens: Sequence[TemplateToken]) -> bool:
        """Swap in new tokens; returns True (and marks the template updated) if the text changed."""
        new_tokens = list(new_tokens)
        if len(new_tokens) != self.length:
            raise LengthMismatchError(
                f"Template {self.id} has {self.length} tokens, update has {len(new_tokens)}"
            )
        changed = [t.text for t in new_tokens] != [t.text for t in self.tokens]
        self.tokens = new_tokens
        if changed:
            self.updated = True
        return changed

    def cache_pos(self, index: int, tag: str) -> None:
        self.tokens[index] = self.tokens[index]._replace(pos=tag)

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'template': self.text,
            'length': self.length,
            'updated': self.updated,
            'match_count': self.match_count,
        }


@dataclass
class ParsedRecord:
    """Binding of one input line to a template id; the text is resolved at export time."""
    line_id: int
    content: str
    template_id: int

    def to_dict(self) -> dict:
        return {
            'line_id': self.line_id,
            'content': self.content,
            'template_id': self.template_id,
        }


def _texts(seq: Union[TokenSeq, Template, Sequence]) -> Sequence[str]:
    if isinstance(seq, TokenSeq):
        return seq.tokens
    if isinstance(seq, Template):
        return seq.texts
    return [t.text if isinstance(t, TemplateToken) else t for t in seq]


def _check_lengths(log: Sequence[str], tpl: Sequence[str]) -> None:
    if len(log) != len(tpl):
        raise LengthMismatchError(
            f"Cannot compare a {len(log)}-token log with a {len(tpl)}-token template"
        )


def similarity(log: Union[TokenSeq, Sequence[str]], tpl: Union[Template, Sequence]) -> float:
    """
    Ratio of matching positions to total positions.

    A position matches when both tokens are identical or either side is the
    wildcard.
    """
    a = _texts(log)
    b = _texts(tpl)
    _check_lengths(a, b)
    if not a:
        return 1.0
    hits = 0
    for x, y in zip(a, b):
        if x == y or x == WILDCARD or y == WILDCARD:
            hits += 1
    return hits / len(a)


def merge(log: Union[TokenSeq, Sequence[str]], tpl: Union[Template, Sequence]) -> list:
    """
    Positional merge of a log into a template.

    Equal constants survive (keeping the template's cached POS tag); every
    other position becomes the wildcard.
    """
    a = _texts(log)
    if isinstance(tpl, Template):
        tpl_tokens = tpl.tokens
    else:
        tpl_tokens = [t if isinstance(t, TemplateToken) else TemplateToken(t) for t in tpl]
    _check_lengths(a, tpl_tokens)
    merged = []
    for text, tok in zip(a, tpl_tokens):
        if text == tok.text and text != WILDCARD:
            merged.append(tok)
        else:
            merged.append(TemplateToken.wildcard())
    return merged


def wildcard_count(tpl: Union[Template, Sequence]) -> int:
    return sum(1 for t in _texts(tpl) if t == WILDCARD)


def render(tokens: Sequence) -> str:
    """Space-joined text of a token list (TemplateToken or str)."""
    return ' '.join(_texts(tokens))


@dataclass
class TemplateIdAllocator:
    """Monotonically increasing template ids, starting at 1."""
    next_id: int = 1
    issued: list = field(default_factory=list)

    def allocate(self) -> int:
        template_id = self.next_id
        self.next_id += 1
        self.issued.append(template_id)
        return template_id
