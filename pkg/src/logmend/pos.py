"""
Lexicon-driven part-of-speech tagging for template tokens.

Tagging is context free: a token is tagged from its own characters, a
word list and a handful of suffix rules. This is enough for constant
detection, where the only question is whether a token belongs to a
class that log templates never vary (verbs, punctuation, conjunctions,
adpositions, determiners).

Lexicon file format (UTF-8, one entry per line, '#' starts a comment):

    send        VERB
    -ing        VERB        suffix rule, applies to alphabetic stems of 3+ chars
"""

import logging
import re
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol, runtime_checkable

from cachetools import LRUCache

from logmend.config import DATA_DIR, ConfigError
from logmend.model import WILDCARD

logger = logging.getLogger(__name__)

DEFAULT_LEXICON_PATH = DATA_DIR / 'lexicon.tsv'
MIN_SUFFIX_STEM = 3
TAG_CACHE_SIZE = 65536

_NUMERIC_RE = re.compile(r'[-+]?(\d+([.,:]\d+)*|0[xX][0-9a-fA-F]+)')


class PosTag(str, Enum):
    VERB = "VERB"
    NOUN = "NOUN"
    PROPN = "PROPN"
    ADJ = "ADJ"
    ADV = "ADV"
    ADP = "ADP"
    DET = "DET"
    CONJ = "CONJ"
    PUNCT = "PUNCT"
    NUM = "NUM"
    SYM = "SYM"
    OTHER = "OTHER"


FIXED_CONSTANT_TAGS = frozenset({PosTag.VERB, PosTag.PUNCT, PosTag.CONJ, PosTag.ADP, PosTag.DET})


def is_fixed_constant(tag: PosTag) -> bool:
    """True for the classes whose tokens never vary inside one template."""
    return tag in FIXED_CONSTANT_TAGS


@runtime_checkable
class Tagger(Protocol):
    """Anything that assigns a coarse tag to one token."""

    def tag(self, token: str) -> PosTag:
        ...


class Lexicon:
    """Word list plus ordered suffix rules; lookups are case-insensitive."""

    def __init__(
        self,
        entries: Optional[dict] = None,
        suffix_rules: Optional[list] = None,
        cache_size: int = TAG_CACHE_SIZE,
    ):
        self.entries = {w.lower(): PosTag(t) for w, t in (entries or {}).items()}
        self.suffix_rules = [(s.lower(), PosTag(t)) for s, t in (suffix_rules or [])]
        self._cache = LRUCache(maxsize=cache_size)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def lookup(self, word: str) -> Optional[PosTag]:
        return self.entries.get(word.lower())

    def suffix_tag(self, word: str) -> Optional[PosTag]:
        lower = word.lower()
        for suffix, tag in self.suffix_rules:
            if lower.endswith(suffix):
                stem = lower[:-len(suffix)]
                if len(stem) >= MIN_SUFFIX_STEM and stem.isalpha():
                    return tag
        return None

    def tag(self, token: str) -> PosTag:
        cached = self._cache.get(token)
        if cached is None:
            cached = _tag_uncached(token, self)
            self._cache[token] = cached
        return cached

    @classmethod
    def load(cls, path: Path) -> 'Lexicon':
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise ConfigError(f"Cannot read lexicon {path}: {e}") from e

        entries = {}
        suffix_rules = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                logger.warning(f"{path}:{lineno}: expected 'word<TAB>TAG', skipping {line!r}")
                continue
            word, tag_name = parts
            try:
                tag = PosTag(tag_name.upper())
            except ValueError:
                logger.warning(f"{path}:{lineno}: unknown tag {tag_name!r}, skipping")
                continue
            if word.startswith('-') and len(word) > 1:
                suffix_rules.append((word[1:], tag))
            else:
                entries[word] = tag

        logger.info(f"Loaded lexicon {path.name}: {len(entries)} entries, {len(suffix_rules)} suffix rules")
        return cls(entries, suffix_rules)


def load_lexicon(path: Optional[Path] = None) -> Lexicon:
    return Lexicon.load(path if path is not None else DEFAULT_LEXICON_PATH)


def _tag_uncached(token: str, lex: Lexicon) -> PosTag:
    if token == WILDCARD:
        return PosTag.SYM
    if not any(ch.isalnum() for ch in token):
        return PosTag.PUNCT
    if _NUMERIC_RE.fullmatch(token):
        return PosTag.NUM
    hit = lex.lookup(token)
    if hit is not None:
        return hit
    hit = lex.suffix_tag(token)
    if hit is not None:
        return hit
    if token[0].isupper() or any(ch.isdigit() for ch in token):
        return PosTag.PROPN
    return PosTag.NOUN


def tag(token: str, lex: Tagger) -> PosTag:
    if not token:
        raise ValueError("Cannot tag an empty token")
    return lex.tag(token)
