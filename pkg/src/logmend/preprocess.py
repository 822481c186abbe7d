"""
Tokenization and variable masking.

Raw messages are split on whitespace, common variables (IPs, numbers,
paths, ...) are replaced with the placeholder, configured punctuation is
split out into standalone tokens, and masking runs once more over the
pieces exposed by the split.
"""

import logging
import re
from typing import Iterable, Optional

from logmend.config import PreprocessConfig, load_config
from logmend.model import WILDCARD, TokenSeq

logger = logging.getLogger(__name__)

__all__ = ['EmptyLineError', 'Preprocessor', 'PreprocessConfig', 'TokenSeq', 'mask_variables', 'tokenize']


class EmptyLineError(ValueError):
    """The line is empty after trimming."""


class Preprocessor:
    """
    Compiled form of a PreprocessConfig.

    Patterns are compiled once; an invalid regex fails here, at startup,
    rather than on the first line that reaches it.
    """

    def __init__(self, cfg: Optional[PreprocessConfig] = None):
        self.cfg = cfg if cfg is not None else load_config().preprocess
        patterns = [vp.pattern for vp in self.cfg.variable_patterns]
        self._variable_re = (
            re.compile('|'.join(f'(?:{p})' for p in patterns)) if patterns else None
        )
        self._split_re = (
            re.compile(f"([{re.escape(self.cfg.split_punct)}])") if self.cfg.split_punct else None
        )

    def is_variable(self, token: str) -> bool:
        return self._variable_re is not None and self._variable_re.fullmatch(token) is not None

    def mask(self, tokens: Iterable[str]) -> list:
        return [WILDCARD if self.is_variable(t) else t for t in tokens]

    def _split(self, token: str) -> list:
        if self._split_re is None or token == WILDCARD:
            return [token]
        return [piece for piece in self._split_re.split(token) if piece]

    def tokenize(self, raw: str) -> TokenSeq:
        text = raw.strip()
        if not text:
            raise EmptyLineError("Empty log line")
        pieces = []
        for token in self.mask(text.split()):
            pieces.extend(self._split(token))
        return TokenSeq(tuple(self.mask(pieces)))


def mask_variables(tokens: list, cfg: Optional[PreprocessConfig] = None) -> list:
    """Replace every token that fully matches a variable pattern with the placeholder."""
    return Preprocessor(cfg).mask(tokens)


def tokenize(raw: str, cfg: Optional[PreprocessConfig] = None) -> TokenSeq:
    return Preprocessor(cfg).tokenize(raw)
