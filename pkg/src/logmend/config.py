"""
Configuration layer for logmend.

All settings live in one JSON document. The versioned defaults ship as
package data (data/default_config.json); a user file passed with --config
is overlaid on them section by section, and CLI flags win over both.

Usage:
    from logmend.config import load_config

    cfg = load_config()                       # shipped defaults
    cfg = load_config(Path('logmend.json'))   # defaults + user overlay
    cfg.parser.similarity_threshold           # 0.5
"""

import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from logmend.model import WILDCARD

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
DATA_DIR = Path(__file__).parent / 'data'
DEFAULT_CONFIG_PATH = DATA_DIR / 'default_config.json'


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass
class VariablePattern:
    name: str
    pattern: str

    def to_dict(self) -> dict:
        return {'name': self.name, 'pattern': self.pattern}

    @classmethod
    def from_dict(cls, data: dict) -> 'VariablePattern':
        try:
            return cls(name=str(data['name']), pattern=str(data['pattern']))
        except (KeyError, TypeError) as e:
            raise ConfigError(f"Variable pattern needs 'name' and 'pattern': {data!r}") from e


@dataclass
class PreprocessConfig:
    """Tokenizer settings: standalone punctuation and full-token variable patterns."""
    split_punct: str = "=:,;"
    variable_patterns: list = field(default_factory=list)
    placeholder: str = WILDCARD

    def __post_init__(self):
        for ch in self.split_punct:
            if ch.isalnum() or ch.isspace():
                raise ConfigError(f"split_punct must hold punctuation only, got {ch!r}")
        if self.placeholder != WILDCARD:
            raise ConfigError(f"placeholder must be {WILDCARD!r}, got {self.placeholder!r}")
        for vp in self.variable_patterns:
            try:
                re.compile(vp.pattern)
            except re.error as e:
                raise ConfigError(f"Invalid regex for variable pattern '{vp.name}': {e}") from e

    def to_dict(self) -> dict:
        return {
            'split_punct': self.split_punct,
            'variable_patterns': [vp.to_dict() for vp in self.variable_patterns],
            'placeholder': self.placeholder,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'PreprocessConfig':
        _check_keys('preprocess', data, {'split_punct', 'variable_patterns', 'placeholder'})
        patterns = [VariablePattern.from_dict(p) for p in data.get('variable_patterns', [])]
        return cls(
            split_punct=data.get('split_punct', "=:,;"),
            variable_patterns=patterns,
            placeholder=data.get('placeholder', WILDCARD),
        )


@dataclass
class ParserConfig:
    similarity_threshold: float = 0.5
    top_k: Optional[int] = None
    pool_skip_updated: bool = False

    def __post_init__(self):
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ConfigError(
                f"similarity_threshold must be within [0, 1], got {self.similarity_threshold}"
            )
        if self.top_k is not None and self.top_k < 1:
            raise ConfigError(f"top_k must be a positive integer or null, got {self.top_k}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ParserConfig':
        _check_keys('parser', data, {'similarity_threshold', 'top_k', 'pool_skip_updated'})
        return cls(**data)


@dataclass
class LlmConfig:
    """
    Chat-completion endpoint settings.

    Temperature is pinned to 0; replies must be reproducible.
    """
    backend: str = "mock"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o-mini"
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 3
    api_key_env: str = "SCOPE_LLM_API_KEY"
    fixtures_dir: Optional[str] = None

    def __post_init__(self):
        if self.backend not in ('mock', 'live'):
            raise ConfigError(f"llm.backend must be 'mock' or 'live', got {self.backend!r}")
        if self.temperature != 0:
            raise ConfigError(f"llm.temperature must be 0, got {self.temperature}")
        if self.max_retries < 0:
            raise ConfigError(f"llm.max_retries must be >= 0, got {self.max_retries}")
        if self.timeout <= 0:
            raise ConfigError(f"llm.timeout must be positive, got {self.timeout}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'LlmConfig':
        _check_keys('llm', data, set(cls.__dataclass_fields__))
        return cls(**data)


@dataclass
class LexiconConfig:
    path: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'LexiconConfig':
        _check_keys('lexicon', data, {'path'})
        return cls(**data)


@dataclass
class AppConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    parser: ParserConfig = field(default_factory=ParserConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    lexicon: LexiconConfig = field(default_factory=LexiconConfig)
    version: int = CONFIG_VERSION

    def to_dict(self) -> dict:
        return {
            'version': self.version,
            'preprocess': self.preprocess.to_dict(),
            'parser': self.parser.to_dict(),
            'llm': self.llm.to_dict(),
            'lexicon': self.lexicon.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'AppConfig':
        _check_keys('config', data, {'version', 'preprocess', 'parser', 'llm', 'lexicon'})
        version = data.get('version', CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"Unsupported config version {version} (expected {CONFIG_VERSION})")
        return cls(
            preprocess=PreprocessConfig.from_dict(data.get('preprocess', {})),
            parser=ParserConfig.from_dict(data.get('parser', {})),
            llm=LlmConfig.from_dict(data.get('llm', {})),
            lexicon=LexiconConfig.from_dict(data.get('lexicon', {})),
            version=version,
        )


_SECTIONS = ('preprocess', 'parser', 'llm', 'lexicon')


def _check_keys(section: str, data: dict, allowed: set) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"Section '{section}' must be an object, got {type(data).__name__}")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"Unknown key(s) in '{section}': {', '.join(unknown)}")


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e


def overlay(base: dict, user: dict) -> dict:
    """Overlay a user document on the defaults, one section at a time."""
    _check_keys('config', user, {'version', *_SECTIONS})
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in user.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"Section '{key}' must be an object")
            merged[key] = {**merged.get(key, {}), **value}
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[Path] = None) -> AppConfig:
    """Load the shipped defaults, optionally overlaid with a user config file."""
    data = _read_json(DEFAULT_CONFIG_PATH)
    if path is not None:
        data = overlay(data, _read_json(Path(path)))
        logger.info(f"Loaded config overlay from {path}")
    return AppConfig.from_dict(data)
