"""
Chat-completion transport for Stage II template matching.

Two backends share one interface:

- live: single-turn POST to an OpenAI-compatible /chat/completions
  endpoint over httpx, temperature 0, retried with exponential backoff
  on timeouts, transport failures, 429 and 5xx responses.
- mock: offline and deterministic. A reply is first looked up in a
  fixtures directory (file name = sha256 hex digest of the prompt, plus
  ".txt"); on a miss a rule-based responder answers from the LOG/TEMPLATE
  lines of the prompt.

Wire format (live):

    request:  {"model": ..., "temperature": 0,
               "messages": [{"role": "system", "content": ...},
                            {"role": "user", "content": <prompt>}]}
    response: {"choices": [{"message": {"content": <reply>}}],
               "usage": {"prompt_tokens": p, "completion_tokens": c}}
"""

import hashlib
import logging
import os
import random
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import httpx

from logmend.config import LlmConfig
from logmend.model import WILDCARD

logger = logging.getLogger(__name__)

__all__ = [
    'LlmConfig', 'UsageCounters', 'LlmReply', 'LlmClient', 'LiveLlmClient', 'MockLlmClient',
    'LlmError', 'LlmTimeout', 'LlmTransportError', 'LlmAuthError', 'LlmRateLimited', 'LlmExhausted',
    'create_client', 'fixture_key', 'heuristic_reply',
]

SYSTEM_PROMPT = (
    "You are a log parsing assistant. You decide whether a log message belongs to a "
    "log template and answer strictly in the requested output format."
)


class LlmError(RuntimeError):
    """Base class for LLM transport failures."""
    retryable = False


class LlmTimeout(LlmError):
    retryable = True


class LlmTransportError(LlmError):
    retryable = True


class LlmAuthError(LlmError):
    """Missing or rejected credentials; never retried."""


class LlmRateLimited(LlmError):
    retryable = True

    def __init__(self, message: str, retry_after: Optional[float] = None):
        super().__init__(message)
        self.retry_after = retry_after


class LlmExhausted(LlmError):
    """All retry attempts failed."""


@dataclass
class UsageCounters:
    invocations: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class LlmReply(NamedTuple):
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


def fixture_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode('utf-8')).hexdigest()


class LlmClient:
    """Counts every call, successful or not, before delegating to `_complete`."""

    def __init__(self, cfg: LlmConfig):
        self.cfg = cfg
        self.usage = UsageCounters()

    def complete(self, prompt: str) -> LlmReply:
        self.usage.invocations += 1
        reply = self._complete(prompt)
        self.usage.prompt_tokens += reply.prompt_tokens
        self.usage.completion_tokens += reply.completion_tokens
        return reply

    def _complete(self, prompt: str) -> LlmReply:
        raise NotImplementedError

    def close(self) -> None:
        pass


class LiveLlmClient(LlmClient):
    def __init__(
        self,
        cfg: LlmConfig,
        api_key: str,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: Optional[random.Random] = None,
    ):
        super().__init__(cfg)
        self._http = httpx.Client(
            timeout=cfg.timeout,
            transport=transport,
            headers={'Authorization': f'Bearer {api_key}'},
        )
        self._sleep = sleep
        self._rng = rng or random.Random()

        # Retry configuration
        self._max_retries = cfg.max_retries
        self._initial_retry_delay = 0.5
        self._max_retry_delay = 8.0
        self._retry_backoff_multiplier = 2.0
        self._retry_jitter = 0.25

    def close(self) -> None:
        self._http.close()

    def _calculate_retry_delay(self, attempt: int) -> float:
        """
        Exponential backoff with jitter.

        Args:
            attempt: Current attempt number (0-indexed)

        Returns:
            Delay in seconds before next retry
        """
        delay = self._initial_retry_delay * (self._retry_backoff_multiplier ** attempt)
        delay = min(delay, self._max_retry_delay)
        jitter_range = delay * self._retry_jitter
        delay += self._rng.uniform(-jitter_range, jitter_range)
        return max(0.1, delay)

    def _payload(self, prompt: str) -> dict:
        return {
            'model': self.cfg.model,
            'temperature': self.cfg.temperature,
            'messages': [
                {'role': 'system', 'content': SYSTEM_PROMPT},
                {'role': 'user', 'content': prompt},
            ],
        }

    def _post_once(self, prompt: str) -> LlmReply:
        try:
            response = self._http.post(self.cfg.endpoint, json=self._payload(prompt))
        except httpx.TimeoutException as e:
            raise LlmTimeout(f"Request to {self.cfg.endpoint} timed out: {e}") from e
        except httpx.TransportError as e:
            raise LlmTransportError(f"Transport error talking to {self.cfg.endpoint}: {e}") from e

        status = response.status_code
        if status in (401, 403):
            raise LlmAuthError(f"Endpoint rejected credentials (HTTP {status})")
        if status == 429:
            retry_after = response.headers.get('Retry-After')
            try:
                retry_after = float(retry_after) if retry_after is not None else None
            except ValueError:
                retry_after = None
            raise LlmRateLimited("Rate limited (HTTP 429)", retry_after=retry_after)
        if status >= 500:
            raise LlmTransportError(f"Server error (HTTP {status})")
        if status >= 400:
            raise LlmError(f"Request rejected (HTTP {status}): {response.text[:200]}")

        try:
            data = response.json()
            text = data['choices'][0]['message']['content'] or ''
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise LlmError(f"Unexpected response shape from {self.cfg.endpoint}: {e}") from e
        usage = data.get('usage') or {}
        return LlmReply(
            text=text,
            prompt_tokens=int(usage.get('prompt_tokens', 0) or 0),
            completion_tokens=int(usage.get('completion_tokens', 0) or 0),
        )

    def _complete(self, prompt: str) -> LlmReply:
        last_error = None
        for attempt in range(self._max_retries + 1):
            try:
                return self._post_once(prompt)
            except LlmError as e:
                if not e.retryable:
                    raise
                last_error = e
                if attempt < self._max_retries:
                    delay = self._calculate_retry_delay(attempt)
                    if isinstance(e, LlmRateLimited) and e.retry_after is not None:
                        delay = max(delay, e.retry_after)
                    logger.warning(
                        f"LLM request failed ({e}), retry {attempt + 1}/{self._max_retries} in {delay:.2f}s"
                    )
                    self._sleep(delay)
        raise LlmExhausted(
            f"LLM request failed after {self._max_retries + 1} attempts: {last_error}"
        ) from last_error


class MockLlmClient(LlmClient):
    """Fixture replay with a rule-based fallback; never touches the network."""

    def __init__(self, cfg: Optional[LlmConfig] = None, fixtures_dir: Optional[Path] = None):
        super().__init__(cfg or LlmConfig())
        fixtures = fixtures_dir if fixtures_dir is not None else self.cfg.fixtures_dir
        self.fixtures_dir = Path(fixtures) if fixtures else None
        self.fixture_hits = 0

    def _complete(self, prompt: str) -> LlmReply:
        text = None
        if self.fixtures_dir is not None:
            path = self.fixtures_dir / f"{fixture_key(prompt)}.txt"
            if path.exists():
                text = path.read_text(encoding='utf-8')
                self.fixture_hits += 1
                logger.debug(f"Replayed LLM fixture {path.name}")
        if text is None:
            text = heuristic_reply(prompt)
        return LlmReply(text, len(prompt.split()), len(text.split()))


def create_client(cfg: LlmConfig, transport: Optional[httpx.BaseTransport] = None) -> LlmClient:
    """Build the configured backend; the live backend fails fast without an API key."""
    if cfg.backend == 'mock':
        return MockLlmClient(cfg)
    api_key = os.environ.get(cfg.api_key_env)
    if not api_key:
        raise LlmAuthError(f"Environment variable {cfg.api_key_env} is not set (required for the live LLM backend)")
    return LiveLlmClient(cfg, api_key, transport=transport)


# ============================================================================
# Rule-based responder
# ============================================================================

_ANTONYM_PAIRS = [
    ('boot', 'shutdown'), ('startup', 'shutdown'), ('start', 'stop'), ('started', 'stopped'),
    ('starting', 'stopping'), ('running', 'stopped'), ('open', 'close'), ('opened', 'closed'),
    ('up', 'down'), ('on', 'off'), ('enable', 'disable'), ('enabled', 'disabled'),
    ('connect', 'disconnect'), ('connected', 'disconnected'), ('success', 'failure'),
    ('succeeded', 'failed'), ('accept', 'reject'), ('accepted', 'rejected'), ('accepted', 'failed'),
    ('allow', 'deny'), ('allowed', 'denied'), ('lock', 'unlock'), ('locked', 'unlocked'),
    ('mount', 'unmount'), ('mounted', 'unmounted'), ('add', 'remove'), ('added', 'removed'),
    ('adding', 'removing'), ('login', 'logout'), ('read', 'write'), ('input', 'output'),
    ('send', 'receive'), ('sent', 'received'), ('true', 'false'), ('yes', 'no'),
    ('min', 'max'), ('minimum', 'maximum'), ('active', 'inactive'), ('online', 'offline'),
    ('valid', 'invalid'), ('available', 'unavailable'), ('healthy', 'unhealthy'),
    ('begin', 'end'), ('request', 'response'), ('upload', 'download'), ('import', 'export'),
    ('push', 'pull'), ('increase', 'decrease'), ('create', 'delete'), ('created', 'deleted'),
    ('attach', 'detach'), ('attached', 'detached'), ('load', 'unload'), ('loaded', 'unloaded'),
    ('install', 'uninstall'), ('register', 'unregister'), ('registered', 'unregistered'),
    ('subscribe', 'unsubscribe'), ('passed', 'failed'), ('primary', 'secondary'),
    ('client', 'server'), ('source', 'destination'), ('inbound', 'outbound'),
    ('ingress', 'egress'), ('renewed', 'expired'), ('finished', 'failed'),
]
ANTONYMS = frozenset(frozenset(p) for p in _ANTONYM_PAIRS)

# A token following one of these names the instance of a category.
KEY_WORDS = frozenset({
    'user', 'users', 'uid', 'gid', 'domain', 'interface', 'iface', 'host', 'hostname', 'port',
    'session', 'node', 'job', 'client', 'server', 'account', 'service', 'device', 'process',
    'pid', 'queue', 'instance', 'container', 'pod', 'table', 'database', 'db', 'thread', 'task',
    'worker', 'app', 'application', 'volume', 'disk', 'cluster', 'machine', 'vm', 'ip',
    'address', 'id', 'name', 'owner', 'group', 'tenant', 'topic', 'partition', 'file',
    'from', 'to', 'by', 'for',
})

DATA_CHARS = frozenset('/.@_')

KEY_VALUE_SEPARATORS = ('=', ':')


def _is_plural_variant(a: str, b: str) -> bool:
    return a + 's' == b or b + 's' == a or a + 'es' == b or b + 'es' == a


def classify_difference(prev: Optional[str], a: str, b: str) -> tuple:
    """
    Decide whether a differing concrete token pair is a variable.

    Returns (is_variable, reason).
    """
    la, lb = a.lower(), b.lower()
    if prev in KEY_VALUE_SEPARATORS:
        return True, "value of a key-value pair"
    if frozenset((la, lb)) in ANTONYMS:
        return False, "opposing meaning"
    if _is_plural_variant(la, lb):
        return False, "singular and plural forms differ"
    if prev is not None and prev.lower() in KEY_WORDS:
        return True, f"instance of '{prev}'"
    if any(ch.isdigit() or ch in DATA_CHARS for ch in a + b):
        return True, "data-like value"
    return False, "distinct fixed label"


def _prompt_field(prompt: str, name: str) -> Optional[str]:
    prefix = f"{name}:"
    for line in prompt.splitlines():
        if line.startswith(prefix):
            return line[len(prefix):].strip()
    return None


def heuristic_reply(prompt: str) -> str:
    """Answer a template-matching prompt from its LOG and TEMPLATE lines."""
    log_text = _prompt_field(prompt, 'LOG')
    tpl_text = _prompt_field(prompt, 'TEMPLATE')
    if log_text is None or tpl_text is None:
        return "Cannot find the log message and template in the request.\nNO_MATCH"

    log = log_text.split()
    tpl = tpl_text.split()
    if len(log) != len(tpl):
        return "Token counts differ.\nNO_MATCH"

    steps = []
    merged = []
    for i, (a, b) in enumerate(zip(log, tpl)):
        if a == b:
            merged.append(a)
            continue
        if a == WILDCARD or b == WILDCARD:
            merged.append(WILDCARD)
            continue
        prev = log[i - 1] if i > 0 and log[i - 1] == tpl[i - 1] else None
        is_variable, reason = classify_difference(prev, a, b)
        steps.append(f"- '{a}' vs '{b}': {'variable' if is_variable else 'constant'} ({reason})")
        if not is_variable:
            return "\n".join(["Differences:", *steps, "The messages differ in a constant.", "NO_MATCH"])
        merged.append(WILDCARD)

    return "\n".join([
        "Differences:",
        *(steps or ["- none"]),
        "All differing tokens are variables.",
        f"MATCH: {' '.join(merged)}",
    ])
