"""
Tests for tokenization and variable masking.
"""

import pytest

from logmend.config import ConfigError, PreprocessConfig, VariablePattern
from logmend.preprocess import EmptyLineError, Preprocessor, mask_variables, tokenize


class TestMaskVariables:
    """Test full-token variable masking with the shipped patterns."""

    def test_number(self):
        assert mask_variables(["eth0", "send", "2048", "packages"]) == ["eth0", "send", "<*>", "packages"]

    def test_no_match(self):
        assert mask_variables(["session", "started"]) == ["session", "started"]

    def test_ip_with_port(self):
        assert mask_variables(["10.0.0.5:8080"]) == ["<*>"]

    @pytest.mark.parametrize('token', [
        '192.168.1.1', '0x1F3a', '-42', '3.14', '/var/log/syslog', 'root@example.com',
        'https://example.com/a?b=1',
    ])
    def test_masked(self, token):
        assert mask_variables([token]) == ["<*>"]

    @pytest.mark.parametrize('token', ['eth0', 'node-12', 'pts/3', 'job_1234', 'v2', 'api.example.com'])
    def test_not_masked(self, token):
        """Patterns must match the whole token, never a substring."""
        assert mask_variables([token]) == [token]

    def test_length_preserved(self):
        tokens = ["a", "1", "b", "2", "c"]
        assert len(mask_variables(tokens)) == len(tokens)


class TestTokenize:
    """Test the full preprocessing pass."""

    def test_punctuation_split(self):
        seq = tokenize("authentication failure; user=guest")
        assert seq.tokens == ("authentication", "failure", ";", "user", "=", "guest")

    def test_single_token(self):
        assert tokenize("ok").tokens == ("ok",)

    def test_split_then_mask(self):
        assert tokenize("port=62267").tokens == ("port", "=", "<*>")

    def test_ip_port_masked_before_split(self):
        assert tokenize("connect 10.0.0.5:8080 ok").tokens == ("connect", "<*>", "ok")

    def test_trailing_colon(self):
        assert tokenize("Removable base files: 12").tokens == ("Removable", "base", "files", ":", "<*>")

    def test_whitespace_trimmed(self):
        assert tokenize("  a   b \t").tokens == ("a", "b")

    @pytest.mark.parametrize('raw', ['', '   ', '\t\n'])
    def test_empty_line(self, raw):
        with pytest.raises(EmptyLineError):
            tokenize(raw)

    def test_fixed_point(self, preprocessor):
        """Re-tokenizing the rendering of a tokenized line gives the same tokens."""
        lines = [
            "authentication failure; user=guest",
            "User login: user=alice tty=pts/3 host=10.1.2.3",
            "eth0 send 2048 packages",
            "a,b;c:d=e",
        ]
        for raw in lines:
            seq = preprocessor.tokenize(raw)
            assert preprocessor.tokenize(seq.text()) == seq

    def test_no_empty_tokens(self, preprocessor):
        seq = preprocessor.tokenize("a==b ,, ;c")
        assert all(seq.tokens)
        assert seq.tokens == ("a", "=", "=", "b", ",", ",", ";", "c")


class TestPreprocessConfig:
    """Test config validation for the tokenizer."""

    def test_invalid_regex_fails_at_startup(self):
        with pytest.raises(ConfigError):
            PreprocessConfig(variable_patterns=[VariablePattern('bad', '([')])

    def test_alphanumeric_split_char_rejected(self):
        with pytest.raises(ConfigError):
            PreprocessConfig(split_punct="=a")

    def test_placeholder_is_fixed(self):
        with pytest.raises(ConfigError):
            PreprocessConfig(placeholder="*")

    def test_custom_patterns(self):
        cfg = PreprocessConfig(split_punct="", variable_patterns=[VariablePattern('blk', r'blk_-?\d+')])
        pre = Preprocessor(cfg)
        assert pre.tokenize("Deleting block blk_-1608 x=1").tokens == ("Deleting", "block", "<*>", "x=1")
