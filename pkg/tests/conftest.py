"""
Pytest configuration and shared fixtures for logmend tests.
"""

import os
import subprocess
import sys
from pathlib import Path

import pytest

from tests import synthetic

SRC_DIR = Path(__file__).resolve().parent.parent / 'src'


@pytest.fixture
def preprocessor():
    from logmend.preprocess import Preprocessor
    return Preprocessor()


@pytest.fixture(scope='session')
def lexicon():
    """The shipped lexicon, loaded once."""
    from logmend.pos import load_lexicon
    return load_lexicon()


@pytest.fixture
def fixtures_dir(tmp_path):
    """Empty directory for recorded LLM replies."""
    path = tmp_path / 'llm-fixtures'
    path.mkdir()
    return path


@pytest.fixture
def make_parser(lexicon):
    """Factory for parsers on the offline mock LLM."""
    from logmend.llm_client import MockLlmClient
    from logmend.pipeline import AblationFlags, LogParser

    def _make(flags=None, fixtures_dir=None, config=None, **flag_kwargs):
        flags = flags or AblationFlags(**flag_kwargs)
        return LogParser(
            config=config,
            flags=flags,
            llm=MockLlmClient(fixtures_dir=fixtures_dir),
            lexicon=lexicon,
        )
    return _make


@pytest.fixture(scope='session')
def synthetic_rows():
    """2,000 shuffled (line, truth) pairs from 40 templates."""
    return synthetic.generate()


@pytest.fixture
def corpus_files(tmp_path, synthetic_rows):
    """The synthetic corpus on disk: (log path, truth CSV path)."""
    return synthetic.write_corpus(tmp_path, synthetic_rows)


@pytest.fixture
def cli_env():
    """Environment for `python -m logmend.cli` subprocesses."""
    env = dict(os.environ)
    env['PYTHONPATH'] = os.pathsep.join(filter(None, [str(SRC_DIR), env.get('PYTHONPATH')]))
    env.pop('FORCE_COLOR', None)
    env['NO_COLOR'] = '1'
    env['PYTHONIOENCODING'] = 'utf-8'
    env.pop('SCOPE_LLM_API_KEY', None)
    return env


@pytest.fixture
def run_cli(cli_env):
    """Run the CLI in a subprocess and return the CompletedProcess."""
    def _run(*args, cwd=None, input=None, env=None):
        return subprocess.run(
            [sys.executable, '-m', 'logmend.cli', *[str(a) for a in args]],
            capture_output=True,
            text=True,
            encoding='utf-8',
            env={**cli_env, **(env or {})},
            cwd=cwd,
            input=input,
        )
    return _run
