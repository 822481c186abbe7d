"""
logmend - self-correcting online log parsing.

Templates are indexed by a bi-directional parse tree and a priority-ordered
pool; candidate matches are arbitrated by part-of-speech rules first and an
LLM second, and every match that generalizes a template corrects it in place.

Usage:
    from logmend import LogParser

    parser = LogParser()
    parser.parse_line("eth0 send 2048 packages")
    parser.parse_line("eth1 send 1960 packages")
    parser.export().templates   # E1  <*> send <*> packages  2
"""

__version__ = "0.1.0"

from logmend.model import WILDCARD, Template, TemplateToken, TokenSeq
from logmend.pipeline import AblationFlags, LogParser

__all__ = ['LogParser', 'AblationFlags', 'Template', 'TemplateToken', 'TokenSeq', 'WILDCARD', '__version__']
