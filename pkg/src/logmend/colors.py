"""
Terminal color support for logmend's report output.

Colors are switched off automatically when stdout is not a TTY, when
NO_COLOR is set or TERM=dumb; FORCE_COLOR overrides all of that.
"""

import os
import sys


def _supports_color() -> bool:
    """Check if the terminal supports ANSI color codes."""
    # FORCE_COLOR wins over every other signal
    if 'FORCE_COLOR' in os.environ:
        return True

    if 'NO_COLOR' in os.environ:
        return False

    if not hasattr(sys.stdout, 'isatty') or not sys.stdout.isatty():
        return False

    if os.environ.get('TERM', '') == 'dumb':
        return False

    return True


class Colors:
    """
    ANSI color codes - automatically disabled on unsupported terminals.

    Usage:
        from logmend.colors import Colors
        print(f"{Colors.GREEN}GA 0.98{Colors.RESET}")
    """
    _enabled = _supports_color()

    RESET = "\033[0m" if _enabled else ""

    BOLD = "\033[1m" if _enabled else ""
    DIM = "\033[2m" if _enabled else ""

    RED = "\033[31m" if _enabled else ""
    GREEN = "\033[32m" if _enabled else ""
    YELLOW = "\033[33m" if _enabled else ""
    BLUE = "\033[34m" if _enabled else ""
    MAGENTA = "\033[35m" if _enabled else ""
    CYAN = "\033[36m" if _enabled else ""

    @classmethod
    def is_enabled(cls) -> bool:
        return cls._enabled

    @classmethod
    def metric_color(cls, value: float) -> str:
        """Green from 0.9, yellow from 0.7, red below."""
        if value >= 0.9:
            return cls.GREEN
        if value >= 0.7:
            return cls.YELLOW
        return cls.RED

    @classmethod
    def source_color(cls, source: str) -> str:
        colors = {
            'bdpt_forward': cls.GREEN,
            'bdpt_reverse': cls.CYAN,
            'ptmp': cls.YELLOW,
            'new': cls.MAGENTA,
        }
        return colors.get(source, cls.RESET)

    @classmethod
    def format_metric(cls, value: float) -> str:
        return f"{cls.metric_color(value)}{value:.4f}{cls.RESET}"

    @classmethod
    def format_source(cls, source: str, width: int = 0) -> str:
        """Color a match-source label, padding to `width` outside the color codes."""
        padding = ' ' * max(0, width - len(source))
        return f"{cls.source_color(source)}{source}{cls.RESET}{padding}"


def metric_str(value: float) -> str:
    """Format a metric value with color (shorthand)."""
    return Colors.format_metric(value)


def source_str(source: str, width: int = 0) -> str:
    """Format a match-source label with color (shorthand)."""
    return Colors.format_source(source, width)


def colorize(text: str, color: str) -> str:
    """Apply a color to text if colors are enabled."""
    if Colors._enabled:
        return f"{color}{text}{Colors.RESET}"
    return text
