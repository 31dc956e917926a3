"""Token filtering: decide which recognized words go to the translator.

Numbers, URLs and email addresses are rendered back verbatim instead of
being translated. Classification is a full-token regex match with
precedence Email > Url > Numeric > Translatable; the default patterns
below are normative and can be overridden from a pattern file.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from typing import Mapping

from .errors import EmptyToken


class TokenClass(enum.Enum):
    TRANSLATABLE = "translatable"
    NUMERIC = "numeric"
    URL = "url"
    EMAIL = "email"


# Anchored via fullmatch. Numeric covers phone numbers, prices, times and
# percentages; mixed alphanumerics like "A-12" intentionally fail it.
DEFAULT_PATTERNS: dict[TokenClass, str] = {
    TokenClass.NUMERIC: r"[+-]?[0-9]+([.,:/\-][0-9]+)*%?",
    TokenClass.URL: r"(https?://)?([a-z0-9-]+\.)+[a-z]{2,}(/[^\s]*)?",
    TokenClass.EMAIL: r"[^\s@]+@([a-z0-9-]+\.)+[a-z]{2,}",
}

_PRECEDENCE = (TokenClass.EMAIL, TokenClass.URL, TokenClass.NUMERIC)

_FLAGS = {
    TokenClass.NUMERIC: 0,
    TokenClass.URL: re.IGNORECASE,
    TokenClass.EMAIL: re.IGNORECASE,
}


class TokenFilter:
    """Compiled classifier; construct once, use from any thread."""

    def __init__(self, patterns: Mapping[TokenClass, str] | None = None):
        merged = dict(DEFAULT_PATTERNS)
        if patterns:
            merged.update(patterns)
        self._compiled = {
            cls: re.compile(merged[cls], _FLAGS[cls]) for cls in _PRECEDENCE
        }

    def classify(self, text: str) -> TokenClass:
        if text == "":
            raise EmptyToken("cannot classify an empty token")
        text = unicodedata.normalize("NFC", text)
        for cls in _PRECEDENCE:
            if self._compiled[cls].fullmatch(text):
                return cls
        return TokenClass.TRANSLATABLE


_DEFAULT_FILTER = TokenFilter()


def classify_token(text: str) -> TokenClass:
    """Classify one token with the default patterns."""
    return _DEFAULT_FILTER.classify(text)


def load_pattern_file(path) -> dict[TokenClass, str]:
    """Read `class<TAB>pattern` override lines (classes: numeric/url/email)."""
    overrides: dict[TokenClass, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            name, sep, pattern = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'class<TAB>pattern'")
            try:
                cls = TokenClass(name.strip().lower())
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unknown class {name!r}") from None
            if cls is TokenClass.TRANSLATABLE:
                raise ValueError(f"{path}:{lineno}: translatable is the fallback class")
            overrides[cls] = pattern
    return overrides
