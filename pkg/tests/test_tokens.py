import pytest
from hypothesis import given, strategies as st

from vtrans.errors import EmptyToken
from vtrans.tokens import TokenClass, TokenFilter, classify_token, load_pattern_file


@pytest.mark.parametrize(
    "text,expected",
    [
        ("9876543210", TokenClass.NUMERIC),
        ("+91-11-2345", TokenClass.NUMERIC),
        ("12.50", TokenClass.NUMERIC),
        ("10:30", TokenClass.NUMERIC),
        ("99%", TokenClass.NUMERIC),
        ("www.example.com", TokenClass.URL),
        ("https://example.com/path?q=1", TokenClass.URL),
        ("EXAMPLE.COM", TokenClass.URL),
        ("info@example.com", TokenClass.EMAIL),
        ("a.b@sub.example.co", TokenClass.EMAIL),
        ("metro", TokenClass.TRANSLATABLE),
        ("A-12", TokenClass.TRANSLATABLE),
        ("रिठाला", TokenClass.TRANSLATABLE),
        ("metro.", TokenClass.TRANSLATABLE),
    ],
)
def test_classification(text, expected):
    assert classify_token(text) == expected


def test_email_beats_url():
    # the address contains a domain, but email has precedence
    assert classify_token("user@site.org") == TokenClass.EMAIL


def test_empty_token():
    with pytest.raises(EmptyToken):
        classify_token("")


def test_override_file(tmp_path):
    path = tmp_path / "patterns.tsv"
    path.write_text("numeric\t[0-9]{4}\n# comment\n", encoding="utf-8")
    overrides = load_pattern_file(path)
    filt = TokenFilter(overrides)
    assert filt.classify("1234") == TokenClass.NUMERIC
    assert filt.classify("12") == TokenClass.TRANSLATABLE  # no longer matches

    bad = tmp_path / "bad.tsv"
    bad.write_text("translatable\tx\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_pattern_file(bad)


@given(st.text(min_size=1, max_size=30))
def test_total_and_deterministic(text):
    first = classify_token(text)
    assert first in TokenClass
    assert classify_token(text) == first


@given(st.text(alphabet="टधनमरल", min_size=1, max_size=8))
def test_devanagari_letters_are_translatable(text):
    assert classify_token(text) == TokenClass.TRANSLATABLE
