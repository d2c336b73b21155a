"""Target-text tokenization for the weighted error rate denominator.

The denominator of the rate is the count of all words and punctuation in the
target text. The segmentation convention, stated precisely so counts are
reproducible:

* Maximal runs of letters and digits form one word each. Between two letters,
  an apostrophe (U+0027 or U+2019) or a period joins the run ("don't", "e.g"
  are single words); between two digits, a period or comma joins ("3.5",
  "1,000"). No other joiners are honored; in particular "_" and "-" are
  punctuation, so hyphenated compounds count per part.
* Combining marks and format characters (e.g. ZWJ, variation selectors) attach
  to the current word and never count on their own.
* CJK ideographs and kana count one word per character, matching how untranslated
  Chinese shows up in MT output.
* Every punctuation- or symbol-class character (Unicode P* or S*) counts as one
  punctuation token by itself: "!!!" is three tokens, and emoji count one each
  because they carry emotional weight in this register.
* Whitespace and remaining control characters count as nothing.
"""

import unicodedata
from dataclasses import dataclass

WORD = "word"
PUNCT = "punct"

# Han, kana, Hangul, bopomofo: scripts whose characters count as one word each.
_CJK_RANGES = (
    (0x3040, 0x309F),    # hiragana
    (0x30A0, 0x30FF),    # katakana
    (0x3105, 0x312F),    # bopomofo
    (0x31F0, 0x31FF),    # katakana phonetic extensions
    (0x3400, 0x4DBF),    # CJK extension A
    (0x4E00, 0x9FFF),    # CJK unified ideographs
    (0xAC00, 0xD7A3),    # hangul syllables
    (0xF900, 0xFAFF),    # CJK compatibility ideographs
    (0x20000, 0x2FA1F),  # CJK extensions B..F + compatibility supplement
)

_LETTER_JOINERS = frozenset("'’.")
_DIGIT_JOINERS = frozenset(".,")


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _is_letter(ch: str) -> bool:
    return unicodedata.category(ch).startswith("L") and not _is_cjk(ch)


def _is_word_char(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return (cat.startswith("L") or cat.startswith("N")) and not _is_cjk(ch)


def _is_digit(ch: str) -> bool:
    return unicodedata.category(ch) == "Nd"


def _is_transparent(ch: str) -> bool:
    # Combining marks and format chars: absorbed into words, otherwise invisible.
    cat = unicodedata.category(ch)
    return cat in ("Mn", "Mc", "Me", "Cf")


def _next_base(text: str, i: int) -> str:
    """First character at or after i that is not transparent, or ""."""
    for j in range(i, len(text)):
        if not _is_transparent(text[j]):
            return text[j]
    return ""


@dataclass(frozen=True)
class Token:
    kind: str  # WORD or PUNCT
    text: str


@dataclass(frozen=True)
class TokenCount:
    words: int
    punctuation: int

    @property
    def total(self) -> int:
        return self.words + self.punctuation


@dataclass(frozen=True)
class Tokenization:
    tokens: tuple

    @property
    def count(self) -> TokenCount:
        words = sum(1 for t in self.tokens if t.kind == WORD)
        return TokenCount(words=words, punctuation=len(self.tokens) - words)


def tokenize_target(text: str) -> Tokenization:
    """Segment target text into word and punctuation tokens per the module rule."""
    tokens = []
    run_start = None  # start offset of the current word run
    last_base = ""    # last non-transparent character absorbed into the run

    def close(end: int):
        nonlocal run_start
        if run_start is not None:
            tokens.append(Token(WORD, text[run_start:end]))
            run_start = None

    for i, ch in enumerate(text):
        if run_start is not None:
            if _is_transparent(ch):
                continue
            if _is_word_char(ch):
                last_base = ch
                continue
            nxt = _next_base(text, i + 1)
            if ch in _LETTER_JOINERS and _is_letter(last_base) and nxt and _is_letter(nxt):
                continue
            if ch in _DIGIT_JOINERS and _is_digit(last_base) and nxt and _is_digit(nxt):
                continue
            close(i)
        # Fresh position (no open word run).
        if ch.isspace() or _is_transparent(ch):
            continue
        if _is_cjk(ch):
            tokens.append(Token(WORD, ch))
            continue
        if _is_word_char(ch):
            run_start = i
            last_base = ch
            continue
        cat = unicodedata.category(ch)
        if cat.startswith("P") or cat.startswith("S"):
            tokens.append(Token(PUNCT, ch))
        # Anything else (stray controls, unassigned, surrogates) counts as nothing.

    close(len(text))
    return Tokenization(tokens=tuple(tokens))
