"""Tokenizer fixtures and properties.

Every expected count below is hand-derived from the documented segmentation
rule (words = letter/digit runs with contraction/number joiners, CJK one word
per character, each punctuation/symbol character one token, whitespace nothing).
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from emoteval.tokenization import PUNCT, WORD, TokenCount, tokenize_target

# (text, words, punctuation)
HAND_COUNTED = [
    ("Scared the baby to death", 5, 0),
    ("I! it is good! hungry! ! ! ! !", 5, 7),
    ("", 0, 0),
    ("   \t\n", 0, 0),
    ("Hello, world!", 2, 2),
    ("don't", 1, 0),
    ("can't won't", 2, 0),
    ("O'Brien's dog", 2, 0),
    ("3.5 stars", 2, 0),
    ("1,000 likes!", 2, 1),
    ("WTF!!!", 1, 3),
    ("吓死宝宝了", 5, 0),
    ("Scared 宝宝 to death", 5, 0),
    ("我tm快炸了", 5, 0),
    ("I ❤️ NY", 2, 1),
    ("😂😂😂", 0, 3),
    ("Good 👍🏼 job", 2, 2),
    ("e.g. test", 2, 1),
    ("state-of-the-art", 4, 3),
    ("¿Qué pasa?", 2, 2),
    ("C'est l'été", 2, 0),
    ("ICQ号123456", 3, 0),
    ("真是醉了…", 4, 1),
    ("next-gen AI: 2.0", 4, 2),
    ("🇬🇧 flag", 1, 2),
    ("café au lait", 3, 0),
    ("U.S.A. rocks", 2, 1),
    ("boys' toys", 2, 1),
]


@pytest.mark.parametrize("text,words,punct", HAND_COUNTED)
def test_hand_counted_fixtures(text, words, punct):
    count = tokenize_target(text).count
    assert count == TokenCount(words=words, punctuation=punct)
    assert count.total == words + punct


def test_token_list_audit():
    tk = tokenize_target("I! it is good! hungry! ! ! ! !")
    words = [t.text for t in tk.tokens if t.kind == WORD]
    puncts = [t.text for t in tk.tokens if t.kind == PUNCT]
    assert words == ["I", "it", "is", "good", "hungry"]
    assert puncts == ["!"] * 7


def test_cjk_one_word_per_character():
    tk = tokenize_target("吓死宝宝了")
    assert [t.text for t in tk.tokens] == ["吓", "死", "宝", "宝", "了"]
    assert all(t.kind == WORD for t in tk.tokens)


def test_contraction_stays_one_token():
    tk = tokenize_target("don't")
    assert [t.text for t in tk.tokens] == ["don't"]


def test_every_punctuation_character_counts_alone():
    tk = tokenize_target("?!?")
    assert [t.text for t in tk.tokens] == ["?", "!", "?"]
    assert all(t.kind == PUNCT for t in tk.tokens)


def test_zwj_emoji_sequence_counts_symbols_only():
    # family = 3 symbol scalars joined by 2 format scalars
    tk = tokenize_target("\U0001F469‍\U0001F469‍\U0001F467")
    assert tk.count == TokenCount(words=0, punctuation=3)


@given(st.text(alphabet="ab 字。!？3.'", max_size=60))
def test_counts_are_consistent(text):
    tk = tokenize_target(text)
    count = tk.count
    assert count.words >= 0 and count.punctuation >= 0
    assert count.total == len(tk.tokens)


@given(st.text(alphabet="abc xyz 你好 !?", max_size=40))
def test_whitespace_padding_never_changes_counts(text):
    assert tokenize_target(text).count == tokenize_target(f"  {text}\n").count


@given(st.text(alphabet="abc你好!? ", max_size=30), st.text(alphabet="xyzма。！ ", max_size=30))
def test_concatenation_with_space_is_additive(a, b):
    joined = tokenize_target(f"{a} {b}").count
    separate_words = tokenize_target(a).count.words + tokenize_target(b).count.words
    separate_punct = tokenize_target(a).count.punctuation + tokenize_target(b).count.punctuation
    assert joined == TokenCount(words=separate_words, punctuation=separate_punct)
