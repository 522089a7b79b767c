import pytest

from glyphembed.charset import CharSet, charset_from_chars, get_charset


def test_named_sets_sizes():
    assert len(get_charset("0-9")) == 10
    assert len(get_charset("a-z")) == 26
    assert len(get_charset("A-Z")) == 26
    assert len(get_charset("a-Z")) == 52
    assert len(get_charset("0-Z")) == 62
    assert len(get_charset("A-M")) == 13
    assert len(get_charset("N-Z")) == 13


def test_az_halves_partition_capitals():
    upper = set(get_charset("A-Z").codepoints)
    left = set(get_charset("A-M").codepoints)
    right = set(get_charset("N-Z").codepoints)
    assert left | right == upper
    assert left & right == set()


def test_mixed_case_set_is_union():
    assert set(get_charset("a-Z").codepoints) == set(get_charset("a-z").codepoints) | set(
        get_charset("A-Z").codepoints
    )


def test_explicit_chars_fallback():
    cs = get_charset("ABC")
    assert cs.chars() == ["A", "B", "C"]
    assert ord("A") in cs and ord("z") not in cs


def test_codepoints_sorted_unique():
    cs = charset_from_chars("x", "cba")
    assert cs.codepoints == (ord("a"), ord("b"), ord("c"))
    with pytest.raises(ValueError):
        CharSet("dup", (65, 65))
    with pytest.raises(ValueError):
        CharSet("empty", ())


def test_index_of_matches_order():
    cs = get_charset("A-Z")
    for i, cp in enumerate(cs.codepoints):
        assert cs.index_of(cp) == i


def test_subset_rejects_outsiders():
    cs = get_charset("A-Z")
    sub = cs.subset("A-C", tuple(range(ord("A"), ord("D"))))
    assert len(sub) == 3
    with pytest.raises(ValueError):
        cs.subset("bad", (ord("a"),))
