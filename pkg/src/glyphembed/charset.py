"""Character sets: ordered, unique codepoint collections with stable string labels."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CharSet:
    """An ordered set of Unicode codepoints identified by a short label.

    Codepoints are stored sorted ascending and must be unique and non-empty.
    """

    id: str
    codepoints: tuple[int, ...] = field(default=())

    def __post_init__(self):
        cps = tuple(self.codepoints)
        if not cps:
            raise ValueError("charset must be non-empty")
        if len(set(cps)) != len(cps):
            raise ValueError("charset codepoints must be unique")
        if any(b < a for a, b in zip(cps, cps[1:])):
            object.__setattr__(self, "codepoints", tuple(sorted(cps)))

    def __len__(self) -> int:
        return len(self.codepoints)

    def __contains__(self, cp: int) -> bool:
        return cp in set(self.codepoints)

    def chars(self) -> list[str]:
        return [chr(cp) for cp in self.codepoints]

    def index_of(self, cp: int) -> int:
        return self.codepoints.index(cp)

    def subset(self, id: str, codepoints) -> "CharSet":
        missing = [cp for cp in codepoints if cp not in set(self.codepoints)]
        if missing:
            raise ValueError(f"codepoints not in charset {self.id}: {missing}")
        return CharSet(id, tuple(codepoints))


def _span(a: str, b: str) -> tuple[int, ...]:
    return tuple(range(ord(a), ord(b) + 1))


# Registry of the named sets used throughout: digits, lowercase+uppercase
# letters ("a-Z"), alphanumerics ("0-Z"), and the two capital halves used
# for unseen-character evaluation.
_NAMED: dict[str, tuple[int, ...]] = {
    "0-9": _span("0", "9"),
    "a-z": _span("a", "z"),
    "A-Z": _span("A", "Z"),
    "a-Z": _span("A", "Z") + _span("a", "z"),
    "0-Z": _span("0", "9") + _span("A", "Z") + _span("a", "z"),
    "A-M": _span("A", "M"),
    "N-Z": _span("N", "Z"),
}


def get_charset(name: str) -> CharSet:
    """Look up a named charset, or build one from an explicit string of characters."""
    if name in _NAMED:
        return CharSet(name, _NAMED[name])
    if name:
        return CharSet(name, tuple(sorted({ord(c) for c in name})))
    raise ValueError("empty charset name")


def charset_from_chars(id: str, chars: str) -> CharSet:
    return CharSet(id, tuple(sorted({ord(c) for c in chars})))
