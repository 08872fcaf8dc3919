"""Plate alphabets and layout templates

Requirements:

- '0'/'O' and '1'/'I' are read as single merged classes
- merged classes are resolved by the category of their slot in the layout
- strings that don't fit the layout are never guessed at
"""

import re
import string
from typing import Dict, List, NamedTuple, Optional, Sequence

_digits = tuple(string.digits)
_letters = tuple(string.ascii_uppercase)

# merged label -> canonical class label
_merged_pairs = {'O': '0', 'I': '1'}

# canonical class label -> (letter reading, digit reading)
_resolutions = {'0': ('O', '0'), '1': ('I', '1')}

# patterns _do not_ need to cover row counts,
# which are handled separately
_layout_pattern = re.compile(r'^[AN?]+(/[AN?]+)?$')

# separators people write inside layout templates ("AAA-NNNN")
_separator_pattern = re.compile(r'[\s\-_.]+')


class LayoutError(ValueError):
    """Raised for layout templates that can't be parsed."""


class Alphabet:
    """Ordered character classes with merged ambiguous pairs

    The default alphabet has 34 classes: ten digits and the 24 letters left
    after 'O' and 'I' are folded into '0' and '1'.
    """

    def __init__(self, labels: Sequence[str], merged: Optional[Dict[str, str]] = None):
        self.merged = dict(_merged_pairs if merged is None else merged)
        classes = []
        for label in labels:
            label = self.merged.get(label, label)
            if label not in classes:
                classes.append(label)
        self.classes = tuple(classes)
        self._index = {label: i for i, label in enumerate(self.classes)}

    def __len__(self):
        return len(self.classes)

    def __contains__(self, label):
        return self.merged.get(label, label) in self._index

    def class_id(self, label: str) -> int:
        """Class index of a label, merged labels included ('O' -> id of '0')"""
        try:
            return self._index[self.merged.get(label, label)]
        except KeyError:
            raise LayoutError(f"'{label}' is not in the alphabet") from None

    def label(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.classes):
            raise LayoutError(f"class id {class_id} is out of range")
        return self.classes[class_id]

    def canonical(self, text: str) -> str:
        """Fold a ground-truth string into merged classes ("AIQ1056" -> "A1Q1056")"""
        return ''.join(self.merged.get(c, c) for c in text)

    def __repr__(self):
        return f"Alphabet({''.join(self.classes)!r})"


DEFAULT_ALPHABET = Alphabet(_digits + _letters)


class LayoutSpec(NamedTuple):
    """Positional template: A=alphabetic, N=numeric, ?=any."""

    pattern: str
    rows: int = 1
    # pattern length of the first row, for two-row layouts
    split: Optional[int] = None

    @classmethod
    def parse(cls, template: str) -> "LayoutSpec":
        """Parse a template like "AAA-NNNN" or a two-row "NNA/NNNNN"

        Separators are ignored; a '/' starts the second row.
        """
        cleaned = _separator_pattern.sub('', template.upper())
        if not _layout_pattern.match(cleaned):
            raise LayoutError(f"invalid layout template '{template}'")
        if '/' in cleaned:
            first, second = cleaned.split('/')
            return cls(pattern=first + second, rows=2, split=len(first))
        return cls(pattern=cleaned, rows=1)

    def __str__(self):
        if self.rows == 2:
            return f"{self.pattern[:self.split]}/{self.pattern[self.split:]}"
        return self.pattern


BRAZILIAN_LAYOUT = LayoutSpec.parse("AAA-NNNN")


class Violation(NamedTuple):
    # None for a length mismatch
    index: Optional[int]
    reason: str


def _category_ok(char, slot):
    if slot == 'A':
        return char.startswith(_letters)
    if slot == 'N':
        return char.startswith(_digits)
    return True


def validate(text: str, layout: LayoutSpec) -> List[Violation]:
    """Positions where the character category contradicts the layout

    A length mismatch is reported as a single violation without an index;
    positions are not checked because there is no alignment to check against.
    """
    if len(text) != len(layout.pattern):
        return [
            Violation(
                None,
                f"length {len(text)} does not match layout length {len(layout.pattern)}",
            )
        ]
    violations = []
    for i, (char, slot) in enumerate(zip(text, layout.pattern)):
        if not _category_ok(char, slot):
            kind = "alphabetic" if slot == 'A' else "numeric"
            violations.append(Violation(i, f"'{char}' in {kind} slot"))
    return violations


def disambiguate(text: str, layout: LayoutSpec) -> str:
    """Resolve merged classes by the category of their slot

    '0' becomes 'O' and '1' becomes 'I' at alphabetic positions; at numeric
    and '?' positions they stay digits. Text whose length doesn't match the
    layout is returned unchanged, `validate` reports it.
    """
    if len(text) != len(layout.pattern):
        return text
    resolved = []
    for char, slot in zip(text, layout.pattern):
        canonical = _merged_pairs.get(char, char)
        if canonical in _resolutions:
            letter, digit = _resolutions[canonical]
            char = letter if slot == 'A' else digit
        resolved.append(char)
    return ''.join(resolved)
