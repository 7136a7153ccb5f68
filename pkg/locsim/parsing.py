from __future__ import annotations

import string

from locsim.errors import InputError

PARTY_LETTERS = string.ascii_uppercase


def parse_int_list(value: str | None) -> list[int]:
    """`"2,3"`, `"2 3"` and `"[2, 3]"` all give `[2, 3]`."""
    if not value:
        return []
    cleaned = value.replace("[", " ").replace("]", " ").replace(",", " ")
    out = []
    for part in cleaned.split():
        try:
            out.append(int(part.strip()))
        except ValueError:
            raise InputError(f"not an integer: {part!r} in {value!r}")
    return out


def parse_party(value: str, n_parties: int | None = None) -> int:
    value = value.strip()
    if len(value) == 1 and value.upper() in PARTY_LETTERS:
        index = PARTY_LETTERS.index(value.upper())
    else:
        try:
            index = int(value)
        except ValueError:
            raise InputError(f"not a party: {value!r} (use a letter A, B, ... or an index)")
    if index < 0 or (n_parties is not None and index >= n_parties):
        raise InputError(f"party {value!r} out of range for {n_parties} parties")
    return index


def parse_cut(value: str) -> tuple[list[int], list[int]]:
    """`"0|1,2"` -> `([0], [1, 2])`. The right side may be left empty to mean the complement."""
    if "|" not in value:
        raise InputError(f"cut must look like '0|1,2', got {value!r}")
    left, right = value.split("|", 1)
    return parse_int_list(left), parse_int_list(right)


def party_label(index: int) -> str:
    return PARTY_LETTERS[index] if index < len(PARTY_LETTERS) else str(index)


def parse_float_list(value: str | None) -> list[float]:
    if not value:
        return []
    cleaned = value.replace("[", " ").replace("]", " ").replace(",", " ")
    out = []
    for part in cleaned.split():
        try:
            out.append(float(part))
        except ValueError:
            raise InputError(f"not a number: {part!r} in {value!r}")
    return out
