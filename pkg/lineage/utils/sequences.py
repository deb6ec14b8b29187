from typing import Hashable, Sequence

import Levenshtein


def edit_distance(first: str, second: str) -> int:
    return Levenshtein.distance(first, second)


def lcs_length(first: Sequence[Hashable], second: Sequence[Hashable]) -> int:
    """
    Length of the longest common subsequence, for strings and for lists of lines.

    Bit-parallel: every position of `first` is one bit of an integer, so each
    item of `second` costs a handful of big-integer operations instead of a
    row of the quadratic table.
    """
    if not first or not second:
        return 0

    masks = {}
    for index, item in enumerate(first):
        masks[item] = masks.get(item, 0) | (1 << index)

    full = (1 << len(first)) - 1
    row = full
    for item in second:
        matches = row & masks.get(item, 0)
        row = ((row + matches) | (row - matches)) & full

    return len(first) - bin(row).count('1')


def lcs_ratio(first: Sequence[Hashable], second: Sequence[Hashable]) -> float:
    """
    |LCS| / max(len), with two empty sequences counting as identical.
    """
    longest = max(len(first), len(second))
    if not longest:
        return 1.0

    return lcs_length(first, second) / longest
