"""
Oracle
Brute-force MAWs straight from the definition, for differential testing
"""

from typing import Sequence, Set

from .errors import ConfigError
from .text_model import Alphabet, MawSet


def _factors(text: bytes, ell: int) -> Set[bytes]:
    n = len(text)
    return {text[i:j] for i in range(n) for j in range(i + 1, min(i + ell, n) + 1)}


def oracle_maws(text: bytes, ell: int, alphabet: Alphabet) -> MawSet:
    """M^ℓ(text) over the alphabet; words containing non-letters are never emitted"""
    if ell < 1:
        raise ConfigError("ell must be >= 1")

    factors = _factors(text, ell)
    letters = alphabet.letters
    words = {bytes((c,)) for c in letters if bytes((c,)) not in factors}
    if ell == 1:
        return MawSet.from_words(words)

    middles = [b""] + [f for f in factors if len(f) <= ell - 2 and not f.translate(None, letters)]
    for u in middles:
        for a in letters:
            au = bytes((a,)) + u
            if au not in factors:
                continue
            for b in letters:
                ub = u + bytes((b,))
                if ub in factors and au + bytes((b,)) not in factors:
                    words.add(au + bytes((b,)))
    return MawSet.from_words(words)


def oracle_concat(blocks: Sequence[bytes], ell: int, alphabet: Alphabet) -> MawSet:
    """M^ℓ(y1#y2#...#yk) with the alphabet's separator"""
    return oracle_maws(bytes((alphabet.separator,)).join(blocks), ell, alphabet)
