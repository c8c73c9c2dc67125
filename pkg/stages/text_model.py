"""
Text Model
Alphabets, blocks, corpora, MAW representations and raw/FASTA ingestion
"""

import io
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, partial
from itertools import chain
from pathlib import Path
from typing import BinaryIO, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

import structlog
from Bio.SeqIO.FastaIO import SimpleFastaParser
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import (
    BadBlockCount,
    BlockMismatch,
    ByteOutsideAlphabet,
    ConfigError,
    EmptyInput,
    IndexOutOfRange,
    MalformedFasta,
)

logger = structlog.get_logger()

TEXT_SEPARATOR = 0x23
DNA_SEPARATOR = 0x00
WHITESPACE = b" \t\n\r\x0b\x0c"
CHUNK_SIZE = 1 << 20

# Explicit MAW: the word's bytes, 1..ℓ letters of the alphabet.
MawWord = bytes


class Alphabet(BaseModel):
    """Ordered letters plus the separator byte used between blocks"""

    model_config = ConfigDict(frozen=True)

    letters: bytes
    separator: int = Field(default=TEXT_SEPARATOR, ge=0, le=255)

    @field_validator("letters")
    @classmethod
    def _distinct_letters(cls, value: bytes) -> bytes:
        if not value:
            raise ValueError("alphabet must contain at least one letter")
        if len(set(value)) != len(value):
            raise ValueError("alphabet letters must be distinct")
        if any(b in WHITESPACE for b in value):
            raise ValueError("whitespace cannot be an alphabet letter")
        return value

    @model_validator(mode="after")
    def _separator_outside(self) -> "Alphabet":
        if self.separator in self.letters:
            raise ValueError(f"separator {self.separator!r} is one of the letters")
        return self

    @classmethod
    def dna(cls, separator: int = DNA_SEPARATOR) -> "Alphabet":
        return cls(letters=b"ACGT", separator=separator)

    @classmethod
    def binary(cls, separator: int = TEXT_SEPARATOR) -> "Alphabet":
        return cls(letters=b"01", separator=separator)

    @classmethod
    def from_preset(cls, preset: str, separator: Optional[int] = None,
                    text_separator: int = TEXT_SEPARATOR,
                    dna_separator: int = DNA_SEPARATOR) -> "Alphabet":
        """
        Resolve a CLI alphabet preset

        Args:
            preset: 'dna', 'binary' or 'custom:<letters>'
            separator: explicit separator overriding the preset default
        """
        try:
            if preset == "dna":
                return cls.dna(dna_separator if separator is None else separator)
            if preset == "binary":
                return cls.binary(text_separator if separator is None else separator)
            if preset.startswith("custom:"):
                letters = preset[len("custom:"):].encode("latin-1")
                return cls(letters=letters, separator=text_separator if separator is None else separator)
        except ValueError as e:
            raise ConfigError(f"invalid alphabet {preset!r}: {e}")
        raise ConfigError(f"unknown alphabet preset {preset!r} (expected dna, binary or custom:<letters>)")

    @property
    def sigma(self) -> int:
        return len(self.letters)

    @cached_property
    def letter_set(self) -> FrozenSet[int]:
        return frozenset(self.letters)

    @cached_property
    def rank_table(self) -> Tuple[int, ...]:
        """rank_table[byte] is the letter's order index, -1 for non-letters"""
        table = [-1] * 256
        for rank, letter in enumerate(self.letters):
            table[letter] = rank
        return tuple(table)

    @cached_property
    def sort_table(self) -> bytes:
        # translate table mapping each letter to its rank byte, for canonical comparisons
        table = bytearray(range(256))
        for rank, letter in enumerate(self.letters):
            table[letter] = rank
        return bytes(table)

    def rank(self, letter: int) -> int:
        return self.rank_table[letter]


class Block(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=1)
    data: bytes

    @field_validator("data")
    @classmethod
    def _non_empty(cls, value: bytes) -> bytes:
        if not value:
            raise ValueError("block data must be non-empty")
        return value

    def __len__(self) -> int:
        return len(self.data)


class Corpus(BaseModel):
    model_config = ConfigDict(frozen=True)

    alphabet: Alphabet
    blocks: Tuple[Block, ...]

    @model_validator(mode="after")
    def _ordered_blocks(self) -> "Corpus":
        if not self.blocks:
            raise ValueError("corpus needs at least one block")
        for expected, block in enumerate(self.blocks, start=1):
            if block.id != expected:
                raise ValueError(f"block ids must be 1..k in order, found {block.id} at {expected}")
            if block.data.translate(None, self.alphabet.letters):
                raise ValueError(f"block {block.id} contains bytes outside the alphabet")
        return self

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def max_in(self) -> int:
        return max(len(b) for b in self.blocks)

    def prefix_texts(self, n: int) -> List[bytes]:
        return [b.data for b in self.blocks[:n]]


class MawTupleRef(NamedTuple):
    """Constant-space MAW: block[i1..i2] (inclusive) followed by alpha"""

    block_id: int
    i1: int
    i2: int
    alpha: int


@dataclass(frozen=True)
class MawSet:
    words: FrozenSet[MawWord] = frozenset()
    total_length: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "total_length", sum(map(len, self.words)))

    @classmethod
    def from_words(cls, words: Iterable[MawWord]) -> "MawSet":
        return cls(frozenset(words))

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[MawWord]:
        return iter(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self.words

    def letters(self) -> FrozenSet[int]:
        return frozenset(w[0] for w in self.words if len(w) == 1)

    def ordered(self, alphabet: Optional[Alphabet] = None) -> List[MawWord]:
        return canonical_order(self, alphabet)

    def union(self, other: Iterable[MawWord]) -> "MawSet":
        return MawSet(self.words | frozenset(other))

    def is_antifactorial(self) -> bool:
        """No element is a proper factor of another element"""
        words = self.words
        for w in words:
            n = len(w)
            for i in range(n):
                for j in range(i + 1, n + 1):
                    if j - i < n and w[i:j] in words:
                        return False
        return True


class FastaPolicy(str, Enum):
    REJECT = "reject"
    SPLIT = "split"


def canonical_order(maw_set: Union[MawSet, Iterable[MawWord]],
                    alphabet: Optional[Alphabet] = None) -> List[MawWord]:
    """Sort by (length, lexicographic in alphabet order)"""
    words = maw_set.words if isinstance(maw_set, MawSet) else maw_set
    if alphabet is None:
        return sorted(words, key=lambda w: (len(w), w))
    table = alphabet.sort_table
    return sorted(words, key=lambda w: (len(w), w.translate(table)))


def materialize(ref: MawTupleRef, block: Block) -> MawWord:
    if ref.block_id != block.id:
        raise BlockMismatch(f"tuple refers to block {ref.block_id}, got block {block.id}")
    if not 0 <= ref.i1 <= ref.i2 < len(block.data):
        raise IndexOutOfRange(
            f"tuple <{ref.i1},{ref.i2}> outside block {block.id} of length {len(block.data)}",
            {"i1": ref.i1, "i2": ref.i2, "length": len(block.data)},
        )
    return block.data[ref.i1:ref.i2 + 1] + bytes((ref.alpha,))


def _first_outside(data: bytes, allowed: bytes) -> int:
    allowed_set = set(allowed)
    for pos, byte in enumerate(data):
        if byte not in allowed_set:
            return pos
    return -1


def ingest_raw(stream: bytes, alphabet: Alphabet, block_id: int = 1) -> Block:
    """Read one block from raw bytes, dropping whitespace"""
    if stream.translate(None, alphabet.letters + WHITESPACE):
        pos = _first_outside(stream, alphabet.letters + WHITESPACE)
        raise ByteOutsideAlphabet(pos, stream[pos])

    data = stream.translate(None, WHITESPACE)
    if not data:
        raise EmptyInput("input contains no letters")

    logger.debug("Raw block ingested", block_id=block_id, length=len(data))
    return Block(id=block_id, data=data)


def iter_raw_letters(handle: BinaryIO, alphabet: Alphabet,
                     chunk_size: int = CHUNK_SIZE) -> Iterator[bytes]:
    """Letters of a raw stream in bounded chunks, whitespace dropped"""
    allowed = alphabet.letters + WHITESPACE
    offset = 0
    letters_seen = False
    for chunk in iter(partial(handle.read, chunk_size), b""):
        if chunk.translate(None, allowed):
            pos = _first_outside(chunk, allowed)
            raise ByteOutsideAlphabet(offset + pos, chunk[pos])
        offset += len(chunk)
        letters = chunk.translate(None, WHITESPACE)
        if letters:
            letters_seen = True
            yield letters
    if not letters_seen:
        raise EmptyInput("input contains no letters")


def _headed_lines(lines: Iterable[str]) -> Iterator[str]:
    lines = iter(lines)
    for line in lines:
        if line.strip():
            if not line.startswith(">"):
                raise MalformedFasta("FASTA input must start with a '>' header line")
            return chain([line], lines)
    raise EmptyInput("FASTA input contains no records")


def _fasta_records(lines: Iterable[str]) -> Iterator[Tuple[str, bytes]]:
    try:
        for title, sequence in SimpleFastaParser(_headed_lines(lines)):
            yield title, sequence.upper().encode("latin-1").translate(None, WHITESPACE)
    except ValueError as e:
        raise MalformedFasta(f"could not parse FASTA input: {e}")


def _splitter(alphabet: Alphabet) -> "re.Pattern[bytes]":
    return re.compile(b"[^" + re.escape(alphabet.letters) + b"]+")


def _split_pieces(lines: Iterable[str], alphabet: Alphabet) -> Iterator[bytes]:
    # letter runs between headers and non-letter runs, assembled line by line
    splitter = _splitter(alphabet)
    piece = bytearray()
    for line in _headed_lines(lines):
        if line.startswith(">"):
            if piece:
                data = bytes(piece)
                piece.clear()
                yield data
            continue
        sequence = line.upper().encode("latin-1").translate(None, WHITESPACE)
        for j, part in enumerate(splitter.split(sequence)):
            if j > 0 and piece:
                data = bytes(piece)
                piece.clear()
                yield data
            piece += part
    if piece:
        yield bytes(piece)


def iter_fasta_blocks(lines: Iterable[str], alphabet: Alphabet,
                      policy: FastaPolicy = FastaPolicy.REJECT, first_id: int = 1) -> Iterator[Block]:
    """
    One block per FASTA record, in file order, one record in memory at a time

    Under FastaPolicy.SPLIT, runs of bytes outside the alphabet (typically 'N')
    end the current block instead of failing the run, and records are read line
    by line so only the block being assembled is held.
    """
    block_id = first_id
    if policy is FastaPolicy.SPLIT:
        for piece in _split_pieces(lines, alphabet):
            yield Block(id=block_id, data=piece)
            block_id += 1
    else:
        for title, sequence in _fasta_records(lines):
            pos = _first_outside(sequence, alphabet.letters)
            if pos >= 0:
                raise ByteOutsideAlphabet(pos, sequence[pos], record=title)
            if not sequence:
                raise EmptyInput(f"FASTA record {title!r} has an empty sequence")
            yield Block(id=block_id, data=sequence)
            block_id += 1

    if block_id == first_id:
        raise EmptyInput("FASTA input contains no usable sequence")
    logger.debug("FASTA input read", blocks=block_id - first_id, policy=policy.value)


def ingest_fasta(stream: bytes, alphabet: Alphabet,
                 policy: FastaPolicy = FastaPolicy.REJECT) -> Corpus:
    blocks = tuple(iter_fasta_blocks(io.StringIO(stream.decode("latin-1")), alphabet, policy))
    logger.info("FASTA corpus ingested", blocks=len(blocks), policy=policy.value,
                total_length=sum(map(len, blocks)))
    return Corpus(alphabet=alphabet, blocks=blocks)


def iter_fasta_letters(lines: Iterable[str], alphabet: Alphabet,
                       policy: FastaPolicy = FastaPolicy.REJECT) -> Iterator[bytes]:
    """
    Letters of a single-record FASTA stream, one sequence line at a time

    The record is never joined, so a genome can be split into blocks without
    holding it whole. Under FastaPolicy.SPLIT only leading and trailing runs
    outside the alphabet are dropped; an inner run would start a second block.
    """
    lines = _headed_lines(lines)
    title = next(lines)[1:].strip()
    splitter = _splitter(alphabet)
    position = 0
    letters_seen = gap_pending = False

    for line in lines:
        if line.startswith(">"):
            raise BadBlockCount("splitting needs exactly one FASTA record", {"record": line[1:].strip()})
        sequence = line.upper().encode("latin-1").translate(None, WHITESPACE)
        if policy is FastaPolicy.REJECT:
            pos = _first_outside(sequence, alphabet.letters)
            if pos >= 0:
                raise ByteOutsideAlphabet(position + pos, sequence[pos], record=title)
            position += len(sequence)
            if sequence:
                letters_seen = True
                yield sequence
            continue

        for j, part in enumerate(splitter.split(sequence)):
            if j > 0:
                gap_pending = True
            if not part:
                continue
            if gap_pending and letters_seen:
                raise BadBlockCount("splitting needs exactly one block, but the record has several",
                                    {"record": title})
            gap_pending = False
            letters_seen = True
            yield part

    if not letters_seen:
        raise EmptyInput(f"FASTA record {title!r} has an empty sequence")


def block_sizes(n: int, k: int) -> List[int]:
    """Lengths of k contiguous blocks over n letters, differing by at most one, longer ones first"""
    if k < 1 or k > n:
        raise BadBlockCount(f"cannot split {n} letters into {k} blocks", {"k": k, "length": n})
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def split_into_blocks(block: Block, k: int, alphabet: Alphabet) -> Corpus:
    blocks = []
    start = 0
    for i, size in enumerate(block_sizes(len(block.data), k), start=1):
        blocks.append(Block(id=i, data=block.data[start:start + size]))
        start += size
    return Corpus(alphabet=alphabet, blocks=tuple(blocks))


def iter_split_blocks(chunks: Iterable[bytes], n: int, k: int) -> Iterator[Block]:
    """
    Cut a stream of n letters into the blocks of split_into_blocks, lazily

    Only the block being filled and at most one incoming chunk are buffered.
    """
    sizes = block_sizes(n, k)
    buffer = bytearray()
    block_id = 1
    for chunk in chunks:
        buffer += chunk
        while block_id <= k and len(buffer) >= sizes[block_id - 1]:
            size = sizes[block_id - 1]
            data = bytes(buffer[:size])
            del buffer[:size]
            yield Block(id=block_id, data=data)
            block_id += 1
    if block_id <= k or buffer:
        raise BadBlockCount(f"input changed while being split: expected {n} letters", {"k": k, "length": n})


def format_maw_lines(words: Iterable[MawWord]) -> bytes:
    """One word per line with a trailing newline"""
    return b"".join(w + b"\n" for w in words)


def read_maw_file(path: Union[str, Path]) -> MawSet:
    data = Path(path).read_bytes()
    return MawSet.from_words(line for line in data.split(b"\n") if line)
