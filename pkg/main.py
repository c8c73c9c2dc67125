"""
MAW Antidictionary Engine - Command Line Entry Point
Ingests raw or FASTA input, runs the incremental pipeline and writes one MAW file
per step plus a stats report
"""

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator, List, Literal, NamedTuple, Optional, Sequence, Tuple

import structlog
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from stages.error_handler import error_handler
from stages.errors import ConfigError, InvariantViolation
from stages.logger import configure_logging, maw_logger
from stages.pipeline import MawPipeline
from stages.settings import EngineSettings, parse_separator
from stages.text_model import (
    Alphabet,
    Block,
    FastaPolicy,
    MawWord,
    block_sizes,
    format_maw_lines,
    iter_fasta_blocks,
    iter_fasta_letters,
    iter_raw_letters,
    iter_split_blocks,
)
from tracing.langsmith_monitor import LangSmithMonitor

logger = structlog.get_logger()


class RunConfig(BaseModel):
    """Validated command-line configuration"""

    model_config = ConfigDict(frozen=True)

    inputs: Tuple[Path, ...]
    input_format: Literal["raw", "fasta"] = "raw"
    alphabet: str = "dna"
    ell: int
    split: Optional[int] = None
    out_dir: Path = Path("out")
    stats_path: Optional[Path] = None
    emit_tuples: bool = False
    fasta_policy: FastaPolicy = FastaPolicy.REJECT
    separator: Optional[int] = None

    @field_validator("ell")
    @classmethod
    def _positive_ell(cls, value: int) -> int:
        if value < 1:
            raise ValueError("ell must be >= 1")
        return value

    @field_validator("split")
    @classmethod
    def _positive_split(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 1:
            raise ValueError("split must be >= 1")
        return value

    @model_validator(mode="after")
    def _one_block_source(self) -> "RunConfig":
        if not self.inputs:
            raise ValueError("at least one --input is required")
        if self.split is not None and len(self.inputs) > 1:
            raise ValueError("--split works on a single input; pre-split inputs are already blocks")
        return self

    @property
    def resolved_stats_path(self) -> Path:
        return self.stats_path or self.out_dir / "stats.json"


class _ArgumentParser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1), not argparse's exit 2
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="maws",
        description="Minimal absent words of length <= ell for y1#y2#...#yN, one step per block",
    )
    parser.add_argument("--input", nargs="+", required=True, type=Path, help="input file(s)")
    parser.add_argument("--format", choices=["raw", "fasta"], default="raw", dest="input_format")
    parser.add_argument("--alphabet", default="dna", help="dna | binary | custom:<letters>")
    parser.add_argument("--ell", type=int, required=True, help="maximum MAW length")
    parser.add_argument("--split", type=int, default=None, help="split a single input into k blocks")
    parser.add_argument("--out", type=Path, default=Path("out"), dest="out_dir")
    parser.add_argument("--stats", type=Path, default=None, dest="stats_path")
    parser.add_argument("--emit-tuples", action="store_true",
                        help="also write each step's MAWs as <blockId,i1,i2,alpha> tuples")
    parser.add_argument("--fasta-policy", choices=[p.value for p in FastaPolicy], default="reject",
                        help="letters outside the alphabet: reject the input or split records at them")
    parser.add_argument("--separator", default=None, help="separator byte (character or number)")
    parser.add_argument("--log-level", default=None)
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> Tuple[RunConfig, argparse.Namespace]:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(
            inputs=tuple(args.input),
            input_format=args.input_format,
            alphabet=args.alphabet,
            ell=args.ell,
            split=args.split,
            out_dir=args.out_dir,
            stats_path=args.stats_path,
            emit_tuples=args.emit_tuples,
            fasta_policy=FastaPolicy(args.fasta_policy),
            separator=parse_separator(args.separator) if args.separator is not None else None,
        )
    except ValidationError as e:
        raise ConfigError(e.errors()[0]["msg"].removeprefix("Value error, "))
    return config, args


@contextmanager
def _open(path: Path, text: bool = False) -> Iterator[IO]:
    try:
        handle = open(path, encoding="latin-1") if text else open(path, "rb")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}")
    with handle:
        yield handle


class InputSurvey(NamedTuple):
    blocks: int
    max_in: int
    total_length: int


def _letter_chunks(path: Path, config: RunConfig, alphabet: Alphabet) -> Iterator[bytes]:
    if config.input_format == "fasta":
        with _open(path, text=True) as handle:
            yield from iter_fasta_letters(handle, alphabet, config.fasta_policy)
    else:
        with _open(path) as handle:
            yield from iter_raw_letters(handle, alphabet)


def survey_inputs(config: RunConfig, alphabet: Alphabet) -> InputSurvey:
    """
    Validate every input in one streaming pass before any output is written

    Holds at most one FASTA record (or one read chunk) at a time.
    """
    if config.split is not None:
        n = sum(len(c) for c in _letter_chunks(config.inputs[0], config, alphabet))
        sizes = block_sizes(n, config.split)
        return InputSurvey(blocks=len(sizes), max_in=sizes[0], total_length=n)

    blocks = max_in = total = 0
    for path in config.inputs:
        if config.input_format == "fasta":
            with _open(path, text=True) as handle:
                lengths = [len(b) for b in iter_fasta_blocks(handle, alphabet, config.fasta_policy)]
        else:
            lengths = [sum(len(c) for c in _letter_chunks(path, config, alphabet))]
        blocks += len(lengths)
        max_in = max(max_in, *lengths)
        total += sum(lengths)
    return InputSurvey(blocks=blocks, max_in=max_in, total_length=total)


def iter_blocks(config: RunConfig, alphabet: Alphabet, survey: InputSurvey) -> Iterator[Block]:
    """Blocks from the inputs, read one at a time as the pipeline asks for them"""
    if config.split is not None:
        yield from iter_split_blocks(_letter_chunks(config.inputs[0], config, alphabet),
                                     survey.total_length, config.split)
        return

    block_id = 1
    for path in config.inputs:
        if config.input_format == "fasta":
            with _open(path, text=True) as handle:
                for block in iter_fasta_blocks(handle, alphabet, config.fasta_policy, first_id=block_id):
                    block_id = block.id + 1
                    yield block
        else:
            yield Block(id=block_id, data=b"".join(_letter_chunks(path, config, alphabet)))
            block_id += 1


class StepWriter:
    """Pipeline sink writing maws.stepN.txt (and maws.stepN.tuples.tsv when asked)"""

    def __init__(self, out_dir: Path, alphabet: Alphabet, emit_tuples: bool = False):
        self.out_dir = out_dir
        self.alphabet = alphabet
        self.emit_tuples = emit_tuples
        self.pipeline: Optional[MawPipeline] = None
        out_dir.mkdir(parents=True, exist_ok=True)

    def __call__(self, n: int, words: List[MawWord]) -> None:
        path = self.out_dir / f"maws.step{n}.txt"
        path.write_bytes(format_maw_lines(words))
        logger.debug("Step output written", step=n, path=str(path), words=len(words))

        if self.emit_tuples and self.pipeline is not None:
            self._write_tuples(n, words)

    def _write_tuples(self, n: int, words: List[MawWord]) -> None:
        """The step-N set as <blockId,i1,i2,alpha> rows, in the order of maws.stepN.txt"""
        refs = self.pipeline.state.current_refs
        rows = []
        for word in words:
            ref = refs.get(word)
            if ref is not None:
                rows.append(f"{ref.block_id}\t{ref.i1}\t{ref.i2}\t{chr(ref.alpha)}")
            elif len(word) == 1:
                rows.append(f"{n}\t-\t-\t{chr(word[0])}")
            else:
                raise InvariantViolation(f"step {n} word {word!r} has no tuple form", {"step": n})
        (self.out_dir / f"maws.step{n}.tuples.tsv").write_text("".join(r + "\n" for r in rows),
                                                              encoding="latin-1")


def main(config: RunConfig, settings: Optional[EngineSettings] = None) -> int:
    """Run the pipeline for a validated configuration and return the exit status"""
    settings = settings or EngineSettings()
    try:
        alphabet = Alphabet.from_preset(config.alphabet, separator=config.separator,
                                        text_separator=settings.text_separator,
                                        dna_separator=settings.dna_separator)
        survey = survey_inputs(config, alphabet)
        logger.info("Run configured", blocks=survey.blocks, ell=config.ell, max_in=survey.max_in,
                    alphabet=config.alphabet, out_dir=str(config.out_dir))

        writer = StepWriter(config.out_dir, alphabet, config.emit_tuples)
        pipeline = MawPipeline(alphabet, config.ell, settings=settings, tracer=LangSmithMonitor())
        writer.pipeline = pipeline
        reports = pipeline.run(iter_blocks(config, alphabet, survey), writer)

        stats = {
            "steps": [r.model_dump(by_alias=True) for r in reports],
            "totals": pipeline.totals(),
        }
        stats_path = config.resolved_stats_path
        stats_path.parent.mkdir(parents=True, exist_ok=True)
        stats_path.write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
        return 0

    except Exception as e:
        status, diagnostic = error_handler.handle(e)
        print(f"error: {diagnostic}", file=sys.stderr)
        return status


def cli(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    try:
        settings = EngineSettings.from_env()
        config, args = parse_config(argv)
        if args.log_level:
            try:
                settings = EngineSettings(**{**settings.model_dump(), "log_level": args.log_level})
            except ValidationError:
                raise ConfigError(f"invalid --log-level {args.log_level!r}")
    except Exception as e:
        status, diagnostic = error_handler.handle(e)
        print(f"error: {diagnostic}", file=sys.stderr)
        return status

    configure_logging(settings.log_level, settings.log_format)
    maw_logger.log_stage_event("configure", run_id="-", step=0,
                               data={"inputs": [str(p) for p in config.inputs], "ell": config.ell,
                                     "split": config.split, "format": config.input_format})
    return main(config, settings)


if __name__ == "__main__":
    sys.exit(cli())
