"""
Pipeline
Incremental driver: stream blocks, keep only the current block and the current MAW
set resident, re-read earlier blocks from a block store, emit every step's set.
"""

import shutil
import tempfile
import time
import uuid
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional

import structlog
from pydantic import BaseModel, ConfigDict, Field

from .errors import BlockMismatch, BlockStoreError, ConfigError, InvariantViolation
from .logger import maw_logger
from .maw_single import SingleMawOutput, compute_maws
from .merge import merge_step_detailed
from .settings import EngineSettings
from .suffix_tree import build
from .text_model import Alphabet, Block, Corpus, MawSet, MawTupleRef, MawWord, materialize

logger = structlog.get_logger()

Sink = Callable[[int, List[MawWord]], None]


class BlockStore(ABC):
    """Read blocks back by ordinal; repeated reads must be supported"""

    def __init__(self):
        self.reads = 0

    @abstractmethod
    def write(self, block: Block) -> None:
        ...

    @abstractmethod
    def read(self, block_id: int) -> Block:
        ...

    @abstractmethod
    def __len__(self) -> int:
        ...

    def close(self) -> None:
        pass


class MemoryBlockStore(BlockStore):
    def __init__(self):
        super().__init__()
        self._blocks: Dict[int, Block] = {}

    def write(self, block: Block) -> None:
        self._blocks[block.id] = block

    def read(self, block_id: int) -> Block:
        self.reads += 1
        try:
            return self._blocks[block_id]
        except KeyError:
            raise BlockStoreError(f"block {block_id} was never stored")

    def __len__(self) -> int:
        return len(self._blocks)


class SpoolBlockStore(BlockStore):
    """One file per block under a spool directory"""

    def __init__(self, directory: Optional[str] = None):
        super().__init__()
        self._owned = directory is None
        self.directory = Path(directory or tempfile.mkdtemp(prefix="maw-spool-"))
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise BlockStoreError(f"cannot create spool directory {self.directory}: {e}")
        self._count = 0

    def _path(self, block_id: int) -> Path:
        return self.directory / f"block.{block_id:06d}.seq"

    def write(self, block: Block) -> None:
        try:
            self._path(block.id).write_bytes(block.data)
        except OSError as e:
            raise BlockStoreError(f"cannot spool block {block.id}: {e}")
        self._count = max(self._count, block.id)

    def read(self, block_id: int) -> Block:
        self.reads += 1
        try:
            data = self._path(block_id).read_bytes()
        except OSError as e:
            raise BlockStoreError(f"cannot read spooled block {block_id}: {e}")
        return Block(id=block_id, data=data)

    def __len__(self) -> int:
        return self._count

    def close(self) -> None:
        if self._owned:
            shutil.rmtree(self.directory, ignore_errors=True)


class StepReport(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(alias="N")
    set_size: int = Field(alias="setSize")
    total_length: int = Field(alias="totalLength")
    wall_time_ms: float = Field(alias="wallTimeMs")
    peak_elements: int = Field(alias="peakElements")


class SpaceMonitor:
    """
    Resident-element accounting sampled at stage boundaries: block bytes plus
    tree nodes plus set elements (explicit words count their length, tuples one)
    """

    def __init__(self, run_id: str = ""):
        self.run_id = run_id
        self.peak = 0
        self.step_peak = 0
        self.step = 0
        self.samples = 0

    def start_step(self, step: int) -> None:
        self.step = step
        self.step_peak = 0

    def sample(self, stage: str, block_bytes: int = 0, tree_nodes: int = 0,
               set_elements: int = 0) -> int:
        elements = block_bytes + tree_nodes + set_elements
        self.samples += 1
        if elements > self.step_peak:
            self.step_peak = elements
        if elements > self.peak:
            self.peak = elements
        maw_logger.log_space_sample(self.run_id, self.step, stage, elements, self.peak)
        return elements


@dataclass
class PipelineState:
    store: BlockStore
    monitor: SpaceMonitor
    step_index: int = 0
    current_set: MawSet = field(default_factory=MawSet)
    seen_letters: FrozenSet[int] = frozenset()
    max_in: int = 0
    max_out: int = 0
    block_output: Optional[SingleMawOutput] = None
    # tuple form of current_set; None for letters
    current_refs: Dict[MawWord, Optional[MawTupleRef]] = field(default_factory=dict)
    reports: List[StepReport] = field(default_factory=list)


def peak_space_estimate(state: PipelineState) -> int:
    return state.monitor.peak


class MawPipeline:
    """
    Orchestrates the per-step stages

    Step 1 computes M^ℓ(y1) directly; every later step merges the previous set
    with the new block. The sink sees each step's canonical list before the next
    block is touched.
    """

    def __init__(self, alphabet: Alphabet, ell: int, settings: Optional[EngineSettings] = None,
                 store: Optional[BlockStore] = None, tracer=None, run_id: Optional[str] = None):
        if ell < 1:
            raise ConfigError("ell must be >= 1")
        self.alphabet = alphabet
        self.ell = ell
        self.settings = settings or EngineSettings()
        self.run_id = run_id or str(uuid.uuid4())
        self._owns_store = store is None
        store = store if store is not None else SpoolBlockStore(self.settings.spool_dir)
        self.state = PipelineState(store=store, monitor=SpaceMonitor(self.run_id))
        self.tracer = tracer
        self.total_wall_time_ms = 0.0

    def step(self, block: Block, sink: Optional[Sink] = None) -> StepReport:
        state = self.state
        n = state.step_index + 1
        if block.id != n:
            raise BlockMismatch(f"expected block {n}, got block {block.id}")

        started = time.perf_counter()
        state.monitor.start_step(n)
        state.store.write(block)

        if n == 1:
            tree = build(block.data)
            output = compute_maws(block, self.ell, self.alphabet, tree=tree)
            state.monitor.sample("single_block", block_bytes=len(block.data),
                                 tree_nodes=tree.node_count, set_elements=len(output))
            del tree
            current = output.materialize(block)
            refs = {materialize(t, block): t for t in output.tuples}
            refs.update((bytes((c,)), None) for c in output.absent_letters)
        else:
            outcome = merge_step_detailed(state.current_set, block, state.store, self.ell,
                                          state.seen_letters, self.alphabet, monitor=state.monitor,
                                          check_patterns=self.settings.check_patterns,
                                          prev_refs=state.current_refs)
            current, output, refs = outcome.merged, outcome.new_output, outcome.refs

        state.monitor.sample("emit", block_bytes=len(block.data), set_elements=current.total_length)
        if self.settings.verify and not current.is_antifactorial():
            raise InvariantViolation(f"step {n} output is not antifactorial", {"step": n})

        ordered = current.ordered(self.alphabet)
        state.current_set = current
        state.block_output = output
        state.current_refs = refs
        state.seen_letters = state.seen_letters | frozenset(block.data)
        state.step_index = n
        state.max_in = max(state.max_in, len(block.data))
        state.max_out = max(state.max_out, current.total_length)

        report = StepReport(
            N=n,
            setSize=len(current),
            totalLength=current.total_length,
            wallTimeMs=round((time.perf_counter() - started) * 1000, 3),
            peakElements=state.monitor.step_peak,
        )
        if len(ordered) != report.set_size:
            raise InvariantViolation("step report disagrees with the emitted set", {"step": n})
        state.reports.append(report)
        maw_logger.log_step_report(self.run_id, report)

        if sink is not None:
            sink(n, ordered)
        return report

    def run(self, blocks: Iterable[Block], sink: Optional[Sink] = None) -> List[StepReport]:
        trace = None
        if self.tracer:
            trace = self.tracer.create_run_trace(
                self.run_id, {"ell": self.ell, "alphabet": self.alphabet.letters.decode("latin-1")})
        started = time.perf_counter()
        error = None
        try:
            for block in blocks:
                report = self.step(block, sink)
                if self.tracer:
                    self.tracer.trace_step(trace, report)
            return list(self.state.reports)
        except Exception as e:
            error = e
            raise
        finally:
            total_ms = round((time.perf_counter() - started) * 1000, 3)
            self.total_wall_time_ms = total_ms
            state = self.state
            maw_logger.log_run_summary(self.run_id, state.step_index, self.ell, state.max_in,
                                       state.max_out, state.monitor.peak, total_ms,
                                       outcome="completed" if error is None else "failed")
            if self.tracer:
                self.tracer.finalize_run_trace(trace, self.totals(),
                                               error=None if error is None else str(error))
            if self._owns_store:
                state.store.close()

    def totals(self) -> Dict[str, float]:
        state = self.state
        return {
            "steps": state.step_index,
            "ell": self.ell,
            "maxIn": state.max_in,
            "maxOut": state.max_out,
            "peakElements": state.monitor.peak,
            "totalWallTimeMs": self.total_wall_time_ms,
        }


def run(corpus: Corpus, ell: int, sink: Optional[Sink] = None,
        settings: Optional[EngineSettings] = None, store: Optional[BlockStore] = None,
        tracer=None) -> List[StepReport]:
    """Compute and emit M^ℓ(y1#...#yN) for N = 1..k"""
    pipeline = MawPipeline(corpus.alphabet, ell, settings=settings, store=store, tracer=tracer)
    return pipeline.run(corpus.blocks, sink)
