"""
Space/Time Tradeoff Simulation
Runs the pipeline over random DNA split into k blocks for several ℓ and reports
elapsed time and instrumented peak per (k, ℓ)

Environment:
    MAWS_SIM_LENGTH   text length in letters (default 20000)
    MAWS_SIM_ELL      smallest ℓ; ℓ, ℓ+1 and ℓ+2 are run (default 5)
    MAWS_SIM_SEED     numpy seed (default 0)
"""

import json
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, List

import numpy as np
import structlog

# Test imports
import sys
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from stages.pipeline import MawPipeline, MemoryBlockStore
from stages.text_model import Alphabet, Block, split_into_blocks

logger = structlog.get_logger()


@dataclass
class TradeoffScenario:
    """One (k, ℓ) cell of the grid"""
    k: int
    ell: int
    length: int


@dataclass
class TradeoffResult:
    k: int
    ell: int
    elapsed_ms: float
    peak_elements: int
    max_out: int
    final_set_size: int
    step_times_ms: List[float] = field(default_factory=list)


def random_dna(length: int, seed: int) -> bytes:
    rng = np.random.default_rng(seed)
    return np.frombuffer(b"ACGT", dtype=np.uint8)[rng.integers(0, 4, size=length)].tobytes()


class TradeoffSimulator:
    """Runs every scenario over the same text"""

    def __init__(self, text: bytes):
        self.text = text
        self.alphabet = Alphabet.dna()
        self.results: List[TradeoffResult] = []

    def run_scenario(self, scenario: TradeoffScenario) -> TradeoffResult:
        corpus = split_into_blocks(Block(id=1, data=self.text[:scenario.length]), scenario.k, self.alphabet)
        pipeline = MawPipeline(self.alphabet, scenario.ell, store=MemoryBlockStore())

        started = time.perf_counter()
        reports = pipeline.run(corpus.blocks)
        elapsed = (time.perf_counter() - started) * 1000

        totals = pipeline.totals()
        result = TradeoffResult(
            k=scenario.k,
            ell=scenario.ell,
            elapsed_ms=round(elapsed, 1),
            peak_elements=totals["peakElements"],
            max_out=totals["maxOut"],
            final_set_size=reports[-1].set_size,
            step_times_ms=[r.wall_time_ms for r in reports],
        )
        self.results.append(result)
        logger.info("Scenario completed", k=scenario.k, ell=scenario.ell,
                    elapsed_ms=result.elapsed_ms, peak_elements=result.peak_elements)
        return result

    def run_all(self, scenarios: List[TradeoffScenario]) -> Dict[str, Any]:
        for scenario in scenarios:
            self.run_scenario(scenario)
        return {
            "length": len(self.text),
            "results": [asdict(r) for r in self.results],
            "timestamp": datetime.now().isoformat(),
        }

    def generate_report(self, results: Dict[str, Any]) -> str:
        """Human-readable table plus the expected trend checks"""
        report = f"""
MAW Engine - Space/Time Tradeoff Report
=======================================

Generated: {results['timestamp']}
Text length: {results['length']}

   k    ell   elapsed_ms   peak_elements   max_out
"""
        for r in self.results:
            report += f"{r.k:>4} {r.ell:>6} {r.elapsed_ms:>12.1f} {r.peak_elements:>15} {r.max_out:>9}\n"

        report += "\nTRENDS:\n"
        for ell in sorted({r.ell for r in self.results}):
            row = sorted((r for r in self.results if r.ell == ell), key=lambda r: r.k)
            peaks_fall = all(a.peak_elements >= b.peak_elements for a, b in zip(row, row[1:]))
            icon = "✅" if peaks_fall else "❌"
            report += f"{icon} ell={ell}: peak falls as k grows ({row[0].peak_elements} -> {row[-1].peak_elements})\n"
        return report


def create_scenarios(length: int, ell0: int) -> List[TradeoffScenario]:
    return [TradeoffScenario(k=k, ell=ell, length=length)
            for ell in (ell0, ell0 + 1, ell0 + 2)
            for k in (2, 4, 6, 8, 10)]


def main():
    length = int(os.getenv("MAWS_SIM_LENGTH", "20000"))
    ell0 = int(os.getenv("MAWS_SIM_ELL", "5"))
    seed = int(os.getenv("MAWS_SIM_SEED", "0"))

    print("MAW Engine - Space/Time Tradeoff Simulation")
    print("===========================================")
    print(f"Random DNA, {length} letters, seed {seed}")
    print()

    simulator = TradeoffSimulator(random_dna(length, seed))
    results = simulator.run_all(create_scenarios(length, ell0))
    report = simulator.generate_report(results)
    print(report)

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    results_file = f"tradeoff_results_{timestamp}.json"
    with open(results_file, "w") as f:
        json.dump(results, f, indent=2)
    print(f"Results saved to: {results_file}")
    return results


if __name__ == "__main__":
    main()
