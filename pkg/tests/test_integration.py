"""
Integration Tests for the MAW Antidictionary Engine
End-to-end pipeline runs against the brute-force oracle, output properties,
the command line and the space tradeoff
"""

import gc
import json
import random

import pytest

# Test imports
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import stages.pipeline as pipeline_module
from main import cli, main, parse_config
from stages.errors import BlockMismatch, ConfigError, InvariantViolation
from stages.maw_single import compute_maws
from stages.merge import merge_step_detailed
from stages.oracle import oracle_concat
from stages.pipeline import MawPipeline, MemoryBlockStore, SpoolBlockStore, peak_space_estimate, run
from stages.settings import EngineSettings
from stages.text_model import (
    Alphabet,
    Block,
    Corpus,
    MawSet,
    MawTupleRef,
    materialize,
    read_maw_file,
    split_into_blocks,
)

AB = Alphabet(letters=b"ab")


def random_corpus(rng: random.Random, letters: bytes, k: int, max_len: int) -> Corpus:
    alphabet = Alphabet(letters=letters)
    blocks = tuple(Block(id=i, data=bytes(rng.choice(letters) for _ in range(rng.randint(1, max_len))))
                   for i in range(1, k + 1))
    return Corpus(alphabet=alphabet, blocks=blocks)


def collect(corpus: Corpus, ell: int, **kwargs):
    emitted = {}
    run(corpus, ell, sink=lambda n, words: emitted.__setitem__(n, words),
        store=kwargs.pop("store", MemoryBlockStore()), **kwargs)
    return emitted


class TestPipelineAgainstOracle:
    """Test every emitted step against brute force on the concatenation"""

    def test_fixture_corpus(self):
        """Test the two-block fixture step by step"""
        corpus = Corpus(alphabet=AB, blocks=(Block(id=1, data=b"abaab"), Block(id=2, data=b"bbaaab")))
        emitted = collect(corpus, 5)
        assert emitted[1] == [b"bb", b"aaa", b"bab", b"aaba"]
        assert set(emitted[2]) == {b"abb", b"bab", b"bbb", b"aaba", b"aaaa", b"abaaa", b"bbaab"}

    def test_random_corpora(self):
        """Test random corpora for every prefix y1#...#yN"""
        rng = random.Random(2024)
        for _ in range(400):
            letters = rng.choice([b"ab", b"abc", b"ACGT"])
            corpus = random_corpus(rng, letters, rng.randint(1, 5), 40)
            ell = rng.randint(2, 8)
            emitted = collect(corpus, ell)
            for n in range(1, corpus.k + 1):
                expected = oracle_concat(corpus.prefix_texts(n), ell, corpus.alphabet)
                assert MawSet.from_words(emitted[n]) == expected, (corpus.prefix_texts(n), ell)

    def test_canonical_order(self):
        """Test emitted lists are sorted by length, then alphabet order"""
        rng = random.Random(5)
        corpus = random_corpus(rng, b"ACGT", 3, 40)
        for words in collect(corpus, 6).values():
            keys = [(len(w), [corpus.alphabet.rank(c) for c in w]) for w in words]
            assert keys == sorted(keys)

    def test_single_block(self):
        """Test k = 1 equals the single-block MAWs"""
        block = Block(id=1, data=b"abba")
        emitted = collect(Corpus(alphabet=AB, blocks=(block,)), 3)
        assert set(emitted[1]) == {b"aa", b"aba", b"bbb", b"bab"}

    def test_spooled_store(self, tmp_path):
        """Test a spool directory holds one file per block"""
        rng = random.Random(3)
        corpus = random_corpus(rng, b"ab", 3, 10)
        store = SpoolBlockStore(str(tmp_path / "spool"))
        emitted = collect(corpus, 4, store=store)
        assert len(store) == 3
        assert sorted(p.name for p in (tmp_path / "spool").iterdir())[0] == "block.000001.seq"
        assert MawSet.from_words(emitted[3]) == oracle_concat(corpus.prefix_texts(3), 4, corpus.alphabet)

    def test_blocks_out_of_order(self):
        """Test the pipeline refuses a block with the wrong ordinal"""
        pipeline = MawPipeline(AB, 3, store=MemoryBlockStore())
        with pytest.raises(BlockMismatch):
            pipeline.step(Block(id=2, data=b"ab"))

    def test_bad_ell(self):
        """Test ℓ < 1 is refused up front"""
        with pytest.raises(ConfigError):
            MawPipeline(AB, 0)

    def test_earlier_blocks_read_one_at_a_time(self, mocker):
        """Test earlier blocks come back from the store and never the current one"""
        corpus = Corpus(alphabet=AB, blocks=(Block(id=1, data=b"abaab"), Block(id=2, data=b"bbaaab"),
                                             Block(id=3, data=b"ab")))
        store = MemoryBlockStore()
        spy = mocker.spy(store, "read")
        collect(corpus, 5, store=store)
        read_ids = [c.args[0] for c in spy.call_args_list]
        assert read_ids
        assert set(read_ids) <= {1, 2}
        assert spy.call_count == store.reads

    def test_verify_mode(self):
        """Test the antifactoriality self-check runs without complaint on correct output"""
        rng = random.Random(9)
        corpus = random_corpus(rng, b"abc", 3, 12)
        emitted = collect(corpus, 5, settings=EngineSettings(verify=True))
        assert len(emitted) == 3

    def test_reports(self):
        """Test step reports agree with the emitted sets"""
        corpus = Corpus(alphabet=AB, blocks=(Block(id=1, data=b"abaab"), Block(id=2, data=b"bbaaab")))
        emitted = {}
        pipeline = MawPipeline(AB, 5, store=MemoryBlockStore())
        reports = pipeline.run(corpus.blocks, lambda n, words: emitted.__setitem__(n, words))
        assert [r.n for r in reports] == [1, 2]
        assert reports[1].set_size == len(emitted[2]) == 7
        assert reports[1].total_length == sum(map(len, emitted[2]))
        assert reports[1].model_dump(by_alias=True)["setSize"] == 7
        totals = pipeline.totals()
        assert totals["steps"] == 2
        assert totals["maxIn"] == 6
        assert totals["peakElements"] >= max(r.peak_elements for r in reports)
        assert peak_space_estimate(pipeline.state) == totals["peakElements"]

    def test_tracer_receives_steps(self, mocker):
        """Test the tracer sees one step per block and a final summary"""
        tracer = mocker.Mock()
        corpus = Corpus(alphabet=AB, blocks=(Block(id=1, data=b"ab"), Block(id=2, data=b"ba")))
        run(corpus, 3, store=MemoryBlockStore(), tracer=tracer)
        tracer.create_run_trace.assert_called_once()
        assert tracer.trace_step.call_count == 2
        totals = tracer.finalize_run_trace.call_args.args[1]
        assert totals["steps"] == 2
        assert tracer.finalize_run_trace.call_args.kwargs["error"] is None

    def test_deterministic(self):
        """Test two runs over the same input emit identical lists"""
        rng = random.Random(21)
        corpus = random_corpus(rng, b"ACGT", 4, 30)
        assert collect(corpus, 6) == collect(corpus, 6)


class TestOutputProperties:
    """Test structural properties of every merge on random inputs"""

    @staticmethod
    def _factors(text: bytes, ell: int):
        return {text[i:j] for i in range(len(text)) for j in range(i + 1, min(i + ell, len(text)) + 1)}

    def test_properties(self):
        """Test antifactoriality, the aub shape, disjointness and reduced-set witnesses"""
        rng = random.Random(77)
        for _ in range(150):
            corpus = random_corpus(rng, rng.choice([b"ab", b"abc"]), rng.randint(2, 4), 10)
            alphabet = corpus.alphabet
            ell = rng.randint(2, 6)
            store = MemoryBlockStore()
            first = corpus.blocks[0]
            store.write(first)
            current = compute_maws(first, ell, alphabet).materialize(first)
            seen = frozenset(first.data)

            for block in corpus.blocks[1:]:
                outcome = merge_step_detailed(current, block, store, ell, seen, alphabet)
                store.write(block)
                text = bytes((alphabet.separator,)).join(corpus.prefix_texts(block.id))
                present = self._factors(text, ell)

                merged = outcome.merged
                assert merged.is_antifactorial()
                assert not (outcome.case1.kept.words & outcome.case2)
                for w in merged:
                    assert len(w) <= ell
                    assert w not in present
                    if len(w) > 1:
                        assert w[:-1] in present and w[1:] in present

                r_prev = outcome.case1.reduced.r_prev.words
                r_new = set(outcome.case1.reduced.new_words(block))
                for w in outcome.case2:
                    u_len = len(w) - 2
                    forward = any(w.startswith(r1) and w.endswith(r2) and u_len >= max(len(r1), len(r2)) - 1
                                  for r1 in r_new for r2 in r_prev)
                    backward = any(w.startswith(r1) and w.endswith(r2) and u_len >= max(len(r1), len(r2)) - 1
                                   for r1 in r_prev for r2 in r_new)
                    assert forward or backward, w

                current = merged
                seen = seen | frozenset(block.data)

    def test_tuple_form_of_every_step(self):
        """Test the pipeline's tuples spell exactly each step's set"""
        rng = random.Random(31)
        for _ in range(150):
            corpus = random_corpus(rng, rng.choice([b"ab", b"abc", b"ACGT"]), rng.randint(1, 5), 20)
            ell = rng.randint(1, 7)
            pipeline = MawPipeline(corpus.alphabet, ell, store=MemoryBlockStore())

            def check(n, words):
                refs = pipeline.state.current_refs
                assert set(refs) == set(words)
                for word, ref in refs.items():
                    if ref is None:
                        assert len(word) == 1
                    else:
                        assert ref.block_id <= n
                        assert materialize(ref, corpus.blocks[ref.block_id - 1]) == word

            pipeline.run(corpus.blocks, check)


class TestCommandLine:
    """Test the maws command line end to end"""

    def test_round_trip(self, tmp_path):
        """Test step files and stats for two raw inputs"""
        (tmp_path / "y1.txt").write_bytes(b"abaab\n")
        (tmp_path / "y2.txt").write_bytes(b"bbaaab\n")
        out = tmp_path / "out"
        status = cli(["--input", str(tmp_path / "y1.txt"), str(tmp_path / "y2.txt"),
                      "--alphabet", "custom:ab", "--ell", "5", "--out", str(out)])
        assert status == 0
        assert (out / "maws.step1.txt").read_bytes() == b"bb\naaa\nbab\naaba\n"
        assert read_maw_file(out / "maws.step2.txt") == oracle_concat([b"abaab", b"bbaaab"], 5, AB)

        stats = json.loads((out / "stats.json").read_text())
        assert [s["setSize"] for s in stats["steps"]] == [4, 7]
        assert stats["totals"]["steps"] == 2
        assert stats["totals"]["ell"] == 5

    def test_split(self, tmp_path):
        """Test --split produces one step per block"""
        (tmp_path / "y.txt").write_bytes(b"abaabbbaaab")
        out = tmp_path / "out"
        assert cli(["--input", str(tmp_path / "y.txt"), "--alphabet", "custom:ab", "--ell", "4",
                    "--split", "3", "--out", str(out)]) == 0
        corpus = split_into_blocks(Block(id=1, data=b"abaabbbaaab"), 3, AB)
        for n in (1, 2, 3):
            assert read_maw_file(out / f"maws.step{n}.txt") == oracle_concat(corpus.prefix_texts(n), 4, AB)

    def test_emit_tuples(self, tmp_path):
        """Test each tuple file spells exactly the words of its step file, line by line"""
        texts = [b"abaab", b"bbaaab", b"aaa", b"babba"]
        for i, text in enumerate(texts, start=1):
            (tmp_path / f"y{i}.txt").write_bytes(text)
        out = tmp_path / "out"
        assert cli(["--input", *(str(tmp_path / f"y{i}.txt") for i in range(1, 5)),
                    "--alphabet", "custom:ab", "--ell", "5", "--out", str(out), "--emit-tuples"]) == 0

        blocks = {i: Block(id=i, data=text) for i, text in enumerate(texts, start=1)}
        for n in range(1, 5):
            words = (out / f"maws.step{n}.txt").read_bytes().splitlines()
            rows = [line.split("\t") for line in (out / f"maws.step{n}.tuples.tsv").read_text().splitlines()]
            spelled = []
            for block_id, i1, i2, alpha in rows:
                assert 1 <= int(block_id) <= n
                if i1 == "-":
                    spelled.append(alpha.encode())
                else:
                    ref = MawTupleRef(int(block_id), int(i1), int(i2), ord(alpha))
                    spelled.append(materialize(ref, blocks[ref.block_id]))
            assert spelled == words
        assert read_maw_file(out / "maws.step2.txt") == oracle_concat(texts[:2], 5, AB)

    @pytest.mark.parametrize("layout", ["files", "fasta", "split"])
    def test_one_input_block_resident_per_step(self, tmp_path, mocker, monkeypatch, layout):
        """Test the command line keeps no earlier block in memory while merging"""
        monkeypatch.delenv("LANGSMITH_API_KEY", raising=False)
        rng = random.Random(29)
        texts = [bytes(rng.choice(b"ACGT") for _ in range(30)) for _ in range(6)]
        if layout == "files":
            for i, text in enumerate(texts, start=1):
                (tmp_path / f"y{i}.txt").write_bytes(text)
            args = ["--input", *(str(tmp_path / f"y{i}.txt") for i in range(1, 7))]
        elif layout == "fasta":
            (tmp_path / "g.fa").write_bytes(b"".join(b">r%d\n%s\n" % (i, t) for i, t in enumerate(texts)))
            args = ["--input", str(tmp_path / "g.fa"), "--format", "fasta"]
        else:
            (tmp_path / "g.txt").write_bytes(b"".join(texts))
            args = ["--input", str(tmp_path / "g.txt"), "--split", "6"]
        wanted = set(texts)

        resident = {}
        real_merge = pipeline_module.merge_step_detailed

        def counting_merge(prev_set, new_block, *rest, **kwargs):
            gc.collect()
            resident[new_block.id] = sum(1 for o in gc.get_objects()
                                         if isinstance(o, Block) and o.data in wanted)
            return real_merge(prev_set, new_block, *rest, **kwargs)

        mocker.patch("stages.pipeline.merge_step_detailed", side_effect=counting_merge)
        config, _ = parse_config([*args, "--ell", "4", "--out", str(tmp_path / "out")])
        assert main(config, EngineSettings(spool_dir=str(tmp_path / "spool"))) == 0
        assert sorted(resident) == [2, 3, 4, 5, 6]
        assert max(resident.values()) <= 2

    def test_fasta_input(self, tmp_path):
        """Test FASTA records become blocks"""
        (tmp_path / "g.fa").write_bytes(b">chr1\nACGTAC\n>chr2\nGGTA\n")
        out = tmp_path / "out"
        assert cli(["--input", str(tmp_path / "g.fa"), "--format", "fasta", "--ell", "4",
                    "--out", str(out)]) == 0
        expected = oracle_concat([b"ACGTAC", b"GGTA"], 4, Alphabet.dna())
        assert read_maw_file(out / "maws.step2.txt") == expected

    def test_fasta_split(self, tmp_path):
        """Test a multi-line FASTA record is cut into --split blocks"""
        (tmp_path / "g.fa").write_bytes(b">chr1\nACGTA\nCGGTA\nTTG\n")
        out = tmp_path / "out"
        assert cli(["--input", str(tmp_path / "g.fa"), "--format", "fasta", "--ell", "4",
                    "--split", "3", "--out", str(out)]) == 0
        corpus = split_into_blocks(Block(id=1, data=b"ACGTACGGTATTG"), 3, Alphabet.dna())
        for n in (1, 2, 3):
            expected = oracle_concat(corpus.prefix_texts(n), 4, Alphabet.dna())
            assert read_maw_file(out / f"maws.step{n}.txt") == expected

    def test_fasta_split_needs_one_record(self, tmp_path, capsys):
        """Test --split on a multi-record FASTA fails before any output"""
        (tmp_path / "g.fa").write_bytes(b">chr1\nACGT\n>chr2\nGGTA\n")
        out = tmp_path / "out"
        status = cli(["--input", str(tmp_path / "g.fa"), "--format", "fasta", "--ell", "3",
                      "--split", "2", "--out", str(out)])
        assert status == 1
        assert "invalid block count" in capsys.readouterr().err
        assert not (out / "maws.step1.txt").exists()

    def test_bad_ell(self, tmp_path, capsys):
        """Test ℓ = 0 exits with status 1"""
        (tmp_path / "y.txt").write_bytes(b"ab")
        status = cli(["--input", str(tmp_path / "y.txt"), "--ell", "0", "--out", str(tmp_path / "out")])
        assert status == 1
        assert "ell must be >= 1" in capsys.readouterr().err

    def test_malformed_fasta(self, tmp_path, capsys):
        """Test FASTA without a header exits with status 1"""
        (tmp_path / "g.fa").write_bytes(b"ACGT\n")
        status = cli(["--input", str(tmp_path / "g.fa"), "--format", "fasta", "--ell", "3",
                      "--out", str(tmp_path / "out")])
        assert status == 1
        assert "not valid FASTA" in capsys.readouterr().err

    def test_byte_outside_alphabet(self, tmp_path, capsys):
        """Test the offending byte and position are reported"""
        (tmp_path / "y.txt").write_bytes(b"abxab")
        status = cli(["--input", str(tmp_path / "y.txt"), "--alphabet", "custom:ab", "--ell", "3",
                      "--out", str(tmp_path / "out")])
        assert status == 1
        assert "position 2" in capsys.readouterr().err

    def test_missing_input_file(self, tmp_path, capsys):
        """Test unreadable inputs are configuration errors"""
        status = cli(["--input", str(tmp_path / "nope.txt"), "--ell", "3", "--out", str(tmp_path / "out")])
        assert status == 1
        assert "cannot read" in capsys.readouterr().err

    def test_usage_error(self, capsys):
        """Test a missing required flag exits with status 1"""
        assert cli(["--ell", "3"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_invariant_violation_exit_status(self, tmp_path, mocker):
        """Test self-check failures exit with status 2"""
        (tmp_path / "y.txt").write_bytes(b"abab")
        mocker.patch("stages.pipeline.compute_maws", side_effect=InvariantViolation("forced"))
        status = cli(["--input", str(tmp_path / "y.txt"), "--alphabet", "custom:ab", "--ell", "3",
                      "--out", str(tmp_path / "out")])
        assert status == 2


class TestSpaceTradeoff:
    """Test that more blocks means a smaller instrumented peak"""

    def test_peak_falls_with_block_count(self):
        """Test 12 000 letters of random DNA at ℓ = 5: peak(k=10) <= 0.45 * peak(k=2)"""
        rng = random.Random(1)
        text = bytes(rng.choice(b"ACGT") for _ in range(12_000))
        alphabet = Alphabet.dna()
        peaks = {}
        for k in (2, 10):
            corpus = split_into_blocks(Block(id=1, data=text), k, alphabet)
            pipeline = MawPipeline(alphabet, 5, store=MemoryBlockStore())
            pipeline.run(corpus.blocks)
            peaks[k] = pipeline.totals()["peakElements"]
        assert peaks[10] <= 0.45 * peaks[2]
