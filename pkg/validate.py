"""
Self-Validation Script for the MAW Antidictionary Engine
Checks the hand-verified fixtures and the project layout without pytest
"""

import sys
import os
import traceback
from datetime import datetime

# Add project root to path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))


def test_single_block_fixtures():
    """Test single-block MAWs on the fixture texts"""
    print("🧪 Testing Single-Block MAWs...")

    try:
        from stages.maw_single import compute_maws
        from stages.text_model import Alphabet, Block

        ab = Alphabet(letters=b"ab")
        block = Block(id=1, data=b"abaab")
        got = compute_maws(block, 5, ab).materialize(block).ordered(ab)
        assert got == [b"bb", b"aaa", b"bab", b"aaba"], f"Unexpected M^5(abaab): {got}"
        print("  ✅ M^5(abaab) test passed")

        block = Block(id=1, data=b"abba")
        got = compute_maws(block, 3, ab).materialize(block).words
        assert got == {b"aa", b"aba", b"bbb", b"bab"}, f"Unexpected M^3(abba): {got}"
        print("  ✅ M^3(abba) test passed")

        abc = Alphabet(letters=b"abc")
        block = Block(id=1, data=b"ab")
        got = compute_maws(block, 3, abc).materialize(block).words
        assert got == {b"aa", b"bb", b"ba", b"c"}, f"Unexpected M^3(ab) over abc: {got}"
        print("  ✅ Absent letter test passed")

        return True

    except Exception as e:
        print(f"  ❌ Single-block test failed: {str(e)}")
        print(f"     Traceback: {traceback.format_exc()}")
        return False


def test_merge_fixture():
    """Test the two-block merge against the oracle"""
    print("🧪 Testing Merge Step...")

    try:
        from stages.maw_single import compute_maws
        from stages.merge import merge_step_detailed
        from stages.oracle import oracle_concat
        from stages.pipeline import MemoryBlockStore
        from stages.text_model import Alphabet, Block

        ab = Alphabet(letters=b"ab")
        y1, y2 = Block(id=1, data=b"abaab"), Block(id=2, data=b"bbaaab")
        store = MemoryBlockStore()
        store.write(y1)
        prev = compute_maws(y1, 5, ab).materialize(y1)
        outcome = merge_step_detailed(prev, y2, store, 5, frozenset(y1.data), ab)

        expected = {b"abb", b"bab", b"bbb", b"aaba", b"aaaa", b"abaaa", b"bbaab"}
        assert outcome.merged.words == expected, f"Unexpected merged set: {sorted(outcome.merged)}"
        assert outcome.case2 == {b"abaaa", b"bbaab"}, f"Unexpected case-2 words: {sorted(outcome.case2)}"
        assert outcome.merged == oracle_concat([y1.data, y2.data], 5, ab), "Oracle disagrees"
        print("  ✅ Merge of abaab and bbaaab test passed")

        return True

    except Exception as e:
        print(f"  ❌ Merge test failed: {str(e)}")
        print(f"     Traceback: {traceback.format_exc()}")
        return False


def test_pipeline_randomized():
    """Test a batch of random corpora against the oracle"""
    print("🧪 Testing Pipeline Against Oracle...")

    try:
        import random

        from stages.oracle import oracle_concat
        from stages.pipeline import MemoryBlockStore, run
        from stages.text_model import Alphabet, Block, Corpus, MawSet

        rng = random.Random(0)
        alphabet = Alphabet(letters=b"ACGT")
        for trial in range(50):
            blocks = tuple(Block(id=i, data=bytes(rng.choice(b"ACGT") for _ in range(rng.randint(1, 12))))
                           for i in range(1, rng.randint(2, 4) + 1))
            corpus = Corpus(alphabet=alphabet, blocks=blocks)
            ell = rng.randint(2, 6)
            emitted = {}
            run(corpus, ell, sink=lambda n, words: emitted.__setitem__(n, words), store=MemoryBlockStore())
            for n in range(1, corpus.k + 1):
                expected = oracle_concat(corpus.prefix_texts(n), ell, alphabet)
                assert MawSet.from_words(emitted[n]) == expected, f"Trial {trial} step {n} disagrees"

        print("  ✅ 50 random corpora agree with the oracle")
        return True

    except Exception as e:
        print(f"  ❌ Pipeline test failed: {str(e)}")
        print(f"     Traceback: {traceback.format_exc()}")
        return False


def test_error_handler_structure():
    """Test error handler mappings"""
    print("🧪 Testing Error Handler...")

    try:
        from stages.error_handler import ErrorHandler
        from stages.errors import ByteOutsideAlphabet, ConfigError, InvariantViolation

        handler = ErrorHandler()

        status, message = handler.handle(ByteOutsideAlphabet(4, ord("N")))
        assert status == 1, f"Expected exit 1, got {status}"
        assert "--fasta-policy split" in message, "N bytes should suggest the split policy"
        print("  ✅ Input error mapping test passed")

        assert handler.handle(ConfigError("ell must be >= 1")) == (1, "ell must be >= 1")
        print("  ✅ Config error mapping test passed")

        status, _ = handler.handle(InvariantViolation("forced"))
        assert status == 2, f"Expected exit 2, got {status}"
        print("  ✅ Invariant violation mapping test passed")

        return True

    except Exception as e:
        print(f"  ❌ Error handler test failed: {str(e)}")
        print(f"     Traceback: {traceback.format_exc()}")
        return False


def test_langsmith_monitor_structure():
    """Test the tracing monitor degrades to a no-op without credentials"""
    print("🧪 Testing LangSmith Monitor...")

    try:
        from tracing.langsmith_monitor import LangSmithMonitor

        monitor = LangSmithMonitor()
        assert hasattr(monitor, 'create_run_trace'), "create_run_trace method should exist"
        assert hasattr(monitor, 'trace_step'), "trace_step method should exist"
        assert hasattr(monitor, 'finalize_run_trace'), "finalize_run_trace method should exist"
        if not monitor.enabled:
            assert monitor.create_run_trace("validate", {}) is None, "Disabled monitor should not trace"
        print(f"  ✅ LangSmith monitor test passed (enabled={monitor.enabled})")

        return True

    except Exception as e:
        print(f"  ❌ LangSmith monitor test failed: {str(e)}")
        print(f"     Traceback: {traceback.format_exc()}")
        return False


def test_project_structure():
    """Test overall project structure"""
    print("🧪 Testing Project Structure...")

    required_files = [
        'main.py',
        'requirements.txt',
        'README.md',
        '.env.template',
        'stages/text_model.py',
        'stages/suffix_tree.py',
        'stages/queries.py',
        'stages/maw_single.py',
        'stages/merge.py',
        'stages/pipeline.py',
        'stages/oracle.py',
        'stages/errors.py',
        'stages/error_handler.py',
        'stages/logger.py',
        'stages/settings.py',
        'tracing/langsmith_monitor.py',
        'tests/test_maw_engine.py',
        'tests/test_integration.py',
        'tests/tradeoff_simulation.py'
    ]

    root = os.path.dirname(os.path.abspath(__file__))
    missing_files = [p for p in required_files if not os.path.exists(os.path.join(root, p))]

    if missing_files:
        print(f"  ❌ Missing files: {missing_files}")
        return False

    print("  ✅ All required files are present")
    return True


def run_self_validation():
    """Run all self-validation tests"""
    print("🚀 MAW Antidictionary Engine - Self Validation")
    print("=" * 55)
    print(f"Timestamp: {datetime.now().isoformat()}")
    print()

    tests = [
        ("Project Structure", test_project_structure),
        ("Single-Block MAWs", test_single_block_fixtures),
        ("Merge Step", test_merge_fixture),
        ("Pipeline", test_pipeline_randomized),
        ("Error Handler", test_error_handler_structure),
        ("LangSmith Monitor", test_langsmith_monitor_structure),
    ]

    passed_tests = 0
    failed_tests = 0

    for test_name, test_function in tests:
        try:
            if test_function():
                passed_tests += 1
            else:
                failed_tests += 1
        except Exception as e:
            print(f"❌ {test_name} test crashed: {str(e)}")
            failed_tests += 1
        print()

    print("=" * 55)
    print("📊 VALIDATION SUMMARY")
    print("=" * 55)
    print(f"✅ Passed: {passed_tests}")
    print(f"❌ Failed: {failed_tests}")
    print(f"📈 Success Rate: {(passed_tests / (passed_tests + failed_tests)) * 100:.1f}%")

    if failed_tests == 0:
        print("\n🎉 ALL CHECKS PASSED!")
        print("\n📋 Next Steps:")
        print("1. Run the test suite: pytest tests/")
        print("2. Run the tradeoff simulation: python tests/tradeoff_simulation.py")
        print("3. Compute MAWs: python main.py --input genome.fa --format fasta --ell 12 --split 10")
    else:
        print(f"\n⚠️  {failed_tests} checks failed. Please review the errors above.")
        print("\n🔧 Troubleshooting:")
        print("1. Ensure all dependencies are installed: pip install -r requirements.txt")
        print("2. Check Python version is 3.9+")

    print("\n" + "=" * 55)

    return failed_tests == 0


if __name__ == "__main__":
    success = run_self_validation()
    sys.exit(0 if success else 1)
