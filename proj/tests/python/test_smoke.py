import math
import random

import pytest

import podforge


def oracle_distinct(tokens, n, window):
    spans = [(0, len(tokens))] if len(tokens) <= window else [
        (o, window) for o in range(len(tokens) - window + 1)]
    ratios = []
    for off, length in spans:
        grams = [tuple(tokens[i:i + n]) for i in range(off, off + length - n + 1)]
        ratios.append(len(set(grams)) / len(grams) if grams else 0.0)
    return sum(ratios) / len(ratios)


def test_tokenize_lowercases_and_drops_punctuation():
    assert podforge.tokenize("Hello, World!  Cats purr.") == ["hello", "world", "cats", "purr"]


def test_distinct_and_mattr_match_oracle():
    rng = random.Random(5)
    for _ in range(20):
        tokens = [f"w{rng.randrange(12)}" for _ in range(rng.randrange(5, 120))]
        for n in (1, 2):
            assert podforge.distinct_n(tokens, n, window=30) == pytest.approx(
                oracle_distinct(tokens, n, 30), abs=1e-9)
        assert podforge.mattr(tokens, window=30) == podforge.distinct_n(tokens, 1, window=30)


def test_info_density_is_entropy_of_content_words():
    tokens = ["the", "cat", "dog", "cat", "bird", "of"]
    counts = {"cat": 2, "dog": 1, "bird": 1}
    expected = -sum(c / 4 * math.log2(c / 4) for c in counts.values())
    assert podforge.info_density(tokens) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(podforge.AllStopwordsError):
        podforge.info_density(["the", "of", "and"])


def test_semantic_div_with_python_embedder():
    tokens = ["x"] * 10 + ["y"] * 10
    r = podforge.semantic_div(tokens, window=10, embed=lambda t: [1.0, 0.0] if t.startswith("x") else [0.0, 1.0])
    assert r == {"value": 1.0, "degenerate": False, "window_count": 2}
    assert podforge.semantic_div(["a"] * 20, window=10)["value"] == 0.0


def test_compute_metrics_has_all_columns():
    report = podforge.compute_metrics("cats purr when content and sometimes when stressed " * 30)
    for key in ("distinct_1", "distinct_2", "info_dens", "semantic_div", "mattr"):
        assert key in report


def test_judge_pair_cancels_position_bias():
    def judge(prompt):
        forward = prompt.find("ALPHA") < prompt.find("BETA")
        v = 2 if forward else 0  # s = 1, b = 1
        dims = ["coherence", "engagingness", "diversity", "informativeness", "speaker_diversity", "overall"]
        return '{"evidence": "e", "scores": {%s}}' % ", ".join(f'"{d}": {v}' for d in dims)

    verdict = podforge.judge_pair("ALPHA text", "BETA text", judge=judge)
    assert set(verdict["final"].values()) == {1.0}
    assert set(podforge.judge_pair("same", "same")["final"].values()) == {0.0}


def test_judge_out_of_range_raises():
    with pytest.raises(podforge.RangeError):
        podforge.judge_pair("a", "b", judge=lambda p: '{"evidence": "e", "scores": {"coherence": 9}}')


def test_dedup_keeps_first_of_identical_captions():
    kept = podforge.dedup_captions(["deep male", "deep male", "bright female"], threshold=0.9)
    assert kept == [0, 2]


def test_mix_places_lines_with_gap():
    script = podforge.mock_script("Why do cats purr?", n_guests=1)
    audio = {"script": script, "items": [
        {"kind": "Speech", "text": line["text"], "speaker": line["speaker"], "layer": "Foreground", "gain_db": 0.0}
        for line in script["lines"]], "assignment": {}, "warnings": []}
    clips = {i: [0.1] * 240 for i in range(len(script["lines"]))}
    out = podforge.mix(audio, clips, gap_ms=10)
    n = len(script["lines"])
    assert len(out["samples"]) == 240 * n + 240 * (n - 1)
    assert not out["limited"]


def test_mock_script_opens_with_host():
    script = podforge.mock_script("What if the Moon had never formed?", category="Counterfactual", n_guests=2)
    assert script["lines"][0]["speaker"] == script["host_name"]
    assert len(script["guests"]) == 2
