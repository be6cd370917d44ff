"""Confusion/accuracy, deletion fidelity, stability, timing, report output."""

import re

import numpy as np
import pytest

from lmmx import (ImportanceMap, LmmParams, confusion_matrix, fidelity,
                  integrated_gradients, pixel_fragility, shapley_sampling, stability,
                  synth_dataset, timing)
from lmmx.metrics import MetricsReport, accuracy_from_confusion, compute_report



def constant_model(margin=10.0):
    """Single-neuron net whose logit gap is constant in the input."""
    params = LmmParams(np.ones(4), np.zeros((4, 1)), np.array([[margin, -margin]]))
    params.temperature = 8.0  # keeps the calibrated confidence away from 1
    return params


def random_ranking_explainer(seed):
    def explain(params, x):
        rng = np.random.default_rng(seed)
        return ImportanceMap(rng.permutation(len(x)).astype(float), "ascending", "random")
    return explain


class TestConfusion:
    def test_perfect_classifier_is_diagonal(self, synth_model):
        params = synth_model["params"]
        train = synth_model["task"]["train"]
        confusion = confusion_matrix(params, train)
        assert confusion.sum() == train.n_samples
        assert accuracy_from_confusion(confusion) >= 0.99

    def test_constant_model_single_column(self):
        data = synth_dataset(2, 10, np.array([[0.2, 0.2], [0.8, 0.8]]), 0.05, seed=0)
        confusion = confusion_matrix(constant_model(), data)
        assert np.all(confusion[:, 1] == 0)
        assert confusion[:, 0].tolist() == [10, 10]

    def test_trace_is_accuracy(self):
        confusion = np.array([[131, 103], [34, 356]])
        assert abs(accuracy_from_confusion(confusion) - 487 / 624) <= 1e-12


class TestFidelity:
    def test_constant_model_equals_confidence(self):
        params = constant_model()
        data = synth_dataset(2, 6, np.array([[0.3, 0.3], [0.7, 0.7]]), 0.05, seed=1)
        expected = 1.0 / (1.0 + np.exp(-2 * 10.0 / params.temperature))
        got = fidelity(params, random_ranking_explainer(0), data, steps=2)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_oracle_beats_random_on_planted_pixel(self):
        # class signal lives in a single pixel; deleting it first must hurt
        rng = np.random.default_rng(2)
        n_pix = 16
        centers = np.full((2, n_pix), 0.4)
        centers[0, 5] = 0.1
        centers[1, 5] = 0.9
        data = synth_dataset(n_pix, 40, centers, 0.03, seed=3)
        scales = np.ones(2 * n_pix)
        w1 = np.zeros((2 * n_pix, 2))
        w1[:, 0] = -np.repeat(centers[0], 2) * np.tile([1.0, -1.0], n_pix)
        w1[:, 1] = -np.repeat(centers[1], 2) * np.tile([1.0, -1.0], n_pix)
        params = LmmParams(scales, w1, np.array([[1.0, -1.0], [-1.0, 1.0]]))

        def oracle(params_, x):
            scores = np.arange(1, n_pix + 1, dtype=float)
            scores[5] = 0.0  # the informative pixel ranks first
            return ImportanceMap(scores, "ascending", "oracle")

        oracle_fid = fidelity(params, oracle, data, steps=n_pix)
        random_fids = [fidelity(params, random_ranking_explainer(s), data, steps=n_pix)
                       for s in range(20)]
        better = sum(oracle_fid < rf for rf in random_fids)
        assert better >= 16
        assert oracle_fid < np.mean(random_fids)

    def test_within_unit_interval(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        for explainer in (lambda p, x: pixel_fragility(p, x),
                          lambda p, x: integrated_gradients(p, x, steps=20),
                          lambda p, x: shapley_sampling(p, x, permutations=20, seed=0)):
            value = fidelity(params, explainer, test, steps=8)
            assert 0.0 < value < 1.0

    def test_workers_do_not_change_result(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        explainer = lambda p, x: pixel_fragility(p, x)
        a = fidelity(params, explainer, test, steps=4, workers=1)
        b = fidelity(params, explainer, test, steps=4, workers=3)
        assert a == b


class TestStability:
    def test_constant_map_gives_zero(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        explainer = lambda p, x: ImportanceMap(np.full(len(x), 3.3), "ascending", "const")
        assert stability(params, explainer, test, m=4, seed=0) == 0.0

    def test_rescaling_invariance_is_exact(self, synth_model):
        # power-of-two rescaling keeps the normalized map bitwise identical
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        base = lambda p, x: pixel_fragility(p, x)

        def rescaled(p, x):
            imap = pixel_fragility(p, x)
            return ImportanceMap(4.0 * imap.scores, imap.ordering, imap.method)

        a = stability(params, base, test, m=4, seed=5)
        b = stability(params, rescaled, test, m=4, seed=5)
        assert a == b

    def test_deterministic_per_seed(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        explainer = lambda p, x: integrated_gradients(p, x, steps=10)
        a = stability(params, explainer, test, m=3, seed=11)
        b = stability(params, explainer, test, m=3, seed=11)
        assert a == b
        c = stability(params, explainer, test, m=3, seed=12)
        assert a != c

    def test_workers_do_not_change_result(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        explainer = lambda p, x: pixel_fragility(p, x)
        a = stability(params, explainer, test, m=3, seed=2, workers=1)
        b = stability(params, explainer, test, m=3, seed=2, workers=4)
        assert a == b

    def test_positive_for_input_dependent_maps(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        value = stability(params, lambda p, x: pixel_fragility(p, x), test, m=4, seed=1)
        assert value > 0.0


class TestTiming:
    def test_single_image(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        seconds = timing(params, lambda p, x: pixel_fragility(p, x), test, n=1)
        assert seconds > 0.0

    def test_fragility_faster_than_shapley(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        frag = timing(params, lambda p, x: pixel_fragility(p, x), test, n=10)
        shap = timing(params, lambda p, x: shapley_sampling(p, x, permutations=200, seed=0),
                      test, n=10)
        assert frag < shap


class TestReport:
    def test_key_value_format(self, synth_model):
        params = synth_model["params"]
        test = synth_model["task"]["test"]
        explainers = {"fragility": lambda p, x: pixel_fragility(p, x)}
        report = compute_report(params, test, explainers, steps=4, m=2, timing_images=2)
        lines = report.key_value_lines()
        pattern = re.compile(r"^[a-z_]+(\.[a-zA-Z0-9_.]+)? = -?[0-9.]+$")
        assert all(pattern.match(line) for line in lines)
        joined = "\n".join(lines)
        assert "fidelity.fragility = " in joined
        assert "stability.fragility = " in joined
        assert "seconds_per_image.fragility = " in joined
        assert "confusion.0.0 = " in joined

    def test_table_mentions_methods(self):
        report = MetricsReport(np.array([[3, 0], [1, 2]]), 5 / 6,
                               fidelity={"fragility": 0.5}, stability={"fragility": 1.2},
                               seconds_per_image={"fragility": 0.001})
        table = report.format_table()
        assert "fragility" in table and "0.8333" in table
