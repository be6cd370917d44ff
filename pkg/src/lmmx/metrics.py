"""Classification quality and explanation-quality metrics.

Explainers are passed as callables ``(params, x) -> ImportanceMap``.

Deletion fidelity follows the clean image's predicted class: pixels are
replaced by a fill value in ranking order, ``steps`` equal increments, and
the calibrated predicted-class probability is averaged over images and
increments.  Lower is better; a value near the calibration target means
the ranking never found the decisive pixels.

Stability is a normalized local Lipschitz ratio: the mean, over Gaussian
input perturbations, of the change of the unit-normalized importance map
divided by the change of the input.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ParameterError
from .network import LmmParams, batch_logits, batch_predict, softmax_rows


@dataclass
class MetricsReport:
    """Confusion/accuracy plus per-explainer fidelity, stability, timing."""

    confusion: np.ndarray
    accuracy: float
    fidelity: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    seconds_per_image: dict = field(default_factory=dict)

    def methods(self) -> list[str]:
        names = list(self.fidelity)
        for extra in (self.stability, self.seconds_per_image):
            names += [m for m in extra if m not in names]
        return names

    def key_value_lines(self) -> list[str]:
        """Machine-readable ``metric.method = value`` lines."""
        lines = [f"accuracy = {self.accuracy:.6f}"]
        n = self.confusion.shape[0]
        for i in range(n):
            for j in range(n):
                lines.append(f"confusion.{i}.{j} = {int(self.confusion[i, j])}")
        for metric, table in (("fidelity", self.fidelity),
                              ("stability", self.stability),
                              ("seconds_per_image", self.seconds_per_image)):
            for method, value in table.items():
                lines.append(f"{metric}.{method} = {value:.6f}")
        return lines

    def format_table(self) -> str:
        """Human-readable summary table."""
        rows = [f"accuracy: {self.accuracy:.4f}",
                "confusion (rows true, cols predicted):"]
        for row in self.confusion:
            rows.append("  " + "  ".join(f"{int(v):6d}" for v in row))
        methods = self.methods()
        if methods:
            width = max(len(m) for m in methods)
            rows.append(f"  {'method'.ljust(width)}  {'fidelity':>9}  {'stability':>9}  {'s/image':>9}")
            for m in methods:
                cells = [self.fidelity.get(m), self.stability.get(m), self.seconds_per_image.get(m)]
                text = "  ".join("      ---" if v is None else f"{v:9.4f}" for v in cells)
                rows.append(f"  {m.ljust(width)}  {text}")
        return "\n".join(rows)


def confusion_matrix(params: LmmParams, data: Dataset) -> np.ndarray:
    """Counts indexed (true, predicted); prediction ignores temperature."""
    predicted = batch_predict(params, data.images)
    n = params.n_classes
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (data.labels, predicted), 1)
    return counts


def accuracy_from_confusion(confusion: np.ndarray) -> float:
    return float(np.trace(confusion) / confusion.sum())


def _map_images(fn, n_images: int, workers: int) -> list:
    """Apply a pure per-image function, optionally on a small thread pool.

    Results are collected by image index, so the outcome does not depend
    on the schedule.
    """
    if workers <= 1:
        return [fn(i) for i in range(n_images)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_images)))


def fidelity(params: LmmParams, explainer, data: Dataset, fill: float = 0.5,
             steps: int = 28, workers: int = 1) -> float:
    """Mean calibrated predicted-class probability under ranked deletion."""
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    n_pix = data.n_pixels

    def per_image(i: int) -> np.ndarray:
        x = data.images[i]
        rank = explainer(params, x).ranking()
        batch = np.repeat(x[None, :], steps + 1, axis=0)
        for k in range(1, steps + 1):
            batch[k, rank[:(k * n_pix) // steps]] = fill
        logits = batch_logits(params, batch)
        target = int(np.argmax(logits[0]))
        probs = softmax_rows(logits[1:], params.temperature)
        return probs[:, target]

    values = _map_images(per_image, data.n_samples, workers)
    return float(np.mean(np.concatenate(values)))


def _unit_map(scores: np.ndarray) -> np.ndarray:
    """L2-normalize; a zero map stays zero.

    Non-finite scores (possible only for degenerate fragility maps) are
    replaced by the largest finite score before normalizing.
    """
    v = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        finite = v[np.isfinite(v)]
        v = np.where(np.isfinite(v), v, finite.max() if finite.size else 0.0)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else np.zeros_like(v)


def stability(params: LmmParams, explainer, data: Dataset, sigma: float = 0.05,
              m: int = 10, seed: int = 0, workers: int = 1) -> float:
    """Mean ratio of explanation change to input change under noise."""
    if sigma <= 0:
        raise ParameterError("sigma must be > 0")
    if m < 1:
        raise ParameterError("m must be >= 1")
    n_pix = data.n_pixels
    # one independent, index-keyed stream per image so the schedule cannot
    # change the draws
    seeds = np.random.SeedSequence(seed).spawn(data.n_samples)

    def per_image(i: int) -> float:
        rng = np.random.default_rng(seeds[i])
        x = data.images[i]
        base = _unit_map(explainer(params, x).scores)
        ratios = np.empty(m)
        for j in range(m):
            xp = np.clip(x + rng.normal(0.0, sigma, n_pix), 0.0, 1.0)
            den = float(np.linalg.norm(xp - x))
            if den == 0.0:
                ratios[j] = 0.0
                continue
            pert = _unit_map(explainer(params, xp).scores)
            ratios[j] = float(np.linalg.norm(pert - base)) / den
        return float(np.mean(ratios))

    return float(np.mean(_map_images(per_image, data.n_samples, workers)))


def timing(params: LmmParams, explainer, data: Dataset, n: int) -> float:
    """Mean wall-clock seconds per importance map, single-threaded."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    n = min(n, data.n_samples)
    start = time.perf_counter()
    for i in range(n):
        explainer(params, data.images[i])
    return (time.perf_counter() - start) / n


def compute_report(params: LmmParams, data: Dataset, explainers: dict,
                   fill: float = 0.5, steps: int = 28, sigma: float = 0.05,
                   m: int = 10, seed: int = 0, timing_images: int = 20,
                   workers: int = 1) -> MetricsReport:
    """Run every metric for every explainer over one dataset split."""
    confusion = confusion_matrix(params, data)
    report = MetricsReport(confusion, accuracy_from_confusion(confusion))
    for name, explainer in explainers.items():
        report.fidelity[name] = fidelity(params, explainer, data, fill, steps, workers)
        report.stability[name] = stability(params, explainer, data, sigma, m, seed, workers)
        report.seconds_per_image[name] = timing(params, explainer, data, timing_images)
    return report
