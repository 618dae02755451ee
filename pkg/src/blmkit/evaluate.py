"""Scoring, error distributions, and latent probing.

Selection tasks pick exactly one candidate per item, so positive-class F1
coincides with accuracy; both are reported.  Latent traversal sweeps each
latent unit across its stored training-data range, re-decodes, and tallies
pattern confusion matrices; projections are exact-PCA coordinates of the
latent means.  Figures are emitted as CSV plus small self-contained SVG
files (no plotting runtime, byte-stable output).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BlmError
from .vae import SentenceVae, Triples, decode, latent_means


# ---------------------------------------------------------------------------
# Headline scores
# ---------------------------------------------------------------------------

def f1_score(predictions, gold) -> dict:
    """Positive-class F1 and accuracy for a one-pick-per-item selection."""
    predictions = np.asarray(predictions)
    gold = np.asarray(gold)
    if predictions.shape != gold.shape:
        raise BlmError(
            f"prediction/gold length mismatch: {predictions.shape} vs {gold.shape}"
        )
    n = len(predictions)
    tp = int((predictions == gold).sum())
    fp = n - tp  # every wrong pick asserts a wrong positive
    fn = n - tp  # and misses the true one
    accuracy = tp / n if n else 0.0
    precision = tp / (tp + fp) if n else 0.0
    recall = tp / (tp + fn) if n else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if (precision + recall) else 0.0
    return {"f1": f1, "accuracy": accuracy, "tp": tp, "fp": fp, "fn": fn}


def mean_sd(values) -> dict:
    arr = np.asarray(list(values), dtype=float)
    return {"mean": float(arr.mean()), "sd": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            "runs": len(arr)}


@dataclass
class EvalReport:
    """Aggregated scores: per-run F1 mean/SD, the answer-label histogram,
    and an optional train-type x test-type grid for heatmaps."""

    f1: dict                 # {"mean", "sd", "runs"}
    accuracy: dict           # same aggregation
    histogram: dict          # error_distribution output
    grid: dict = field(default_factory=dict)  # (train_type, test_type) -> mean F1

    def grid_matrix(self, train_types=("I", "II", "III"),
                    test_types=("I", "II", "III")):
        matrix = np.full((len(train_types), len(test_types)), np.nan)
        for i, tr in enumerate(train_types):
            for j, te in enumerate(test_types):
                if (tr, te) in self.grid:
                    matrix[i, j] = self.grid[(tr, te)]
        return matrix


def eval_report(per_run_f1, per_run_accuracy, histogram, grid_runs=None) -> EvalReport:
    """Aggregate >= 1 runs; ``grid_runs`` maps (train_type, test_type) to a
    list of per-run F1 values."""
    grid = {}
    if grid_runs:
        grid = {key: mean_sd(values)["mean"] for key, values in grid_runs.items()}
    return EvalReport(f1=mean_sd(per_run_f1), accuracy=mean_sd(per_run_accuracy),
                      histogram=histogram, grid=grid)


def error_distribution(predictions, instances) -> dict:
    """Histogram of chosen answers by their error label (raw and fractions)."""
    counts = {}
    instances = list(instances)
    predictions = list(predictions)
    if len(predictions) != len(instances):
        raise BlmError("one prediction per instance required")
    for pred, inst in zip(predictions, instances):
        labels = inst.labels()
        if not 0 <= pred < len(labels):
            raise BlmError(
                f"prediction {pred} out of range for instance {inst.instance_id}"
            )
        label = labels[pred]
        counts[label] = counts.get(label, 0) + 1
    total = sum(counts.values())
    fractions = {k: v / total for k, v in counts.items()} if total else {}
    return {"counts": counts, "fractions": fractions, "total": total}


# ---------------------------------------------------------------------------
# Latent traversal
# ---------------------------------------------------------------------------

@dataclass
class TraversalReport:
    patterns: tuple                  # confusion-matrix axis, in order
    values: dict                     # (unit, step) -> traversal value
    matrices: dict                   # (unit, step) -> (P, P) int matrix
    baseline_matrix: np.ndarray      # untraversed confusion
    baseline_accuracy: float
    steps: int
    units: int


def _confusion(patterns, true_patterns, pred_patterns):
    index = {p: i for i, p in enumerate(patterns)}
    matrix = np.zeros((len(patterns), len(patterns)), dtype=int)
    for t, p in zip(true_patterns, pred_patterns):
        matrix[index[t], index[p]] += 1
    return matrix


def _predict_patterns(model: SentenceVae, z, triples: Triples):
    e_hat, _ = decode(model.params, model.config, z)
    candidates = np.concatenate(
        [triples.positives[:, None, :], triples.negatives], axis=1
    ).astype(e_hat.dtype)
    scores = np.einsum("nmd,nd->nm", candidates, e_hat)
    chosen = scores.argmax(axis=1)
    return [triples.candidate_patterns[i][int(c)] for i, c in enumerate(chosen)], chosen


def latent_traversal(model: SentenceVae, triples: Triples, steps: int = 10) -> TraversalReport:
    """For each latent unit, sweep ``steps`` evenly spaced values (endpoints
    included) across the unit's training min-max range, decode with the other
    units at their posterior means, and tally pattern confusions."""
    if model.latent_range is None:
        raise BlmError("model has no stored latent ranges; train before traversing")
    mu = latent_means(model, triples.inputs)
    patterns = tuple(sorted({p for row in triples.candidate_patterns for p in row}))
    true_patterns = triples.patterns
    base_pred, base_chosen = _predict_patterns(model, mu, triples)
    baseline_matrix = _confusion(patterns, true_patterns, base_pred)
    baseline_accuracy = float((base_chosen == 0).mean()) if len(triples) else 0.0
    units = model.config.latent
    values, matrices = {}, {}
    for u in range(units):
        lo, hi = model.latent_range[u]
        for s in range(steps):
            v = lo + (hi - lo) * (s / (steps - 1) if steps > 1 else 0.5)
            z = mu.copy()
            z[:, u] = v
            pred, _ = _predict_patterns(model, z, triples)
            values[(u, s)] = float(v)
            matrices[(u, s)] = _confusion(patterns, true_patterns, pred)
    return TraversalReport(patterns=patterns, values=values, matrices=matrices,
                           baseline_matrix=baseline_matrix,
                           baseline_accuracy=baseline_accuracy,
                           steps=steps, units=units)


def traversal_at_means(model: SentenceVae, triples: Triples, unit: int):
    """No-op traversal: setting a unit to its own posterior mean must
    reproduce the untraversed predictions."""
    mu = latent_means(model, triples.inputs)
    z = mu.copy()
    z[:, unit] = mu[:, unit]
    pred, chosen = _predict_patterns(model, z, triples)
    return pred, chosen


# ---------------------------------------------------------------------------
# Latent projection and clustering diagnostics
# ---------------------------------------------------------------------------

def pca2(points: np.ndarray) -> np.ndarray:
    """Top-two principal components by exact eigendecomposition of the
    covariance; returns the projected coordinates."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 2:
        raise BlmError("projection needs at least two points")
    centered = points - points.mean(axis=0)
    cov = centered.T @ centered / (len(points) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    return centered @ eigvecs[:, order[:2]]


def project_latents(model: SentenceVae, vectors, patterns, ids=None):
    """Exact-PCA 2-D coordinates of the latent means."""
    vectors = np.asarray(vectors)
    if len(vectors) < 2:
        raise BlmError("projection needs at least two sentences")
    coords = pca2(latent_means(model, vectors))
    if ids is None:
        ids = [str(i) for i in range(len(vectors))]
    return coords, list(ids), list(patterns)


def write_projection_csv(path, coords, ids, patterns):
    lines = ["sentence_id,x,y,pattern"]
    for sid, (x, y), pattern in zip(ids, coords, patterns):
        lines.append(f"{sid},{x:.6f},{y:.6f},{pattern}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def nearest_centroid_accuracy(train_points, train_labels, test_points, test_labels):
    train_points = np.asarray(train_points, dtype=np.float64)
    test_points = np.asarray(test_points, dtype=np.float64)
    labels = sorted(set(train_labels))
    centroids = np.stack([
        train_points[[i for i, l in enumerate(train_labels) if l == lab]].mean(axis=0)
        for lab in labels
    ])
    dists = ((test_points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    chosen = dists.argmin(axis=1)
    correct = sum(1 for i, c in enumerate(chosen) if labels[int(c)] == test_labels[i])
    return correct / len(test_points) if len(test_points) else 0.0


def silhouette(points, labels) -> float:
    """Mean silhouette coefficient with euclidean distances."""
    points = np.asarray(points, dtype=np.float64)
    labels = list(labels)
    uniq = sorted(set(labels))
    if len(uniq) < 2:
        raise BlmError("silhouette needs at least two clusters")
    dists = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    by_label = {lab: [i for i, l in enumerate(labels) if l == lab] for lab in uniq}
    scores = []
    for i, lab in enumerate(labels):
        own = [j for j in by_label[lab] if j != i]
        if not own:
            scores.append(0.0)
            continue
        a = dists[i, own].mean()
        b = min(dists[i, by_label[other]].mean() for other in uniq if other != lab)
        scores.append((b - a) / max(a, b))
    return float(np.mean(scores))


# ---------------------------------------------------------------------------
# SVG renderings (self-contained, byte-stable)
# ---------------------------------------------------------------------------

_PALETTE = ("#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4",
            "#8c613c", "#dc7ec0", "#797979", "#d5bb67", "#82c6e2")


def _svg_header(width, height, title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{title}</title>',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="16" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>',
    ]


def svg_heatmap(path, matrix, row_labels, col_labels, title=""):
    matrix = np.asarray(matrix, dtype=float)
    cell = 28
    left, top = 120, 40
    width = left + cell * matrix.shape[1] + 20
    height = top + cell * matrix.shape[0] + 60
    peak = matrix.max() if matrix.size and matrix.max() > 0 else 1.0
    out = _svg_header(width, height, title)
    for r in range(matrix.shape[0]):
        for c in range(matrix.shape[1]):
            w = matrix[r, c] / peak
            shade = int(255 - 155 * w)
            color = f"rgb({shade},{shade},255)"
            x, y = left + c * cell, top + r * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{color}" stroke="#ccc"/>')
            out.append(f'<text x="{x + cell / 2:.0f}" y="{y + cell / 2 + 4:.0f}" '
                       f'text-anchor="middle" font-family="sans-serif" '
                       f'font-size="9">{matrix[r, c]:g}</text>')
    for r, lab in enumerate(row_labels):
        out.append(f'<text x="{left - 6}" y="{top + r * cell + cell / 2 + 4:.0f}" '
                   f'text-anchor="end" font-family="sans-serif" font-size="9">{lab}</text>')
    for c, lab in enumerate(col_labels):
        x = left + c * cell + cell / 2
        y = top + matrix.shape[0] * cell + 12
        out.append(f'<text x="{x:.0f}" y="{y}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="9" '
                   f'transform="rotate(45 {x:.0f} {y})">{lab}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


def svg_stacked_bars(path, categories, series: dict, title=""):
    """series: label -> per-category fractions; one stacked bar per category."""
    bar_w, gap, chart_h = 46, 18, 240
    left, top = 60, 40
    width = left + len(categories) * (bar_w + gap) + 170
    height = top + chart_h + 60
    out = _svg_header(width, height, title)
    labels = list(series)
    for ci, cat in enumerate(categories):
        x = left + ci * (bar_w + gap)
        y = top + chart_h
        for li, lab in enumerate(labels):
            frac = series[lab][ci]
            h = frac * chart_h
            y -= h
            color = _PALETTE[li % len(_PALETTE)]
            out.append(f'<rect x="{x}" y="{y:.2f}" width="{bar_w}" height="{h:.2f}" '
                       f'fill="{color}" stroke="white" stroke-width="0.5"/>')
        out.append(f'<text x="{x + bar_w / 2:.0f}" y="{top + chart_h + 16}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="10">{cat}</text>')
    lx = left + len(categories) * (bar_w + gap) + 16
    for li, lab in enumerate(labels):
        y = top + 14 * li
        color = _PALETTE[li % len(_PALETTE)]
        out.append(f'<rect x="{lx}" y="{y}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{lx + 14}" y="{y + 9}" font-family="sans-serif" '
                   f'font-size="10">{lab}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


def write_confusion_csv(path, matrix, patterns):
    lines = ["true\\pred," + ",".join(patterns)]
    for i, pattern in enumerate(patterns):
        lines.append(pattern + "," + ",".join(str(int(v)) for v in matrix[i]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
