import os

import matplotlib
matplotlib.use("Agg")      # no display needed, charts go straight to PNG
import matplotlib.pyplot as plt
import numpy as np

BASE_DIR = os.getenv("INCEX_CHART_DIR", "data/report_charts")

PRF_COLUMNS = ("precision", "recall", "f1")


def _target(filename, out_dir):
    out_dir = out_dir or BASE_DIR
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, filename)


def generate_prf_bar_chart(df, label="label", filename="prf_bars.png", title="Precision / Recall / F1", out_dir=None):
    """
    Grouped bars, one group per row of df.
    Expects columns: label, precision, recall, f1.
    """
    required_cols = {label, *PRF_COLUMNS}
    missing = required_cols - set(df.columns)
    if missing:
        raise ValueError(f"Missing columns for PRF chart: {sorted(missing)}")

    x = np.arange(len(df))
    width = 0.25

    plt.figure(figsize=(10, 5))
    for k, metric in enumerate(PRF_COLUMNS):
        plt.bar(x + (k - 1) * width, df[metric], width=width, label=metric)

    plt.xticks(x, df[label], rotation=30, ha="right")
    plt.ylim(0, 1.05)
    plt.ylabel("score")
    plt.title(title)
    plt.legend()

    file_path = _target(filename, out_dir)
    plt.tight_layout()
    plt.savefig(file_path, dpi=150)
    plt.close()

    return file_path


def generate_confusion_heatmap(matrix_df, filename="confusion.png", title="Confusion Matrix", out_dir=None):
    """Heatmap of a square count frame (rows gold, columns predicted)."""
    if matrix_df.shape[0] != matrix_df.shape[1]:
        raise ValueError(f"Confusion matrix must be square, got {matrix_df.shape}")

    values = matrix_df.to_numpy()
    plt.figure(figsize=(8, 7))
    plt.imshow(values, cmap="Blues")
    plt.colorbar()

    n = len(matrix_df)
    plt.xticks(range(n), matrix_df.columns, rotation=45, ha="right")
    plt.yticks(range(n), matrix_df.index)
    for a in range(n):
        for b in range(n):
            if values[a, b]:
                plt.text(b, a, str(values[a, b]), ha="center", va="center", fontsize=8)

    plt.xlabel("predicted")
    plt.ylabel("gold")
    plt.title(title)

    file_path = _target(filename, out_dir)
    plt.tight_layout()
    plt.savefig(file_path, dpi=150)
    plt.close()

    return file_path
