"""CSV and SVG emission for sweep results."""

import csv
import logging
from pathlib import Path

log = logging.getLogger(__name__)

CSV_COLUMNS = ("axis", "topology", "trials", "mean_ee", "se_ee", "mean_mse", "se_mse", "mean_pg_W", "mean_ptotal_W")

_AXIS_LABELS = {
    "n_per_tx": "N / N_t",
    "P_g_max_dBm": "P_g^max (dBm)",
    "spacing_x": "spacing along x (wavelengths)",
    "none": "point",
}


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(result, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in result.rows:
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return path


def read_csv(path):
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                k: (row[k] if k == "topology" else int(row[k]) if k == "trials" else float(row[k]))
                for k in CSV_COLUMNS
            })
    return rows


def _plot(result, key, se_key, ylabel, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "mimo-ee"
    fig, ax = plt.subplots(figsize=(6, 4))
    for top in result.topologies:
        rows = [r for r in result.rows if r["topology"] == top]
        x = [r["axis"] for r in rows]
        y = [r[key] for r in rows]
        err = [r[se_key] for r in rows]
        style = "--" if ":" in top else "-"
        ax.errorbar(x, y, yerr=err, linestyle=style, marker="o", markersize=3, capsize=2, label=top)
    ax.set_xlabel(_AXIS_LABELS.get(result.axis_name, result.axis_name))
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit(result, out_dir, name=None):
    """Write ``sweep_<name>.csv`` plus ``ee.svg`` and ``mse.svg``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = name or result.axis_name
    paths = [write_csv(result, out_dir / f"sweep_{name}.csv")]
    if not result.rows:
        log.warning("empty sweep result: wrote header-only CSV, no plots")
        return paths
    paths.append(_plot(result, "mean_ee", "se_ee", "energy efficiency (bits/s/Hz/W)", out_dir / "ee.svg"))
    paths.append(_plot(result, "mean_mse", "se_mse", "MSE", out_dir / "mse.svg"))
    return paths
