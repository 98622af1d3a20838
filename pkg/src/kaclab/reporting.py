"""Output helpers: CSV/JSON-lines writers, config echo, summary, figures.

CSV output uses RFC 4180 quoting with 17-significant-digit decimals so
runs are byte-reproducible from (config, seed) alone.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "%.17g" % x
    if isinstance(x, int):
        return "%d" % x
    s = str(x)
    if any(c in s for c in ",\"\r\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(_cell(h) for h in header) + "\r\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\r\n")


def write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def metric(name: str, value: float, expected: float, tolerance: float) -> dict:
    return {"name": name, "value": float(value), "expected": float(expected),
            "tolerance": float(tolerance)}


def write_summary(outdir, name: str, passed: bool, metrics) -> dict:
    summary = {"name": name, "pass": bool(passed), "metrics": list(metrics)}
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def echo_config(outdir, config: dict) -> None:
    """Echo the effective (post-default) config as flat key=value lines."""
    with open(os.path.join(outdir, "config.txt"), "w") as fh:
        for key in sorted(config):
            fh.write(f"{key}={config[key]}\n")


def save_line_plot(path, x, series: dict, xlabel: str, ylabel: str,
                   logy: bool = False, logx: bool = False) -> None:
    """Render simple line series to a PNG next to the delimited output."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, data in series.items():
        if isinstance(data, tuple):
            y, err = data
            ax.errorbar(x, y, yerr=err, label=label, capsize=2)
        else:
            ax.plot(x, data, label=label)
    if logy:
        ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
