"""Report emission: delimited CSV, JSON, and rendered figures.

CSV is the machine contract (one row per N, 17 significant digits so values
round-trip bit-exactly); JSON carries the full report including fits and
provenance; figures are a convenience rendered with matplotlib next to the
delimited output.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .study import SCHEMA_VERSION, StudyReport


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(report: StudyReport, path) -> None:
    """One row per record with the report's canonical columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(report.columns)
        for rec in report.records:
            writer.writerow([_fmt(rec[c]) for c in report.columns])


def read_csv(path):
    """Parse a study CSV back into (columns, records)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    columns = rows[0]
    records = []
    for row in rows[1:]:
        rec = {}
        for c, v in zip(columns, row):
            rec[c] = int(v) if c in ("N", "argmax_i", "argmax_j") else float(v)
        records.append(rec)
    return columns, records


def write_json(report: StudyReport, path) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": report.kind,
        "columns": report.columns,
        "records": report.records,
        "fit": report.fit,
        "estimates": report.estimates,
        "config": report.config,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_json(path) -> StudyReport:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {payload.get('schema_version')}")
    return StudyReport(
        kind=payload["kind"],
        columns=payload["columns"],
        records=payload["records"],
        fit=payload["fit"],
        estimates=payload["estimates"],
        config=payload["config"],
    )


def write_figure(report: StudyReport, path) -> None:
    """Render the study's headline quantity against ln N and save to path.

    The output format follows the file extension (svg, png, pdf, ...).
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = np.array([rec["N"] for rec in report.records], dtype=float)
    lnn = np.log(ns)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    if report.kind in ("lower-bound", "control", "no-quad"):
        y = np.array([rec["s"] for rec in report.records])
        ax.plot(lnn, y, "o-", label=r"$E_N / h^2$")
        ax.set_ylabel(r"$E_N / h^2$")
    elif report.kind == "green":
        y = np.array([rec["G"] for rec in report.records])
        ax.plot(lnn, y, "o-", label=r"$G_{\mathrm{center}}$")
        ax.set_ylabel("Green's function at center")
    elif report.kind == "separability":
        y = np.array([rec["q"] for rec in report.records])
        ax.plot(lnn, y, "o-", label=r"$q_N$")
        ax.set_ylabel(r"$\max|U - W\,\sin(\pi z)| / h^2$")
    else:
        y = np.array([rec["ratio"] for rec in report.records])
        ax.plot(lnn, y, "o-", label=r"$\max|w - W| / (h^2 \ln N)$")
        y2 = np.array([rec["center_ratio"] for rec in report.records])
        ax.plot(lnn, y2, "s--", label="center defect ratio")
        ax.set_ylabel("normalized 2D error")
    if report.fit:
        a, b = report.fit["a"], report.fit["b"]
        ax.plot(lnn, a * lnn + b, "k:", label=f"fit {a:.3f} ln N + {b:.3f}")
    ax.set_xlabel(r"$\ln N$")
    ax.set_title(f"{report.kind} study")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
