"""Rendering of tick logs: delimited metrics plus matplotlib figures."""

from __future__ import annotations

import csv
import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class LogError(Exception):
    pass


def load_log(path) -> list[dict]:
    """Parse a line-delimited JSON tick log; bad lines carry line numbers."""
    records = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogError(f"{path}:{lineno}: {exc}") from None
            for key in ("ts", "q", "q_d", "u", "err_t", "err_r"):
                if key not in rec:
                    raise LogError(f"{path}:{lineno}: missing field {key!r}")
            records.append(rec)
    if not records:
        raise LogError(f"{path}: empty log")
    return records


def summarize(records: list[dict]) -> dict:
    err_t = np.array([r["err_t"] for r in records])
    err_r = np.array([r["err_r"] for r in records])
    u = np.array([r["u"] for r in records])
    return {
        "ticks": len(records),
        "final_err_t": float(err_t[-1]),
        "final_err_r": float(err_r[-1]),
        "max_err_t": float(err_t.max()),
        "max_abs_u": float(np.abs(u).max()),
        "mean_active": float(np.mean([r.get("active", 0) for r in records])),
    }


def write_metrics_csv(records: list[dict], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["ts", "err_t", "err_r", "active"])
        for r in records:
            w.writerow([r["ts"], r["err_t"], r["err_r"], r.get("active", 0)])


def render_report(records: list[dict], outdir) -> list[str]:
    """Write metrics.csv plus trajectory/error figures; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    ts = np.array([r["ts"] for r in records])
    q_d = np.array([r["q_d"] for r in records])
    u = np.array([r["u"] for r in records])
    err_t = np.array([r["err_t"] for r in records])
    err_r = np.array([r["err_r"] for r in records])
    written = []

    csv_path = os.path.join(outdir, "metrics.csv")
    write_metrics_csv(records, csv_path)
    written.append(csv_path)

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax1.plot(ts, err_t)
    ax1.set_ylabel("translation error [m]")
    ax1.set_yscale("symlog", linthresh=1e-6)
    ax2.plot(ts, err_r)
    ax2.set_ylabel("rotation error")
    ax2.set_xlabel("time [s]")
    fig.suptitle("task-space tracking error")
    path = os.path.join(outdir, "tracking_error.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    for j in range(q_d.shape[1]):
        ax.plot(ts, q_d[:, j], label=f"q{j}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("joint target [rad]")
    ax.legend(loc="best", ncol=q_d.shape[1])
    fig.suptitle("joint target trajectory")
    path = os.path.join(outdir, "joint_targets.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    for j in range(u.shape[1]):
        ax.plot(ts, u[:, j], label=f"u{j}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("joint velocity [rad/s]")
    ax.legend(loc="best", ncol=u.shape[1])
    fig.suptitle("commanded joint velocity")
    path = os.path.join(outdir, "joint_velocity.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
