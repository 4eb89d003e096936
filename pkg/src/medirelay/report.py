"""Render simulator transcripts as figures.

Given a run's transcript and its scenario, draws two PNGs: a timeline of
channel state against outbox depth, and cumulative traffic counters. Pure
presentation; everything is derived from the transcript lines so the figures
always agree with the delimited output they sit next to.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .scenario import Scenario, SimResult
from .sync import ChannelState


def _parse_ticks(lines):
    ticks = []
    for line in lines:
        fields = dict(part.split("=", 1) for part in line.split())
        if fields.get("ev") != "tick":
            continue
        ticks.append({k: int(v) for k, v in fields.items() if k != "ev"})
    return ticks


def _consult_times(lines):
    out = []
    for line in lines:
        fields = dict(part.split("=", 1) for part in line.split())
        if fields.get("ev") == "consult":
            out.append((int(fields["t"]), int(fields["wan"])))
    return out


def render_report(result: SimResult, out_dir: str) -> list[str]:
    """Write the run's figures into out_dir; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    ticks = _parse_ticks(result.lines)
    times = [t["t"] for t in ticks]
    written = []

    fig, (ax_chan, ax_box) = plt.subplots(
        2, 1, figsize=(9, 4.5), sharex=True, height_ratios=[1, 2]
    )
    for start, end, state in result.scenario.segments:
        color = "#4caf50" if state is ChannelState.UP else "#e53935"
        ax_chan.broken_barh([(start, end - start)], (0, 1), facecolors=color)
    ax_chan.set_ylim(0, 1)
    ax_chan.set_yticks([])
    ax_chan.set_ylabel("channel")
    ax_box.step(times, [t["outbox"] for t in ticks], where="post", label="outbox depth")
    for when, wan in _consult_times(result.lines):
        ax_box.axvline(when, color="#888", linestyle=":", linewidth=1)
        if wan:
            ax_box.annotate(f"wan={wan}", (when, 0), fontsize=7, rotation=90)
    ax_box.set_xlabel("time (s)")
    ax_box.set_ylabel("records queued")
    ax_box.legend(loc="upper right", fontsize=8)
    fig.suptitle("Channel state and outbox depth")
    fig.tight_layout()
    path = os.path.join(out_dir, "sync_timeline.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    cumulative = {"wan": [], "fwd": [], "dup": [], "phits": [], "pmiss": []}
    totals = dict.fromkeys(cumulative, 0)
    for t in ticks:
        for key in cumulative:
            totals[key] += t[key]
            cumulative[key].append(totals[key])
    fig, ax = plt.subplots(figsize=(9, 4))
    labels = {
        "wan": "WAN messages",
        "fwd": "records forwarded",
        "dup": "duplicates suppressed",
        "phits": "prefetch hits",
        "pmiss": "prefetch misses",
    }
    for key, label in labels.items():
        ax.plot(times, cumulative[key], label=label)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("cumulative count")
    ax.legend(loc="upper left", fontsize=8)
    fig.suptitle("Sync traffic")
    fig.tight_layout()
    path = os.path.join(out_dir, "sync_traffic.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)
    return written
