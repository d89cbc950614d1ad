"""Figures written next to run and evaluation reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

ACTION_COLORS = {
    "summarized": "#4c72b0",
    "kept_verbatim": "#55a868",
    "substituted_keywords": "#c44e52",
    "early_stopped": "#8172b2",
}


def plot_budget(report: dict, path: str | Path) -> Path:
    """Per-chunk original, planned and achieved tokens, with similarity on a twin axis."""
    path = Path(path)
    chunks = report["chunks"]
    outcomes = {o["chunk_ref"]: o for o in report["outcomes"]}
    plan = {e["chunk_ref"]: e for e in (report.get("plan") or {}).get("entries", [])}
    idx = [c["index"] for c in chunks]
    original = [c["tokens"] for c in chunks]
    target = [plan[i]["target_len"] if i in plan else 0 for i in idx]
    achieved = [outcomes[i]["achieved_tokens"] if i in outcomes else 0 for i in idx]
    colors = [ACTION_COLORS.get(outcomes.get(i, {}).get("action"), "grey") for i in idx]

    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(idx) + 2), 4))
    w = 0.28
    ax.bar([i - w for i in idx], original, w, color="#dddddd", label="original")
    ax.bar(idx, target, w, color="#999999", label="planned")
    ax.bar([i + w for i in idx], achieved, w, color=colors, label="achieved")
    ax.set_xlabel("chunk (original order)")
    ax.set_ylabel("tokens")
    ax2 = ax.twinx()
    ax2.plot(idx, [c["similarity"] for c in chunks], "k.-", lw=0.8, label="similarity")
    ax2.set_ylim(0, 1.05)
    ax2.set_ylabel("similarity to full context")
    ax.set_title(f"rho={report['config']['rho']}  achieved={report['achieved_ratio']:.2f}  "
                 f"{report['input_tokens']}->{report['output_tokens']} tokens", fontsize=9)
    handles = ax.get_legend_handles_labels()[0] + ax2.get_legend_handles_labels()[0]
    ax.legend(handles=handles, fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_metrics(rows_by_rho: dict[float, dict[str, float]], path: str | Path) -> Path:
    """Corpus-mean metrics against compression ratio."""
    path = Path(path)
    rhos = sorted(rows_by_rho)
    metrics = sorted({m for r in rows_by_rho.values() for m in r})
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for m in metrics:
        ax.plot(rhos, [rows_by_rho[r].get(m, float("nan")) for r in rhos], "o-", label=m)
    ax.set_xlabel("compression ratio")
    ax.set_ylabel("score")
    ax.set_xticks(rhos)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
