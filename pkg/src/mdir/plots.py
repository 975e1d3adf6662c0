"""Static SVG line plots of simulated power curves."""

from __future__ import annotations

import io
from collections import defaultdict

STYLES = {
    "four_directions": "-",
    "two_directions": "--",
    "optimal": ":",
    "mismatched": "-.",
}


def power_curves_svg(reports) -> str:
    """One panel per scenario id; x = theta, y = rejection rate."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "mdir"
    panels: dict[str, list] = defaultdict(list)
    for rep in reports:
        panels[rep.scenario.scenario_id].append(rep)
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
    for ax, (sid, reps) in zip(axes[0], panels.items()):
        reps = sorted(reps, key=lambda r: r.scenario.theta)
        thetas = [r.scenario.theta for r in reps]
        for method in reps[0].rates:
            for cal in reps[0].rates[method]:
                ax.plot(thetas, [r.rates[method][cal] for r in reps], STYLES.get(method, "-"),
                        color="black", label=f"{method} ({cal})")
        ax.axhline(reps[0].scenario.alpha, color="grey", lw=0.5)
        ax.set_title(sid, fontsize=9)
        ax.set_xlabel("theta")
        ax.set_ylabel("rejection rate")
        ax.set_ylim(0, 1)
        ax.legend(fontsize=7)
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()
