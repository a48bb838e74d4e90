"""Counting spread against cycle number for each preparation, with the
fitted linear growth rate annotated per preparation."""

import numpy as np
import matplotlib.pyplot as plt

from .common import Table, linear_fit, make_parser, run, save


def render(args):
    table = Table(args.input)
    table.require("preparation", "n", "std")
    preparations = table.col_str("preparation")
    n = table.col("n")
    std = table.col("std")
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    seen = []
    for label in preparations:
        if label not in seen:
            seen.append(label)
    for i, label in enumerate(seen):
        mask = np.array([p == label for p in preparations])
        slope, _ = linear_fit(n[mask], std[mask])
        ax.plot(
            n[mask], std[mask], "o-", color=f"C{i}",
            label=f"{label} (slope {slope:.3f})",
        )
    ax.set_xlabel(table.label("n"))
    ax.set_ylabel("spread of Q [particles]")
    ax.set_title("Growth of the counting spread with cycle number")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    save(fig, args.output, args.dpi)
    plt.close(fig)


render.parser = make_parser(__doc__)


def main(argv=None) -> int:
    return run(render, argv)


if __name__ == "__main__":
    raise SystemExit(main())
