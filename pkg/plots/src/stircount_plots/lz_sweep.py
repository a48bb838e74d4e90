"""Crossing-probability sweep: log P against the sweep exponent, with the
fitted slope annotated (the closed form is a straight line of slope -1)."""

import numpy as np
import matplotlib.pyplot as plt

from .common import Table, linear_fit, make_parser, run, save


def render(args):
    table = Table(args.input)
    table.require("exponent", "p_numeric", "p_formula")
    x = table.col("exponent")
    p_num = table.col("p_numeric")
    p_form = table.col("p_formula")
    slope, intercept = linear_fit(x, np.log(p_num))
    fig, ax = plt.subplots(figsize=(6.2, 4.2))
    ax.semilogy(x, p_num, "o", color="C0", label="simulated")
    order = np.argsort(x)
    ax.semilogy(x[order], p_form[order], "-", color="0.4", label="closed form")
    ax.set_xlabel(table.label("exponent"))
    ax.set_ylabel("crossing probability")
    ax.set_title("Sweep-rate dependence of the crossing probability")
    ax.annotate(
        f"fitted slope of log P: {slope:.4f}",
        xy=(0.03, 0.06), xycoords="axes fraction",
    )
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    save(fig, args.output, args.dpi)
    plt.close(fig)


render.parser = make_parser(__doc__)


def main(argv=None) -> int:
    return run(render, argv)


if __name__ == "__main__":
    raise SystemExit(main())
