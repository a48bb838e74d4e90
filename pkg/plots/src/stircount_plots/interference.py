"""Interference curves from a dwell sweep of the stirring cycle: counting
variance and residual occupation against the crossing phase difference."""

import numpy as np
import matplotlib.pyplot as plt

from .common import Table, make_parser, run, save


def render(args):
    table = Table(args.input)
    table.require("phi", "variance", "resid")
    phi = np.mod(table.col("phi"), 2.0 * np.pi)
    order = np.argsort(phi)
    phi = phi[order]
    variance = table.col("variance")[order]
    resid = table.col("resid")[order]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
    ax1.plot(phi, variance, "o-", color="C0")
    ax1.set_ylabel("Var(Q) [particles$^2$]")
    ax1.set_title("Counting variance and residual occupation vs crossing phase")
    ax2.plot(phi, resid, "s-", color="C3")
    ax2.set_ylabel("residual occupation")
    ax2.set_xlabel("phase difference between crossings, mod 2$\\pi$ [rad]")
    for ax in (ax1, ax2):
        ax.set_xlim(0.0, 2.0 * np.pi)
    fig.tight_layout()
    save(fig, args.output, args.dpi)
    plt.close(fig)


render.parser = make_parser(__doc__)


def main(argv=None) -> int:
    return run(render, argv)


if __name__ == "__main__":
    raise SystemExit(main())
