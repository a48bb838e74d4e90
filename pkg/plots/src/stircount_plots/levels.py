"""Adiabatic-level diagram: branch energies over one driving period, with
the branch the particle follows drawn thick."""

import matplotlib.pyplot as plt

from .common import SchemaMismatch, Table, make_parser, run, save


def render(args):
    table = Table(args.input)
    table.require("t", "followed")
    t = table.col("t")
    branches = [n for n in table.names if n.startswith("E_branch")]
    if not branches:
        raise SchemaMismatch(
            f"{table.path}: no E_branch* columns; found {table.names}"
        )
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for name in branches:
        ax.plot(t, table.col(name), lw=0.9, color="0.45")
    ax.plot(t, table.col("followed"), lw=2.8, color="C3", label="followed branch")
    ax.set_xlabel(table.label("t"))
    ax.set_ylabel("adiabatic level [hop]")
    ax.set_title("Adiabatic levels over one driving period")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    save(fig, args.output, args.dpi)
    plt.close(fig)


render.parser = make_parser(__doc__)


def main(argv=None) -> int:
    return run(render, argv)


if __name__ == "__main__":
    raise SystemExit(main())
