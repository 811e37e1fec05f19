"""Run the zero-set heuristic over the reference operators and print a table."""

from psqha.fock import Slit, number_state, projector
from psqha.grid import PSGrid
from psqha.qconv import transform_table
from psqha.zeroset import WienerPhi, build_T2, zero_set_report


def main():
    grid = PSGrid()
    sources = {
        "vacuum": projector(number_state(0, 1)),
        "|1><1|": projector(number_state(1, 2)),
        "|2><2|": projector(number_state(2, 3)),
        "slit a=1": Slit(1.0),
    }
    rows = [(name, zero_set_report(transform_table(src, grid))) for name, src in sources.items()]
    t2 = build_T2(WienerPhi(2), projector(number_state(0, 1)), grid)
    rows.append(("T2 n_max=2", zero_set_report(t2.exact_table(grid))))

    print(f"{'operator':12s} {'class':12s} {'fraction':>9s}  {'dense':5s}  {'orientation':11s} trend")
    for name, r in rows:
        trend = ", ".join(f"{t:.4f}" for t in r.refinement_trend)
        print(f"{name:12s} {r.classification:12s} {r.zero_fraction:9.5f}  {str(r.complement_dense_flag):5s}  {str(r.orientation):11s} [{trend}]")


if __name__ == "__main__":
    main()
