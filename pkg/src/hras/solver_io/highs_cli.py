"""Reference external solver for the subprocess backend.

Usage: ``python -m hras.solver_io.highs_cli MODEL.lp SOLUTION.sol [--gap G] [--time-limit T]``

Reads the LP file with HiGHS' own parser, so it exercises the emitted text
rather than the in-memory model.
"""

from __future__ import annotations

import argparse
import math
import sys

from .lpfile import write_solution


def main(argv=None) -> int:
    import highspy

    p = argparse.ArgumentParser(prog="hras-highs")
    p.add_argument("lp")
    p.add_argument("sol")
    p.add_argument("--gap", type=float, default=0.02)
    p.add_argument("--time-limit", default="inf")
    args = p.parse_args(argv)

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("threads", 1)
    if args.time_limit != "inf":
        h.setOptionValue("time_limit", float(args.time_limit))
    if h.readModel(args.lp) == highspy.HighsStatus.kError:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 1
    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    status = {S.kOptimal: "optimal", S.kInfeasible: "infeasible", S.kUnbounded: "unbounded",
              S.kTimeLimit: "time-limit"}.get(ms, "infeasible")
    info = h.getInfo()
    header = {"status": status}
    values = {}
    if status in ("optimal", "time-limit") and info.primal_solution_status == 2:
        lp = h.getLp()
        sol = h.getSolution()
        values = dict(zip(lp.col_names_, sol.col_value))
        header["objective"] = "%.17g" % info.objective_function_value
        gap = info.mip_gap
        header["gap"] = "%.17g" % (gap if math.isfinite(gap) else 0.0)
        header["nodes"] = str(max(int(info.mip_node_count), 0))
    write_solution(args.sol, values, header)
    return 0


if __name__ == "__main__":
    sys.exit(main())
