"""Relative homology of (box, {h <= -c}) for a few planar polynomials.

Run:  python demos/sublevel_topology.py
"""
import numpy as np

from wittenpoly import topology
from wittenpoly.polyring import parse

CASES = {
    "saddle": "x^2 - y^2",
    "monkey saddle": "x^3 - 3*x*y^2",
    "perturbed monkey saddle": "x^3 - 3*x*y^2 + x + 1",
    "paraboloid": "x^2 + y^2",
}


def main():
    for name, expr in CASES.items():
        h = parse(expr)
        scan = topology.stabilization_scan(h, [1, 2, 4], [4, 8], [32, 64])
        print(f"{name}: h = {expr}")
        print(f"  plateau {scan.status}, Betti {scan.betti}, window {scan.window}")
        if scan.status != "stable":
            continue
        refined = topology.refine_plateau(h, scan)
        print(f"  doubled to m = {refined.m}: unchanged = {refined.unchanged}")
        fib = topology.fiber_betti(h, 4, topology.GridSpec(8, 64, 2))
        if fib.fiber_reduced is None:
            print("  negative fiber is empty")
        else:
            print(f"  fiber reduced Betti {fib.fiber_reduced}, exact sequence consistent: {fib.les_consistent}")

    print()
    rep = topology.circle_line_model(np.cos, m=256)
    print(f"circle x line, g = cos: direct {rep.direct}, from the zero set {rep.predicted}")
    rep = topology.base_cone_model("circle", r=1, s=0)
    print(f"circle with one negative direction: direct {rep.direct}, shifted circle {rep.predicted}")


if __name__ == "__main__":
    main()
