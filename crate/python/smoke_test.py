"""Smoke test for the dislocore extension module.

Build and install first, e.g.::

    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""

import json
import math
import tempfile

import dislocore


def main():
    disk = dislocore.Domain.unit_disk()
    assert disk.contains((0.3, 0.4)) and not disk.contains((1.0, 0.0))

    g = dislocore.GreenEngine(disk)
    x = (0.8, 0.0)
    # Robin function of the unit disk: (1/2π) log(1 - |x|²)
    assert abs(g.robin(x) - math.log(1 - 0.64) / (2 * math.pi)) < 1e-12

    bie = dislocore.GreenEngine(disk, backend="boundary_integral", panels=256)
    assert abs(bie.regular_part((0.1, 0.2), (-0.4, 0.3)) - g.regular_part((0.1, 0.2), (-0.4, 0.3))) < 1e-8

    e, f = g.energy_and_forces([(0.3, 0.0), (-0.2, 0.1)], [1, -1])
    assert math.isfinite(e) and len(f) == 2

    tr = g.simulate([(0.95, 0.0)], [1])
    ev = tr["events"][-1]
    assert ev["kind"] == "boundary_collision", ev
    print(f"boundary collision at t = {ev['time']:.6f}")

    p = dislocore.Dirichlet(disk)
    assert abs(p.limit_functional((0.0, 0.0), tight=True)) < 1e-9
    a = (0.4, 0.2)
    # one center in the unit disk with uniform datum: F(a) = -π log(1 - |a|²)
    assert abs(p.limit_functional(a, tight=True) + math.pi * math.log(1 - 0.2)) < 1e-8
    r = p.minimize(1, starts=4)
    assert math.hypot(*r["argmin"][0]) < 1e-3, r["argmin"]

    scenario = {
        "version": 1,
        "domain": {"kind": "disk", "radius": 1.0},
        "mode": "green-check",
        "pairs": 10,
    }
    with tempfile.TemporaryDirectory() as out:
        summary, passed, files = dislocore.run_scenario(json.dumps(scenario), out)
        assert passed, summary
        print(summary)
    print(f"dislocore {dislocore.__version__}: ok")


if __name__ == "__main__":
    main()
