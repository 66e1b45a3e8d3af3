"""Smoke test for the lap3d extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/lap3d-*.whl
"""

import math
import struct
import tempfile

import lap3d


def main():
    s = lap3d.Symbol.helmholtz()
    assert s.degree == 2
    assert abs(s.value([1.0, 0.0, 0.0])) < 1e-12
    assert s.gradient([1.0, 0.0, 0.0]) == [2.0, 0.0, 0.0]
    assert lap3d.Symbol(str(s)).digest() == s.digest()
    assert s.check_ellipticity()["verdict"] == "elliptic_positive"

    geo = lap3d.check_geometry(s, [-1.3] * 3, [1.3] * 3, (-0.1, 0.1))
    assert geo["verdicts"]["regular_foliation"] == "pass", geo["verdicts"]

    mesh = lap3d.SurfaceMesh(s, 0.0, [-1.3] * 3, [1.3] * 3, 0.05)
    assert abs(mesh.area() - 4 * math.pi) < 0.05
    # sphere measure at the origin is its area
    assert abs(mesh.fourier([0.0, 0.0, 0.0]) - mesh.area()) < 1e-9

    assert lap3d.classify("3/4", "3/20")["classification"] == "strong"
    assert [v[0] for v in lap3d.pentagon()] == ["A", "B", "C", "B'", "C'"]

    f = lap3d.Field.centered_cube(32, 20.0).gaussian(1.5)
    assert len(f) == 32 ** 3
    g = lap3d.Field.from_bytes(f.to_bytes(), f.dims, f.spacing, f.origin)
    assert abs(g.lebesgue_norm(2.0) - f.lebesgue_norm(2.0)) < 1e-6 * f.lebesgue_norm(2.0)
    assert f.lorentz_norm(2.0, math.inf) <= f.lebesgue_norm(2.0) * (1 + 1e-9)

    run, u = lap3d.solve(s, f, delta0=0.125, steps=3, sign=-1)
    assert len(run["delta_schedule"]) == 3, run.keys()
    raw = u.to_bytes()
    assert len(raw) == 8 * len(u)
    re, im = struct.unpack_from("<ff", raw, 0)
    assert math.isfinite(re) and math.isfinite(im)

    assert "sphere" in lap3d.scenario_names()
    assert lap3d.scenario("torus-quartic")["name"] == "torus-quartic"
    with tempfile.TemporaryDirectory() as out:
        m = lap3d.run_pipeline(out, "torus-quartic", stages=["geometry"])
        assert m["assumption_failure"] is True

    try:
        lap3d.Symbol("not a symbol ((")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    print("lap3d smoke test ok")


if __name__ == "__main__":
    main()
