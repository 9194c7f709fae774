"""Quick end-to-end check of the Python bindings.

    pip install --no-build-isolation -e crates/python
    python python/smoke_test.py
"""

import math

import finslervol as fv


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{a} != {b}"


def main():
    assert "berwald-moor" in fv.catalog_names()

    bm = fv.Metric.builtin("berwald-moor")
    g = bm.metric_at([0, 0, 0, 0], [1, 1, 1, 1])
    close(g["det"], -(2.0**-8), 1e-14)
    assert g["signature"] == (1, 3, 0)
    close(bm.norm([0] * 4, [16, 1, 1, 1]), 2.0, 1e-14)

    t0 = fv.find_privileged(bm, [0, 0, 0, 0])
    close(t0.critical_value, 2.0**-8, 1e-12)
    for form in ("bh", "ht"):
        d = fv.density(bm, [0, 0, 0, 0], form, orientation=t0)
        close(d["sigma"], 0.0625, 1e-10)

    toy = fv.Metric("y0*sqrt(abs(y0^2 - y1^2))", 2, name="toy")
    t0 = fv.find_privileged(toy, [0, 0])
    assert t0.status == "Converged", t0
    close(t0.direction[0], 1.0, 1e-10)
    close(fv.density(toy, [0, 0], "bh")["sigma"], 1 / math.sqrt(2), 1e-10)
    try:
        fv.density(toy, [0, 0], "ht")
    except fv.FinslerError as e:
        assert e.args[0] == "DetNotProlongable", e.args
    else:
        raise AssertionError("HT density should not exist for the toy model")

    r = fv.Metric("4*y0^2 + y1^2", 2)
    close(fv.density(r, [0, 0], "classical-bh")["sigma"], 2.0, 1e-2)

    v = fv.integrate_volume(fv.Metric.builtin("minkowski4"), [0] * 4, [2, 1, 1, 1], [2, 1, 1, 1], "bh")
    close(v["value"], 2.0, 1e-12)

    a = fv.action(toy, "w", [0, 0], [1, 1], [1, 1], fields=[("w", "1")], weighting="fallback")
    close(a["value"], 1 / math.sqrt(2), 1e-10)

    report = fv.validate(fv.Metric.builtin("minkowski4"))
    assert report["passed"], report["table"]

    again = fv.Metric.from_toml(toy.to_toml())
    assert again.lagrangian == toy.lagrangian
    print("python smoke test passed")


if __name__ == "__main__":
    main()
