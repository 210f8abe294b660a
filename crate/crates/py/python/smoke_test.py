"""Quick end-to-end check of the Python bindings.

    maturin develop --release   (or pip install a built wheel)
    python python/smoke_test.py
"""

import math

import pyqgraph as qg


def main():
    star = qg.Graph.star(3, 1.0)
    assert star.vertices == ["vc", "v1", "v2", "v3"]
    assert star.classify() == "Tree"
    assert star.validate() == []

    spec = star.spectrum(mesh=256, modes=12)
    assert len(spec) == 12
    assert abs(spec.values[1] - (math.pi / 2) ** 2) < 1e-3
    assert sorted(len(c) for c in spec.clusters)[-1] == 2

    ok = qg.feller(star, spec, qg.Noise.parse("diag:v1=1,v2=1", star))
    assert ok["verdict"] == "StrongFeller" and ok["rule"] == "thm-main"
    bad = qg.feller(star, spec, qg.Noise.diagonal([1.0, 1.0, 0.0, 0.0]))
    assert bad["verdict"] == "NotStrongFeller"

    st = star.st_active(omit="v3")
    assert st["i_star"] == ["v1", "v2"] and st["j_star"] == []

    interval = qg.Spectrum.interval(1.0, 10)
    noise = qg.Noise.diagonal([0.0, 1.0])
    ctrl = qg.null_control(interval, noise, [0.0, 1.0, 0.5, 0.25], 1.0, 10)
    assert ctrl["terminal_norm"] < 1e-3 * ctrl["uncontrolled_norm"]

    ens = qg.simulate_ensemble(interval, noise, t=1.0, steps=4, samples=2000, seed=7, threads=2)
    assert len(ens["coeffs"]) == 2000 and len(ens["times"]) == 5
    assert ens["covariance"]["max_deviation"] < 5.0

    reg = qg.regularity(qg.Spectrum.star(3, 1.0, 300), qg.Noise.full([[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)]), 1.0, [0.0, 0.3])
    assert [p["convergent"] for p in reg["profiles"]] == [True, False]

    inv = qg.invariant_measure(star, spec, qg.Noise.diagonal([0.0, 1.0, 0.0, 0.0]), 1.0)
    assert inv["exists"] == "No"

    try:
        qg.Graph.from_json('{"vertices": ["a", "b", "c"], "edges": [{"id": "x", "tail": "a", "head": "b", "length": 1}, {"id": "y", "tail": "b", "head": "c", "length": 1}, {"id": "z", "tail": "c", "head": "a", "length": 1}]}').st_active()
    except ValueError as e:
        assert "NotATree" in str(e)
    else:
        raise AssertionError("expected NotATree")

    print("pyqgraph smoke test passed")


if __name__ == "__main__":
    main()
