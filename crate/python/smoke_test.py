"""Smoke test for the hetpca Python module.

Build and install first, e.g.
    maturin build --release -m crates/hetpca-py/Cargo.toml -o dist && pip install dist/hetpca-*.whl
"""

import json
import math
import os
import tempfile

import hetpca


def main():
    # homoscedastic closed form and the general solver agree
    noise = hetpca.NoiseProfile([1.0])
    general = hetpca.predict_component(10.0, 1.0, noise)
    closed = hetpca.predict_homoscedastic(10.0, 1.0, 1.0)
    assert math.isclose(general.subspace_recovery, 9 / 11, rel_tol=1e-12)
    assert math.isclose(general.beta, closed.beta, rel_tol=1e-12)
    assert general.regime == "theorem"

    # a rare very noisy level pushes the component below the transition
    bad = hetpca.NoiseProfile([0.01, 99.01], [0.99, 0.01])
    below = hetpca.predict_component(10.0, 1.0, bad)
    assert not below.above_transition and below.subspace_recovery == 0.0
    assert below.regime == "conjectured"

    checks = hetpca.check_spectrum_identities(2.0, 0.7, hetpca.NoiseProfile([0.2, 1.5], [0.4, 0.6]))
    assert all(passed for _, passed in checks.values()), checks

    report = hetpca.predict(10.0, [1.0, 0.8], hetpca.NoiseProfile([0.1, 3.25], [0.9, 0.1]))
    assert len(report["components"]) == 2 and report["overall"] is not None

    sim = hetpca.simulate(400, 40, [2.0], hetpca.NoiseProfile([0.5, 1.5]), field="complex", seed=3)
    assert 0.5 < sim["metrics"]["components"][0]["subspace_sq_cos"] <= 1.0 + 1e-12

    try:
        hetpca.NoiseProfile([1.0], [0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("invalid proportions accepted")

    config = json.dumps({
        "sweep_kind": "p2-sweep", "n": 200, "d": 20, "amplitudes": [1.0, 0.8], "variances": [0.1, 3.25],
        "axis1": {"start": 0.0, "stop": 1.0, "count": 3}, "trials": 2, "master_seed": 5,
    })
    csv = hetpca.sweep_csv(config, threads=1)
    assert csv.splitlines()[0] == hetpca.CSV_HEADER
    assert csv == hetpca.sweep_csv(config, threads=2)
    assert len(hetpca.sweep(config)) == 3 * 10

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "data.bin")
        hetpca.export_dataset(path, 30, 10, [1.0], hetpca.NoiseProfile.homoscedastic(0.5), seed=1)
        assert os.path.getsize(path) > 0 and os.path.exists(path + ".json")

    print("hetpca python smoke test passed")


if __name__ == "__main__":
    main()
