import json
import math

import numpy as np
import pytest

import nsmx


def test_projection_and_norms():
    box = nsmx.Box(2, 16)
    f = nsmx.Field.random_band(box, seed=1, k_lo=1, k_hi=4, decay=1.0)
    g = nsmx.leray_project(f)
    assert g.divergence_l2() < 1e-12 * max(g.l2(), 1.0)
    assert g.l2() <= f.l2() + 1e-12
    assert g.sobolev(1.0) >= g.l2() - 1e-12  # (1+|xi|^2)^{1/2} >= 1


def test_numpy_round_trip():
    box = nsmx.Box(2, 8)
    f = nsmx.Field.random_band(box, seed=7, k_lo=1, k_hi=2, decay=1.0)
    arr = f.to_numpy()
    assert arr.shape == (3, box.modes())
    assert arr.dtype == np.complex128
    g = nsmx.Field.from_numpy(box, arr)
    assert abs(g.l2() - f.l2()) < 1e-15
    with pytest.raises(ValueError):
        nsmx.Field.from_numpy(box, np.zeros((2, 2), dtype=np.complex128))


def test_curl_of_gradient_free_field():
    box = nsmx.Box(3, 8)
    B = nsmx.leray_project(nsmx.Field.random_band(box, seed=3, k_lo=1, k_hi=2, decay=1.0))
    A = nsmx.vector_potential(B)
    assert nsmx.curl(A).l2() == pytest.approx(B.l2(), rel=1e-12)
    h = nsmx.magnetic_helicity(B)
    assert abs(h) <= B.sobolev(-0.5, homogeneous=True) ** 2 * (1 + 1e-12)


def test_ohm_solver():
    box = nsmx.Box(2, 16)
    v = nsmx.leray_project(nsmx.Field.random_band(box, seed=11, k_lo=1, k_hi=4, decay=1.0))
    E = nsmx.leray_project(nsmx.Field.random_band(box, seed=12, k_lo=1, k_hi=4, decay=1.0))
    B = nsmx.leray_project(nsmx.Field.random_band(box, seed=13, k_lo=1, k_hi=4, decay=1.0))
    j, iterations, residual = nsmx.solve_ohm(v, E, B, kappa=0.05, sigma=1.0, c=1.0)
    assert residual <= 1e-12
    assert iterations >= 1
    assert j.divergence_l2() < 1e-10 * j.l2()


RUN = {
    "dim": 2,
    "n": 16,
    "variant": "NSM_GO",
    "params": {"nu": 1.0, "sigma": 1.0, "c": 1.0, "kappa": 0.1},
    "stepper": {"dt": 0.005},
    "initial": {"family": "random_band", "amplitude": 0.3, "seed": 5},
    "t_final": 0.05,
    "observe_every": 2,
}


def test_simulation_diagnostics():
    out = nsmx.simulate_json(json.dumps(RUN))
    records = out["records"]
    assert len(records) >= 3
    assert records[0]["t"] == 0.0
    assert records[-1]["t"] == pytest.approx(0.05)
    # dissipative system: energy decreases monotonically at these amplitudes
    energies = [r["energy"] for r in records]
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert abs(out["energy_residual"]) < 1e-8
    for r in records:
        assert r["div_B"] < 1e-10
        assert math.isfinite(r["helicity"])


def test_simulation_is_deterministic():
    a = nsmx.simulate_json(json.dumps(RUN))
    b = nsmx.simulate_json(json.dumps(RUN))
    assert a["records"][-1]["energy"] == b["records"][-1]["energy"]
    assert a["energy_residual"] == b["energy_residual"]


def test_initial_state_normalization():
    run = dict(RUN)
    run["initial"] = {"family": "random_band", "amplitude": 0.25, "seed": 9}
    state = nsmx.initial_state(json.dumps(run))
    # box default smoothness for d=2 is 2.5
    assert state.xs_norm(2.5) == pytest.approx(0.25, rel=1e-10)
    assert state.t == 0.0
    assert state.v.divergence_l2() < 1e-12
