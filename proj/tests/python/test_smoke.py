"""Python smoke tests: the bound surface end to end plus one CLI round trip."""

import json
import math
import os
import pathlib
import subprocess
import tempfile

import numpy as np
import pytest

import finitebath as fb


@pytest.fixture(scope="module")
def bath():
    return fb.sample_bath(100, fb.ZeemanDistribution(1.0, 0.2), 1.0, 7)


@pytest.fixture(scope="module")
def kernel(bath):
    return fb.MeasurementKernel("indicator", 1.0, 8.0 * bath.sigma_n)


def test_sampling_is_deterministic(bath):
    again = fb.sample_bath(100, fb.ZeemanDistribution(1.0, 0.2), 1.0, 7)
    assert list(again.zeeman) == list(bath.zeeman)
    assert len(bath.zeeman) == 100
    assert min(bath.zeeman) > 0


def test_beta_star_closed_form():
    uniform = fb.sample_bath(100, fb.ZeemanDistribution(1.0, 0.0), 1.0, 1)
    beta = fb.solve_beta_star(-18.0, uniform)
    assert beta == pytest.approx(2.0 * math.atanh(0.36), abs=1e-9)
    assert fb.canonical_energy(beta, uniform) == pytest.approx(-18.0, abs=1e-8)


def test_volumes_and_entropy(bath, kernel):
    v0 = fb.volume(0.0, kernel, bath)
    assert v0 > 0
    assert fb.boltzmann_entropy(0.0, kernel, bath) == pytest.approx(
        math.log(v0), rel=1e-12
    )
    assert fb.boltzmann_beta(-18.0, kernel, bath) == pytest.approx(
        18.0 / bath.sigma_n**2, rel=5e-3
    )


def test_rates_and_kms(bath, kernel):
    spectral = fb.make_spectral_density(bath, 0.01, 1.0, True)
    assert spectral.j_value(1.0) == pytest.approx(0.12533141373155, rel=1e-10)
    assert fb.gamma1(-1.0, -2.0, 1.0, spectral, bath, kernel) > 0.0
    assert fb.gamma1(-1.0, -2.0, 2.0, spectral, bath, kernel) == 0.0
    assert fb.kms_residual(-8.0, 1.0, spectral, bath, kernel) < 0.05


def test_emme_hierarchy_small_run(bath, kernel):
    system = fb.SystemSpec(0.5, 1.0)
    spectral = fb.make_spectral_density(bath, 0.01, 1.0, True)
    rm = fb.build_rate_matrix(system, bath, kernel, spectral)
    assert rm.exact_blocks
    pb = fb.canonical_bath_populations(0.75, rm.grid, bath, kernel)
    p0 = fb.product_state(np.array([0.0, 1.0]), pb, rm.grid)
    times = [0.0, 20.0, 60.0, 120.0]
    tr = fb.evolve_emme(rm, p0, times, bath)
    total = np.array([js.sum() for js in tr["joint_states"]])
    assert np.max(np.abs(total - 1.0)) < 1e-9
    assert np.max(np.abs(tr["u_tot"] - tr["u_tot"][0])) < 1e-6 * bath.sigma_n
    # Excited population decays towards the Gibbs weight.
    p1 = np.array([p[1] for p in tr["system_populations"]])
    assert p1[0] == pytest.approx(1.0, abs=1e-12)
    assert p1[-1] < 0.4

    kg = fb.build_kappa_grid(system, bath, kernel, spectral)
    star = fb.evolve_bms_adaptive(system, 0.75, np.array([0.0, 1.0]), times, kg, bath)
    fixed = fb.evolve_bms_fixed(system, 0.75, np.array([0.0, 1.0]), times, kg, bath)
    for i in range(len(times)):
        gap = np.abs(star["system_populations"][i] - fixed["system_populations"][i]).sum()
        assert gap < 2e-2  # near-infinite bath regime


def test_oracle_roundtrip():
    tiny = fb.sample_bath(4, fb.ZeemanDistribution(1.0, 0.2), 1.0, 7)
    kernel = fb.MeasurementKernel("indicator", 1.0, 8.0 * tiny.sigma_n)
    system = fb.SystemSpec(0.5, 1.0)
    prop = fb.ExactPropagator(system, tiny, 0.0)
    rho0 = fb.thermal_product_state(1, 0.5, system, tiny)
    jd = prop.measured_joint(rho0, 13.0, kernel, kernel.grid)
    assert jd.total() == pytest.approx(1.0, abs=1e-12)
    assert jd.system_marginal()[1] == pytest.approx(1.0, abs=1e-12)


def test_cli_round_trip_and_determinism():
    cli = os.environ.get("FINITEBATH_CLI")
    if not cli:
        pytest.skip("FINITEBATH_CLI not set")
    cfg = {
        "scenario": "spectrum",
        "seed": 7,
        "bath": {"n_spins": 10, "zeeman_dist": {"mean": 1.0, "std": 0.2}},
        "kernel": {"kind": "indicator", "delta_e": 1.0},
    }
    with tempfile.TemporaryDirectory() as td:
        cfg_path = pathlib.Path(td) / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        outs = []
        for sub in ("a", "b"):
            out_dir = pathlib.Path(td) / sub
            r = subprocess.run(
                [cli, "spectrum", "--config", str(cfg_path), "--output-dir", str(out_dir)],
                capture_output=True,
                text=True,
            )
            assert r.returncode == 0, r.stderr
            outs.append((out_dir / "spectrum.csv").read_bytes())
            assert (out_dir / "metadata.json").exists()
        assert outs[0] == outs[1]  # bit-identical rerun
        # Invalid config exits with code 2.
        bad = pathlib.Path(td) / "bad.json"
        bad.write_text(json.dumps({"scenario": "spectrum"}))
        r = subprocess.run(
            [cli, "spectrum", "--config", str(bad)], capture_output=True, text=True
        )
        assert r.returncode == 2
