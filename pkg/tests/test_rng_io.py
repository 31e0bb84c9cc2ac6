import json

import numpy as np
import pytest
from scipy import stats

from conftest import random_model
from ipsdrift import rng
from ipsdrift.core import ModeLattice
from ipsdrift.io import (load_flow, load_trajectory, save_flow, save_normal_equations,
                         save_trajectory)
from ipsdrift.likelihood import assemble_normal_equations
from ipsdrift.simulate import InitialLaw, simulate_ips, simulate_reference_flow


class TestRng:
    def test_deterministic_and_order_free(self):
        ids = np.arange(100)
        a = rng.uniforms(5, rng.NOISE, ids, 3, 4)
        b = rng.uniforms(5, rng.NOISE, ids[::-1], 3, 4)[::-1]
        assert np.array_equal(a, b)
        assert np.all((a > 0) & (a < 1))

    def test_streams_differ(self):
        ids = np.arange(10)
        assert not np.array_equal(rng.uniforms(1, rng.INIT, ids, 0, 1), rng.uniforms(1, rng.NOISE, ids, 0, 1))
        assert not np.array_equal(rng.uniforms(1, rng.NOISE, ids, 0, 1), rng.uniforms(1, rng.NOISE, ids, 1, 1))

    def test_normal_distribution(self):
        z = rng.normals(9, rng.NOISE, np.arange(20_000), 0, 3).ravel()
        assert stats.kstest(z, "norm").pvalue > 1e-3
        assert abs(np.corrcoef(z[:-1], z[1:])[0, 1]) < 0.02

    def test_derive_seed(self):
        seeds = {rng.derive_seed(0, n, r) for n in (64, 128) for r in range(50)}
        assert len(seeds) == 100
        assert rng.derive_seed(1, 2) == rng.derive_seed(1, 2)
        assert 0 <= rng.derive_seed(2**70, -1) < 2**63


class TestFiles:
    def test_trajectory_round_trip(self, tmp_path, truth):
        data = simulate_ips(truth, 5, 1.0, 7, InitialLaw(), 3)
        path = tmp_path / "t.bin"
        save_trajectory(data, path)
        header = json.loads(path.read_bytes().split(b"\n", 1)[0])
        assert header == {"d": 1, "N": 5, "T": 1.0, "M": 7, "dt": 1 / 7, "seed": 3, "format": "f64le"}
        back = load_trajectory(path)
        assert back.positions.tobytes() == data.positions.tobytes()
        assert back.increments.tobytes() == data.increments.tobytes()
        body = path.read_bytes().split(b"\n", 1)[1]
        np.testing.assert_array_equal(np.frombuffer(body[:8], "<f8")[0], data.positions[0, 0, 0])

    def test_truncated_trajectory(self, tmp_path, truth):
        path = tmp_path / "t.bin"
        save_trajectory(simulate_ips(truth, 2, 1.0, 3, InitialLaw(), 0), path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError):
            load_trajectory(path)

    @pytest.mark.parametrize("keep", [False, True])
    def test_flow_round_trip(self, tmp_path, truth, keep):
        lat = ModeLattice(1, 3, True)
        flow, ens = simulate_reference_flow(truth, 16, 1.0, 8, InitialLaw(), lat, 2, keep_positions=True)
        save_flow(flow, tmp_path / "f.bin", ens if keep else None)
        back, ens2 = load_flow(tmp_path / "f.bin")
        assert back.coeffs.tobytes() == flow.coeffs.tobytes()
        assert back.lattice == lat and back.n_ref == 16 and back.seed == 2
        assert (ens2 is not None) == keep
        if keep:
            assert np.array_equal(ens2, ens)

    def test_normal_equations_dump(self, tmp_path, truth, rng):
        data = simulate_ips(truth, 8, 1.0, 8, InitialLaw(), 0)
        ne = assemble_normal_equations(data, ModeLattice(1, 1, True), ModeLattice(1, 1))
        save_normal_equations(ne, tmp_path / "ne.bin")
        head, body = (tmp_path / "ne.bin").read_bytes().split(b"\n", 1)
        assert json.loads(head)["labels"] == ne.labels()
        assert len(body) == 8 * (ne.p * ne.p + ne.p)
