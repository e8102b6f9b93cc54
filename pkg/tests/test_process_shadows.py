"""Process shadows: two-sided snapshots of a channel and Choi-matrix estimation."""

import numpy as np
import numpy.linalg as la
import pytest

from procshadow.channels import named_channel, random_unitary_channel
from procshadow.process_shadows import (
    ProcessShadow,
    ShadowRecord,
    acquire_process_shadow,
    acquire_record,
    choi_mean_from_histogram,
    estimate_channel_functional,
    estimate_output_state,
    exact_pauli_record_distribution,
    materialize_choi_shadow,
    reconstruct_choi,
    single_shot_functional_values,
    verify_bin_independence,
)
from procshadow.ensembles import PauliFrame
from procshadow.qcore import (
    PauliString,
    apply_channel,
    basis_projector,
    choi_of_channel,
    random_density_matrix,
)
from procshadow.state_shadows import register_key


def test_record_validation():
    with pytest.raises(ValueError):
        ShadowRecord("00", PauliFrame("X"), PauliFrame("X"), "0")
    r = ShadowRecord("0", PauliFrame("X"), PauliFrame("Z"), "1")
    assert r.ensemble_in == "pauli"
    assert r.n_qubits == 1


def test_acquire_record_fields(rng):
    ch = named_channel("identity", 2)
    r = acquire_record(ch, "pauli", "clifford", rng)
    assert len(r.b_in) == 2 and len(r.b_out) == 2
    assert r.ensemble_in == "pauli" and r.ensemble_out == "clifford"


def test_choi_shadow_has_unit_trace(rng):
    ch = named_channel("hadamard", 1)
    for ens in ("pauli", "clifford"):
        r = acquire_record(ch, ens, ens, rng)
        z = materialize_choi_shadow(r)
        assert z.shape == (4, 4)
        assert np.trace(z) == pytest.approx(1.0, abs=1e-10)


def test_exact_record_distribution_identity_frozen():
    """Selected entries of the exact (input key, output key) distribution."""
    dist = exact_pauli_record_distribution(named_channel("identity", 1))
    assert dist.shape == (6, 6)
    assert np.sum(dist) == pytest.approx(1.0, abs=1e-12)
    z0 = register_key("Z", "0")
    z1 = register_key("Z", "1")
    # prepare |0>, identity, measure in Z: outcome 0 is certain
    assert dist[z0, z0] == pytest.approx(1 / 18, abs=1e-12)
    assert dist[z0, z1] == pytest.approx(0.0, abs=1e-12)


def test_exact_record_distribution_hadamard_frozen():
    dist = exact_pauli_record_distribution(named_channel("hadamard", 1))
    z0 = register_key("Z", "0")
    x0 = register_key("X", "0")
    x1 = register_key("X", "1")
    # prepare |0>, rotate to |+>, measure in X: outcome 0 is certain
    assert dist[z0, x0] == pytest.approx(1 / 18, abs=1e-12)
    assert dist[z0, x1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("n", [1, 2])
def test_exhaustive_average_is_normalized_choi(seed, n):
    """The exact-distribution average of snapshots equals the Choi matrix / 2^n."""
    rng = np.random.default_rng(seed)
    ch = random_unitary_channel(n, rng)
    dist = exact_pauli_record_distribution(ch)
    avg = choi_mean_from_histogram(dist, n)
    target = choi_of_channel(ch).matrix / 2**n
    assert la.norm(avg - target) < 1e-10


def test_histogram_mean_matches_snapshot_mean(rng):
    ch = named_channel("depolarizing", 1, 0.4)
    ps = acquire_process_shadow(ch, 40, "pauli", "pauli", rng)
    kin, kout = ps.keys
    hist = np.zeros((6, 6))
    np.add.at(hist, (kin, kout), 1.0 / 40)
    direct = sum(materialize_choi_shadow(r) for r in ps.records) / 40
    assert la.norm(choi_mean_from_histogram(hist, 1) - direct) < 1e-12


def test_acquire_process_shadow_basics(rng):
    ch = named_channel("identity", 1)
    ps = acquire_process_shadow(ch, 25, "pauli", "clifford", rng)
    assert len(ps) == 25
    assert ps.n_qubits == 1
    assert not ps.all_pauli
    head = ps.take(10)
    assert len(head) == 10
    assert head.records[0] is ps.records[0]


def test_acquire_deterministic():
    ch = named_channel("pauli-x", 1)
    a = acquire_process_shadow(ch, 15, "pauli", "pauli", np.random.default_rng(3))
    b = acquire_process_shadow(ch, 15, "pauli", "pauli", np.random.default_rng(3))
    assert np.array_equal(a.keys[0], b.keys[0])
    assert np.array_equal(a.keys[1], b.keys[1])


def test_reconstruct_choi_converges_identity():
    rng = np.random.default_rng(21)
    ch = named_channel("identity", 1)
    ps = acquire_process_shadow(ch, 30000, "pauli", "pauli", rng)
    choi = reconstruct_choi(ps)
    assert choi.normalized
    assert np.trace(choi.matrix).real == pytest.approx(1.0, abs=0.05)
    target = choi_of_channel(ch).matrix / 2
    assert la.norm(choi.matrix - target, 2) < 0.05


def test_reconstruct_choi_clifford_ensembles():
    rng = np.random.default_rng(22)
    ch = named_channel("hadamard", 1)
    ps = acquire_process_shadow(ch, 30000, "clifford", "clifford", rng)
    target = choi_of_channel(ch).matrix / 2
    assert la.norm(reconstruct_choi(ps).matrix - target, 2) < 0.05


def test_functional_single_shots_mean(rng):
    ch = named_channel("amplitude-damping", 1, 0.3)
    ps = acquire_process_shadow(ch, 64, "pauli", "pauli", rng)
    rho = basis_projector("1")
    obs = PauliString("Z").matrix
    vals = single_shot_functional_values(ps, rho, obs)
    assert vals.shape == (64,)
    est = estimate_channel_functional(ps, rho, obs)
    assert est == pytest.approx(float(np.mean(vals)), abs=1e-12)


def test_functional_converges_to_dense_value():
    # Tr[Z E(|1><1|)] for amplitude damping 0.3 is 0.3 - 0.7 = -0.4
    rng = np.random.default_rng(23)
    ch = named_channel("amplitude-damping", 1, 0.3)
    ps = acquire_process_shadow(ch, 50000, "pauli", "pauli", rng)
    est = estimate_channel_functional(ps, basis_projector("1"), PauliString("Z").matrix)
    assert est == pytest.approx(-0.4, abs=0.05)


def test_functional_median_of_means_groups(rng):
    ch = named_channel("identity", 1)
    ps = acquire_process_shadow(ch, 90, "pauli", "pauli", rng)
    rho = basis_projector("0")
    obs = PauliString("Z").matrix
    vals = single_shot_functional_values(ps, rho, obs)
    grouped = estimate_channel_functional(ps, rho, obs, n_groups=3)
    means = vals[:90].reshape(3, 30).mean(axis=1)
    assert grouped == pytest.approx(float(np.median(means)), abs=1e-12)


def test_estimate_output_state_converges():
    rng = np.random.default_rng(24)
    ch = named_channel("hadamard", 1)
    rho = basis_projector("0")
    ps = acquire_process_shadow(ch, 40000, "pauli", "pauli", rng)
    est = estimate_output_state(ps, rho)
    assert la.norm(est - apply_channel(ch, rho), 2) < 0.05


def test_estimate_output_state_mixed_ensembles():
    rng = np.random.default_rng(25)
    ch = named_channel("identity", 1)
    rho = np.diag([0.75, 0.25])
    ps = acquire_process_shadow(ch, 20000, "clifford", "pauli", rng)
    est = estimate_output_state(ps, rho)
    assert la.norm(est - rho, 2) < 0.07


@pytest.mark.parametrize("seed", [0, 1])
def test_bin_independence_random_channels(seed):
    rng = np.random.default_rng(seed)
    ch = random_unitary_channel(2, rng)
    report = verify_bin_independence(ch, 50, rng)
    assert report.n_sampled == 50
    assert report.max_normalization_dev < report.tolerance
    assert report.max_pauli_dev < report.tolerance
    assert report.passed


def test_process_shadow_rejects_mixed_sizes(rng):
    r1 = acquire_record(named_channel("identity", 1), "pauli", "pauli", rng)
    r2 = acquire_record(named_channel("identity", 2), "pauli", "pauli", rng)
    with pytest.raises(ValueError):
        ProcessShadow([r1, r2])
