"""Pairing process shadows with state shadows: weights, apply, compose, sign statistics."""

import math

import numpy as np
import numpy.linalg as la
import pytest
from hypothesis import given
from hypothesis import strategies as st

from procshadow.channels import named_channel, random_unitary_channel
from procshadow.process_shadows import (
    acquire_process_shadow,
    exact_pauli_record_distribution,
    materialize_choi_shadow,
)
from procshadow.qcore import Channel, apply_channel, basis_projector, choi_of_channel, partial_trace, random_density_matrix
from procshadow.shadow_algebra import (
    WEIGHT_SUPPORT,
    WeightedSnapshotSum,
    apply_process_to_state_shadow,
    big_weight_pmf,
    compose_process_shadows,
    exact_apply_sum,
    exact_compose_sum,
    negative_weight_probability,
    pair_weight,
    weight_sign_statistics,
)
from procshadow.state_shadows import (
    acquire_shadow,
    exact_pauli_snapshot_distribution,
    materialize_snapshot,
    qubit_key,
    snapshot_matrices,
)

AXES = "XYZ"


def test_pair_weight_five_cases():
    assert pair_weight("X", 0, "X", 0) == 2.5
    assert pair_weight("X", 0, "X", 1) == -2.0
    assert pair_weight("Y", 0, "Y", 0) == -2.0
    assert pair_weight("Y", 0, "Y", 1) == 2.5
    assert pair_weight("X", 1, "Z", 0) == 0.25


def test_pair_weight_full_table_vs_dense():
    """All 36 single-qubit weights equal (1/2) Tr[t^T t'] on snapshot matrices."""
    snaps = snapshot_matrices(1)
    for mu in AXES:
        for b in (0, 1):
            for mu_p in AXES:
                for b_p in (0, 1):
                    t = snaps[qubit_key(mu, b)]
                    t_p = snaps[qubit_key(mu_p, b_p)]
                    dense = 0.5 * np.trace(t.T @ t_p).real
                    assert pair_weight(mu, b, mu_p, b_p) == pytest.approx(dense, abs=1e-12)


def test_weight_rows_have_uniform_multiset():
    # every (mu, b) sees the same multiset of weights across the partner key
    expected = sorted([2.5, 0.25, 0.25, 0.25, 0.25, -2.0])
    for mu in AXES:
        for b in (0, 1):
            row = sorted(
                pair_weight(mu, b, mu_p, b_p) for mu_p in AXES for b_p in (0, 1)
            )
            assert row == pytest.approx(expected)
    assert sorted(WEIGHT_SUPPORT) == pytest.approx(expected)


def test_negative_weight_probability_binomial_oracle():
    # negative product iff an odd number of factors equal -2 (prob 1/6 each)
    for n in range(1, 13):
        direct = sum(
            math.comb(n, k) * (1 / 6) ** k * (5 / 6) ** (n - k)
            for k in range(1, n + 1, 2)
        )
        assert negative_weight_probability(n) == pytest.approx(direct, abs=1e-13)
    assert negative_weight_probability(3) == pytest.approx(19 / 54, abs=1e-15)


def test_big_weight_pmf():
    for n in (1, 2, 5):
        total = sum(big_weight_pmf(n, k) for k in range(n + 1))
        assert total == pytest.approx(1.0, abs=1e-12)
    # one site: the weight is "big" (|w| = 5/2 or 2) iff the axes match
    assert big_weight_pmf(1, 1) == pytest.approx(1 / 3)
    assert big_weight_pmf(2, 0) == pytest.approx(4 / 9)


def test_sign_statistics_exact_fields():
    rng = np.random.default_rng(0)
    stats = weight_sign_statistics(4, 2000, rng)
    assert stats.n_sites == 4
    assert stats.samples == 2000
    assert stats.p_negative_exact == pytest.approx(0.5 * (1 - (2 / 3) ** 4), abs=1e-15)
    assert stats.p_negative_exact + stats.p_positive_exact == pytest.approx(1.0)
    assert stats.mean_log_abs_exact == pytest.approx(-2.6238263546969742, abs=1e-12)
    assert stats.std_log_abs_lognormal == pytest.approx(
        math.sqrt(4 / 6) * math.log(5), abs=1e-12
    )


def test_sign_statistics_monte_carlo_matches_exact():
    rng = np.random.default_rng(1)
    for n in (1, 3, 6):
        stats = weight_sign_statistics(n, 40000, rng)
        se = math.sqrt(stats.p_negative_exact * stats.p_positive_exact / 40000)
        assert abs(stats.p_negative - stats.p_negative_exact) < 4 * se
        assert stats.p_negative + stats.p_positive == pytest.approx(1.0)
        assert stats.mean_log_abs == pytest.approx(
            stats.mean_log_abs_exact, abs=5 * stats.std_log_abs / math.sqrt(40000) + 1e-6
        )


def test_mean_log_abs_exact_single_site():
    stats = weight_sign_statistics(1, 10, np.random.default_rng(2))
    # (2/3) log(1/4) + (1/6) log 5 per site
    assert stats.mean_log_abs_exact == pytest.approx(-0.6559565886742436, abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("n", [1, 2])
def test_exact_apply_sum_recovers_channel_action(seed, n):
    """Exhaustive pairing of exact distributions reproduces E(rho) exactly."""
    rng = np.random.default_rng(seed)
    ch = random_unitary_channel(n, rng)
    rho = random_density_matrix(n, rng)
    wss = exact_apply_sum(
        exact_pauli_record_distribution(ch), exact_pauli_snapshot_distribution(rho), n
    )
    assert la.norm(wss.materialize() - apply_channel(ch, rho)) < 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_exact_compose_sum_recovers_composition(seed):
    rng = np.random.default_rng(seed)
    ch_x = random_unitary_channel(1, rng)
    ch_y = random_unitary_channel(1, rng)
    composed = Channel(
        tuple(ky @ kx for kx in ch_x.kraus for ky in ch_y.kraus)
    )
    wss = exact_compose_sum(
        exact_pauli_record_distribution(ch_x),
        exact_pauli_record_distribution(ch_y),
        1,
    )
    target = choi_of_channel(composed).matrix / 2
    assert la.norm(wss.materialize() - target) < 1e-10


def test_apply_sampled_identity_channel():
    rng = np.random.default_rng(5)
    ch = named_channel("identity", 1)
    rho = basis_projector("0")
    ps = acquire_process_shadow(ch, 20000, "pauli", "pauli", rng)
    ss = acquire_shadow(rho, 20000, "pauli", rng)
    wss = apply_process_to_state_shadow(ps, ss)
    assert wss.n_terms == 20000 * 20000
    est = wss.materialize()
    assert np.trace(est).real == pytest.approx(1.0, abs=0.1)
    assert la.norm(est - rho, 2) < 0.1


def test_compose_sampled_bit_flips_cancel():
    rng = np.random.default_rng(6)
    ch = named_channel("pauli-x", 1)
    ps_x = acquire_process_shadow(ch, 30000, "pauli", "pauli", rng)
    ps_y = acquire_process_shadow(ch, 30000, "pauli", "pauli", rng)
    wss = compose_process_shadows(ps_x, ps_y)
    target = choi_of_channel(named_channel("identity", 1)).matrix / 2
    assert la.norm(wss.materialize() - target, 2) < 0.2


def test_apply_single_pair_matches_dense_contraction(rng):
    """One record paired with one snapshot: streamed term equals the dense formula."""
    ch = named_channel("hadamard", 1)
    ps = acquire_process_shadow(ch, 1, "pauli", "pauli", rng)
    ss = acquire_shadow(basis_projector("0"), 1, "pauli", rng)
    wss = apply_process_to_state_shadow(ps, ss)
    terms = list(wss.iter_terms())
    assert len(terms) == 1
    weight, snap = terms[0]
    streamed = weight * snap
    zeta = materialize_choi_shadow(ps.records[0])
    sigma = materialize_snapshot(ss.snapshots[0])
    dense = 2.0 * partial_trace(np.kron(sigma.T, np.eye(2)) @ zeta, "A")
    assert la.norm(streamed - dense) < 1e-12


def test_iter_terms_sum_equals_materialize(rng):
    ch = named_channel("depolarizing", 1, 0.5)
    ps = acquire_process_shadow(ch, 6, "pauli", "pauli", rng)
    ss = acquire_shadow(basis_projector("1"), 5, "pauli", rng)
    wss = apply_process_to_state_shadow(ps, ss)
    total = sum(w * snap for w, snap in wss.iter_terms()) / wss.n_terms
    assert la.norm(total - wss.materialize()) < 1e-12

    ps_b = acquire_process_shadow(ch, 4, "pauli", "pauli", rng)
    comp = compose_process_shadows(ps, ps_b)
    total = sum(w * snap for w, snap in comp.iter_terms()) / comp.n_terms
    assert la.norm(total - comp.materialize()) < 1e-12


def test_histogram_only_sum_has_no_terms():
    hist = np.full((6, 6), 1 / 36)
    wss = WeightedSnapshotSum("apply", 1, hist, np.full(6, 1 / 6))
    with pytest.raises(ValueError):
        next(wss.iter_terms())
    assert wss.materialize().shape == (2, 2)


def test_apply_rejects_clifford_records(rng):
    ch = named_channel("identity", 1)
    ps = acquire_process_shadow(ch, 3, "clifford", "pauli", rng)
    ss = acquire_shadow(basis_projector("0"), 3, "pauli", rng)
    with pytest.raises(ValueError):
        apply_process_to_state_shadow(ps, ss)


def test_compose_rejects_mismatched_sizes(rng):
    ps_a = acquire_process_shadow(named_channel("identity", 1), 3, "pauli", "pauli", rng)
    ps_b = acquire_process_shadow(named_channel("identity", 2), 3, "pauli", "pauli", rng)
    with pytest.raises(ValueError):
        compose_process_shadows(ps_a, ps_b)
