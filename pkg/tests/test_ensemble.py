import numpy as np
import pytest

from aqm.algebra import Context, masa_from
from aqm.ensemble import (
    MeasurementRecord,
    QuantumState,
    born_distribution,
    check_postulate5,
    check_postulate6,
    condition_on_event,
    measure,
    monte_carlo_mean,
    sample_character,
    write_records_csv,
)
from aqm.errors import ImpossibleEventError, IncompatibleObservableError
from aqm.rng import stream
from conftest import SIGMA_X, SIGMA_Z, random_density, random_hermitian, random_unitary

KET0 = QuantumState.pure([1.0, 0.0])
PLUS = QuantumState.pure([1.0, 1.0])
Z_CTX = masa_from(SIGMA_Z, context_id="z")
X_CTX = masa_from(SIGMA_X, context_id="x")


class TestQuantumState:
    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            QuantumState(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError):
            QuantumState(np.diag([1.5, -0.5]))

    def test_pure_normalizes(self):
        psi = QuantumState.pure([3.0, 0.0])
        assert np.allclose(psi.rho, np.diag([1.0, 0.0]))


class TestBornDistribution:
    def test_eigenstate_is_deterministic(self):
        probs = born_distribution(KET0, Z_CTX).probs
        assert probs[_z_branch(1)] == pytest.approx(1.0)

    def test_symmetry_in_conjugate_context(self):
        assert np.allclose(born_distribution(KET0, X_CTX).probs, [0.5, 0.5])

    def test_maximally_mixed_is_flat(self):
        psi = QuantumState.maximally_mixed(2)
        for ctx in (Z_CTX, X_CTX):
            assert np.allclose(born_distribution(psi, ctx).probs, [0.5, 0.5])


def _z_branch(value):
    # branch of the sigma_z context carrying the given eigenvalue
    for i, p in enumerate(Z_CTX.projectors):
        if np.trace(p @ SIGMA_Z).real == pytest.approx(value):
            return i
    raise AssertionError


class TestSampleCharacter:
    def test_deterministic_distribution(self):
        rng = stream(0)
        for _ in range(50):
            assert sample_character(KET0, Z_CTX, rng).branch == _z_branch(1)

    def test_symmetric_frequency(self):
        rng = stream(1)
        n = 100_000
        hits = sum(sample_character(PLUS, Z_CTX, rng).branch == 0 for _ in range(n))
        assert abs(hits / n - 0.5) <= 0.005  # 3 sigma at p = 0.5

    def test_replay_with_fixed_seed(self):
        a = [sample_character(PLUS, Z_CTX, stream(42, i)).branch for i in range(20)]
        b = [sample_character(PLUS, Z_CTX, stream(42, i)).branch for i in range(20)]
        assert a == b


class TestMeasure:
    def test_eigenstate(self):
        value, post, record = measure(KET0, SIGMA_Z, Z_CTX, stream(0), label="sz")
        assert value == pytest.approx(1.0)
        assert np.allclose(post.rho, KET0.rho)
        assert record.observable == "sz" and record.context_id == "z"

    def test_reproducibility(self):
        rng = stream(2)
        for _ in range(200):
            v1, post, _ = measure(PLUS, SIGMA_Z, Z_CTX, rng)
            v2, _, _ = measure(post, SIGMA_Z, Z_CTX, rng)
            assert v1 in (1.0, -1.0)
            assert v2 == pytest.approx(v1)

    def test_incompatible_raises(self):
        with pytest.raises(IncompatibleObservableError):
            measure(PLUS, SIGMA_X, Z_CTX, stream(0))

    def test_same_distribution_under_two_contexts_dim4(self):
        # A = sigma_z on a doubled register; two refinements of its
        # degenerate eigenspaces give the same value distribution
        a = np.diag([1.0, 1.0, -1.0, -1.0])
        mix = np.zeros((4, 4), dtype=complex)
        mix[:2, :2] = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        mix[2:, 2:] = np.array([[1, -1], [1, 1]]) / np.sqrt(2)
        q = masa_from(a)
        qp = masa_from(a, refinement=mix)
        rng = np.random.default_rng(9)
        psi = QuantumState(random_density(4, rng))
        # oracle: Born weight of each eigenprojector of A
        p_plus = np.diag([1.0, 1.0, 0.0, 0.0])
        expected = np.trace(psi.rho @ p_plus).real
        for ctx in (q, qp):
            dist = born_distribution(psi, ctx)
            weight = sum(
                prob
                for prob, proj in zip(dist.probs, ctx.projectors)
                if np.trace(proj @ a).real > 0
            )
            assert weight == pytest.approx(expected, abs=1e-10)
        draws = stream(3)
        n = 20_000
        f1 = sum(measure(psi, a, q, draws)[0] > 0 for _ in range(n)) / n
        f2 = sum(measure(psi, a, qp, draws)[0] > 0 for _ in range(n)) / n
        sigma = np.sqrt(expected * (1 - expected) / n)
        assert abs(f1 - expected) <= 4 * sigma + 1e-12
        assert abs(f2 - expected) <= 4 * sigma + 1e-12


class TestMonteCarloMean:
    def test_deterministic_value(self):
        est, err = monte_carlo_mean(KET0, SIGMA_Z, Z_CTX, 500, stream(0))
        assert est == pytest.approx(1.0)
        assert err == pytest.approx(0.0)

    def test_symmetric_mean(self):
        est, err = monte_carlo_mean(PLUS, SIGMA_Z, Z_CTX, 1_000_000, stream(1))
        assert abs(est) <= 0.004  # 4 sigma at unit variance

    def test_shifted_observable(self):
        # oracle: tr(rho (sz + 2 sx)) = 2 for the plus state
        a = SIGMA_Z + 2.0 * SIGMA_X
        assert np.trace(PLUS.rho @ a).real == pytest.approx(2.0)
        ctx = masa_from(a)
        est, err = monte_carlo_mean(PLUS, a, ctx, 100_000, stream(2))
        assert abs(est - 2.0) <= 4 * err


class TestPostulate5:
    def test_same_context_trivially_passes(self):
        rep = check_postulate5(PLUS, SIGMA_Z, Z_CTX, Z_CTX, 2000, stream(0))
        assert rep.exact_distance == pytest.approx(0.0, abs=1e-15)
        assert rep.passed

    def test_degenerate_refinements_agree(self):
        a = np.diag([1.0, 1.0, 2.0, 2.0])
        mix = np.zeros((4, 4), dtype=complex)
        mix[:2, :2] = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        mix[2:, 2:] = np.eye(2)
        q = masa_from(a)
        qp = masa_from(a, refinement=mix)
        rng = np.random.default_rng(4)
        psi = QuantumState(random_density(4, rng))
        rep = check_postulate5(psi, a, q, qp, 2000, stream(1))
        assert rep.exact_distance <= 1e-10
        assert rep.passed

    def test_biased_device_fails(self):
        a = np.diag([1.0, 1.0, 2.0, 2.0])
        q = masa_from(a)
        psi = QuantumState.maximally_mixed(4)

        calls = {"n": 0}

        def biased(ctx, size):
            # second device always reports branch 0
            calls["n"] += 1
            if calls["n"] == 1:
                dist = born_distribution(psi, ctx)
                return stream(5).choice(len(dist.probs), size=size, p=dist.probs)
            return np.zeros(size, dtype=int)

        rep = check_postulate5(psi, a, q, q, 2000, stream(2), sampler=biased)
        assert not rep.passed


class TestPostulate6:
    def test_pauli_pair(self):
        assert check_postulate6(PLUS, SIGMA_X, SIGMA_Z)

    def test_cancellation(self):
        a = random_hermitian(3, np.random.default_rng(0))
        assert check_postulate6(QuantumState.maximally_mixed(3), a, -a)

    def test_random_pairs_dim8(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            psi = QuantumState(random_density(8, rng))
            assert check_postulate6(psi, random_hermitian(8, rng), random_hermitian(8, rng))


class TestConditionOnEvent:
    def test_identity_is_noop(self):
        out = condition_on_event(PLUS, np.eye(2))
        assert np.allclose(out.rho, PLUS.rho)

    def test_rank2_slice_of_mixed_state(self):
        e = np.diag([1.0, 1.0, 0.0, 0.0])
        out = condition_on_event(QuantumState.maximally_mixed(4), e)
        assert np.allclose(out.rho, np.diag([0.5, 0.5, 0.0, 0.0]))

    def test_projects_pure_state(self):
        e = np.diag([1.0, 0.0])
        out = condition_on_event(PLUS, e)
        assert np.allclose(out.rho, np.diag([1.0, 0.0]))

    def test_impossible_event(self):
        with pytest.raises(ImpossibleEventError):
            condition_on_event(KET0, np.diag([0.0, 1.0]))

    def test_conditioned_event_has_unit_mean(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            psi = QuantumState(random_density(dim, rng))
            u = random_unitary(dim, rng)
            k = int(rng.integers(1, dim))
            e = u[:, :k] @ u[:, :k].conj().T
            out = condition_on_event(psi, e)
            assert out.mean(e) == pytest.approx(1.0, abs=1e-10)


class TestFunctionalPositivity:
    def test_quadratic_means_are_nonnegative(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            dim = int(rng.integers(2, 9))
            psi = QuantumState(random_density(dim, rng))
            g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            assert np.trace(psi.rho @ g.conj().T @ g).real >= -1e-10


def test_records_csv_roundtrip(tmp_path):
    records = [
        MeasurementRecord("sz", "z", 1.0, 0, 7),
        MeasurementRecord("sz", "z", -1.0, 1, 7),
    ]
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "trial,seed,context,observable,value"
    assert lines[1] == "0,7,z,sz,1.0"
    assert lines[2] == "1,7,z,sz,-1.0"
