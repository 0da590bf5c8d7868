import numpy as np
import pytest

from emlab.circuits import build_parity_circuit
from emlab.dense import basis_probabilities, basis_state, evolve, tv_distance
from emlab.limits import le_cam_bound
from emlab.parity import (
    PARITY_COLUMNS,
    ParityDistribution,
    SQOracleState,
    StatQuery,
    expectation_Zb,
    expectation_Zb_bruteforce,
    mixed_target,
    parity_sample,
    parity_tv,
    parity_tv_bruteforce,
    sq_oracle_answer,
    weak_to_strong_experiment,
    yatracos_sample_size,
    yatracos_select,
)
from emlab.records import records_to_csv


def test_distribution_matches_circuit():
    for s in ("0", "1", "011", "1101"):
        n = len(s)
        dense = basis_probabilities(evolve(basis_state(n + 1), build_parity_circuit(s)))
        assert np.allclose(ParityDistribution(s, n).probabilities(), dense, atol=1e-12)


def test_samples_satisfy_parity():
    z = parity_sample("1011", seed=3, size=2000)
    assert ParityDistribution("1011", 4).contains(z).all()
    out = parity_sample("11", seed=0)
    assert len(out) == 3 and (int(out[0]) ^ int(out[1])) == int(out[2])
    with pytest.raises(ValueError):
        parity_sample(5)


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_zb_bridge_against_bruteforce(n):
    rng = np.random.default_rng(n)
    for s in rng.integers(0, 2**n, size=3):
        for b in range(2 ** (n + 1)):
            assert expectation_Zb(int(s), b, n) == expectation_Zb_bruteforce(int(s), b, n)


def test_zb_examples():
    assert expectation_Zb("101", "1011") == 1
    assert expectation_Zb("101", "1001") == 0
    assert expectation_Zb("101", "0000") == 1


def test_tv_is_half_and_le_cam_quarter():
    rng = np.random.default_rng(0)
    for _ in range(40):
        n = int(rng.integers(1, 8))
        s, t = rng.choice(2**n, size=2, replace=False)
        assert parity_tv(int(s), int(t), n) == parity_tv_bruteforce(int(s), int(t), n) == 0.5
    assert parity_tv("01", "01") == 0
    assert le_cam_bound(parity_tv("01", "11")) == 0.25
    with pytest.raises(ValueError):
        parity_tv("01", "011")


def test_tv_triangle_inequality():
    n = 3
    P = [ParityDistribution(s, n).probabilities() for s in range(8)]
    mix = mixed_target(5, n)
    assert tv_distance(mix, P[5]) == pytest.approx(1 / 16)
    for a in P:
        for b in P:
            assert tv_distance(a, b) <= tv_distance(a, mix) + tv_distance(mix, b) + 1e-12


def test_clamp_oracle_and_replay_audit():
    n, tau = 5, 0.1
    st = SQOracleState("10110", n)
    secret_b = (0b10110 << 1) | 1
    assert sq_oracle_answer(st, StatQuery.zb(secret_b, tau)) == pytest.approx(0.9)
    assert sq_oracle_answer(st, StatQuery.zb((0b00001 << 1) | 1, tau)) == 0.5
    assert sq_oracle_answer(st, StatQuery.zb(0, tau)) == pytest.approx(0.9)
    assert st.counter == 3 and len(st.log) == 3
    for b, truth, ans in st.log:
        assert abs(ans - truth) <= tau + 1e-15
    replay = SQOracleState("10110", n)
    again = [sq_oracle_answer(replay, StatQuery.zb(b, tau)) for b, _, _ in st.log]
    assert again == [a for _, _, a in st.log]


def test_wide_tolerance_reveals_nothing():
    st = SQOracleState(3, 3)
    assert all(sq_oracle_answer(st, StatQuery.zb(b, 0.5)) == 0.5 for b in range(16))


def test_general_queries_and_honest_policy():
    st = SQOracleState("11", 2, "honest-noisy", seed=1)
    q = StatQuery(lambda x, y: (y == 1).astype(int), 0.05)
    ans = sq_oracle_answer(st, q)
    assert abs(ans - 0.5) <= 0.05
    bad = StatQuery(lambda x, y: 2 * y, 0.1)
    with pytest.raises(ValueError):
        sq_oracle_answer(st, bad)
    with pytest.raises(ValueError):
        SQOracleState(0, 2, "lying")
    with pytest.raises(ValueError):
        StatQuery.zb(1, -0.1)


def test_selection_returns_member_and_scheffe_at_two():
    rng = np.random.default_rng(2)
    n = 3
    hyps = [ParityDistribution(1, n), ParityDistribution(6, n)]
    for trial in range(30):
        z = rng.integers(0, 2 ** (n + 1), size=int(rng.integers(5, 60)))
        fast = yatracos_select(z, hyps)
        dense = [h.probabilities() for h in hyps]
        general = yatracos_select(z, dense)
        assert fast.index == general.index
        # Scheffe: the set where the first hypothesis is larger decides
        A = dense[0] > dense[1]
        emp = np.mean(A[z])
        d = [abs(h[A].sum() - emp) for h in dense]
        assert fast.index == int(np.argmin(d))


def test_fast_and_generic_scores_agree():
    rng = np.random.default_rng(4)
    n = 4
    secrets = rng.choice(16, size=7, replace=False)
    hyps = [ParityDistribution(int(s), n) for s in secrets]
    for seed in range(10):
        z = parity_sample(int(secrets[seed % 7]), n, seed, size=40)
        z[:8] = rng.integers(0, 32, size=8)
        a = yatracos_select(z, hyps)
        b = yatracos_select(z, [h.probabilities() for h in hyps])
        assert a.index == b.index and a.score == pytest.approx(b.score, abs=1e-12)


def test_three_properness_on_mixed_target():
    n, eps, delta = 6, 0.1, 0.1
    hyps = [ParityDistribution(s, n) for s in range(2**n)]
    rng = np.random.default_rng(8)
    m = yatracos_sample_size(len(hyps), eps, delta)
    worst = 0.0
    for rep in range(20):
        s = int(rng.integers(0, 2**n))
        target = mixed_target(s, n)
        z = rng.choice(len(target), size=m, p=target)
        res = yatracos_select(z, hyps, eps, delta)
        assert res.guarantee_applies
        worst = max(worst, tv_distance(target, res.hypothesis.probabilities()))
    assert worst <= 3 / 16 + eps


def test_select_self_n8():
    n, eps, delta = 8, 0.1, 0.1
    hyps = [ParityDistribution(s, n) for s in range(2**n)]
    m = yatracos_sample_size(len(hyps), eps, delta)
    rng = np.random.default_rng(5)
    hits = 0
    reps = 20
    for _ in range(reps):
        s = int(rng.integers(0, 2**n))
        hits += yatracos_select(parity_sample(s, n, rng, size=m), hyps).index == s
    assert hits / reps >= 1 - delta


def test_selection_input_errors():
    with pytest.raises(ValueError):
        yatracos_select([], [ParityDistribution(0, 2)])
    with pytest.raises(ValueError):
        yatracos_select([1], [])
    with pytest.raises(ValueError):
        yatracos_select([1], [ParityDistribution(0, 2), ParityDistribution(0, 2)])


def test_experiment_contrast_small():
    rep, rows = weak_to_strong_experiment(6, 0.1, 8, seed=1, reps=60, sampling_reps=30)
    assert rep["sampling_success_rate"] >= 0.9
    assert rep["sq_success_rate"] <= 8 / 64 + 0.1
    assert rep["queries_used"] <= 8 * 60
    assert records_to_csv(rows).splitlines()[0] == ",".join(PARITY_COLUMNS)
    assert {r["route"] for r in rows} == {"sampling", "sq"}


def test_experiment_deterministic_across_workers():
    a = weak_to_strong_experiment(5, 0.1, 4, seed=3, reps=20, sampling_reps=10, workers=1)
    b = weak_to_strong_experiment(5, 0.1, 4, seed=3, reps=20, sampling_reps=10, workers=2)
    assert records_to_csv(a[1]) == records_to_csv(b[1])
    assert a[0] == b[0]


def test_experiment_errors():
    with pytest.raises(ValueError):
        weak_to_strong_experiment(4, 0.1, 0)
    with pytest.raises(ValueError):
        weak_to_strong_experiment(4, 0.1, 17)
    with pytest.raises(ValueError):
        weak_to_strong_experiment(15, 0.1, 8)
