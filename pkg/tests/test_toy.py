import itertools
import math

import numpy as np
import pytest
from hypothesis import given

from qtick import qla, toy
from qtick.errors import ValidationError
from qtick.qla import StateVector
from qtick.rng import derive_seed, make_rng
from qtick.toy import Su2Params, ToyConfig

from .conftest import angles, axes, seeds

R2 = 1 / math.sqrt(2)


def oracle_path_probability(cfg, lambdas):
    """Path probability by explicit projectors (I + lam Sigma)/2, independent of the engine."""
    u, v = cfg.U.unitary().matrix, cfg.V.unitary().matrix
    sigma = qla.pauli_dot(cfg.axis_a).matrix
    psi = np.linalg.eigh(sigma)[1][:, 1 if cfg.lambda0 == 1 else 0]
    lam, prob = cfg.lambda0, 1.0
    for nxt in lambdas:
        w = u if lam == 1 else v
        sigma = w @ sigma @ w.conj().T
        projected = 0.5 * (np.eye(2) + nxt * sigma) @ psi
        p = float(np.vdot(projected, projected).real)
        prob *= p
        if p == 0:
            return 0.0
        psi, lam = projected / math.sqrt(p), nxt
    return prob


def test_init_examples():
    assert toy.init_toy(ToyConfig()).psi == StateVector([1, 0])
    s = toy.init_toy(ToyConfig(axis_a=qla.X_AXIS, lambda0=-1))
    np.testing.assert_allclose(s.psi.amplitudes, [R2, -R2], atol=1e-15)
    with pytest.raises(ValidationError):
        ToyConfig(axis_a=qla.X_AXIS, initial_state=StateVector([1, 0]))
    with pytest.raises(ValidationError):
        ToyConfig(lambda0=0)


def test_explicit_initial_state_accepted():
    cfg = ToyConfig(axis_a=qla.X_AXIS, lambda0=1, initial_state=StateVector([-R2, -R2]))
    assert toy.init_toy(cfg).psi == StateVector([-R2, -R2])


def test_identity_laws_freeze_the_universe():
    ident = Su2Params(qla.Z_AXIS, 0.0)
    cfg = ToyConfig(axis_a=qla.random_axis(np.random.default_rng(1)), U=ident, V=ident, steps=6)
    run = toy.run_toy(cfg)
    assert run.lambdas == (1,) * 6
    assert all(r.outcome_probability == pytest.approx(1, abs=1e-12) for r in run.records)
    assert run.final.psi.fidelity(toy.init_toy(cfg).psi) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.0, 3.0])
def test_first_tick_probability_closed_form(theta):
    cfg = ToyConfig(U=Su2Params(qla.X_AXIS, theta))
    tree = toy.enumerate_tree(cfg, 1)
    assert tree.probability_of((1,)) == pytest.approx(math.cos(theta / 2) ** 2, abs=1e-14)


def test_step_uses_lambda_to_select_law():
    cfg = ToyConfig()
    u, v = cfg.laws()
    s = toy.init_toy(cfg)
    assert toy.next_test(s, (u, v)) == u.conjugate(s.sigma)
    flipped = toy.ToyState(0, s.sigma, StateVector([0, 1]), -1)
    assert toy.next_test(flipped, (u, v)) == v.conjugate(s.sigma)


def test_run_toy_zero_steps_and_determinism():
    cfg = ToyConfig(steps=0)
    run = toy.run_toy(cfg)
    assert run.records == [] and run.final.psi == toy.init_toy(cfg).psi
    cfg = ToyConfig(steps=12, seed=99)
    a, b = toy.run_toy(cfg), toy.run_toy(cfg)
    assert all(x.same_as(y) for x, y in zip(a.records, b.records))
    assert [r.test_id for r in a.records] == [f"Sigma{i}" for i in range(1, 13)]
    assert a.records[0].input_event_ids == ("E0",)


def test_tree_depth_two_has_four_histories():
    tree = toy.enumerate_tree(ToyConfig(), 2)
    assert sorted(leaf.lambdas for leaf in tree.leaves()) == sorted(itertools.product((1, -1), repeat=2))
    assert [leaf.lambdas for leaf in tree.leaves()] == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_tree_matches_projector_oracle():
    cfg = ToyConfig()
    tree = toy.enumerate_tree(cfg, 6)
    for leaf in tree.leaves():
        assert leaf.probability == pytest.approx(oracle_path_probability(cfg, leaf.lambdas), abs=1e-13)


def test_tree_children_sum_to_parent():
    tree = toy.enumerate_tree(ToyConfig(), 7)
    for node in tree.nodes():
        if node.children:
            assert sum(c.probability for c in node.children) == pytest.approx(node.probability, abs=1e-12)


def test_tree_prunes_impossible_branches():
    # Sigma_1 = Sigma_0 under identity U: the -1 branch has probability 0
    cfg = ToyConfig(U=Su2Params(qla.Z_AXIS, 0.0))
    tree = toy.enumerate_tree(cfg, 3)
    assert [leaf.lambdas for leaf in tree.leaves()] == [(1, 1, 1)]
    assert len(tree.pruned) == 3


def test_tree_depth_cap():
    with pytest.raises(ValidationError):
        toy.enumerate_tree(ToyConfig(), 21)


def test_sigma_stays_in_pauli_family():
    tree = toy.enumerate_tree(ToyConfig(axis_a=qla.AxisVector.normalized(1, 2, 3)), 6)
    for node in tree.nodes():
        m = node.state.sigma.matrix
        assert abs(np.trace(m)) <= 1e-10
        assert abs(np.linalg.det(m) + 1) <= 1e-10


@given(axes(), axes(), angles)
def test_so3_shadow_matches_conjugation(a, w_axis, w_angle):
    w = qla.su2_from(w_axis, w_angle)
    sigma = qla.pauli_dot(a)
    rotated = toy.so3_rotation(w) @ a.as_array()
    direct = w.conjugate(sigma).matrix
    assert np.abs(qla.pauli_dot(qla.AxisVector.normalized(*rotated)).matrix - direct).max() <= 1e-10
    np.testing.assert_allclose(toy.bloch_axis(w.conjugate(sigma)), rotated, atol=1e-12)


def test_past_cannot_be_retrodicted():
    tree = toy.enumerate_tree(ToyConfig(), 2)
    by_final = {}
    for leaf in tree.leaves():
        by_final.setdefault(leaf.lambdas[-1], []).append(leaf.lambdas)
    assert any(len(histories) >= 2 for histories in by_final.values())


@given(seeds)
def test_run_is_a_tree_path(seed):
    cfg = ToyConfig(steps=5, seed=seed)
    run = toy.run_toy(cfg)
    tree = toy.enumerate_tree(cfg, 5)
    path_prob = math.prod(r.outcome_probability for r in run.records)
    assert path_prob == pytest.approx(tree.probability_of(run.lambdas), rel=1e-12)


def test_run_frequencies_small_sample():
    cfg = ToyConfig(steps=2)
    tree = toy.enumerate_tree(cfg, 2)
    n = 4000
    counts = {}
    for i in range(n):
        lams = toy.run_toy(cfg, make_rng(derive_seed(5, i))).lambdas
        counts[lams] = counts.get(lams, 0) + 1
    for leaf in tree.leaves():
        p = leaf.probability
        assert abs(counts.get(leaf.lambdas, 0) / n - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_json_shapes():
    cfg = ToyConfig(steps=3)
    d = toy.run_to_dict(cfg, toy.run_toy(cfg))
    assert set(d) == {"config", "ticks", "lambdas", "final"} and len(d["ticks"]) == 3
    t = toy.tree_to_dict(cfg, toy.enumerate_tree(cfg, 2))
    assert len(t["leaves"]) == 4 and set(t["leaves"][0]) == {"lambdas", "prob"}
