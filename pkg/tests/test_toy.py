import numpy as np
import pytest

from memlearn import experiments, toy
from memlearn.toy import ToyNetwork
from memlearn.trainer import TargetMap, random_map


def test_single_middle_node():
    tn = toy.build_toy(3, 1, 3, np.random.default_rng(0))
    assert all(toy.toy_propagate(tn, i)[0] == 0 for i in range(3))


def test_hand_built_chain():
    w1 = np.array([[0.1, 0.9], [0.8, 0.2]])  # w1[j, i]
    w2 = np.array([[0.3, 0.6], [0.7, 0.4]])  # w2[k, j]
    tn = ToyNetwork(w1, w2)
    assert toy.toy_propagate(tn, 0) == (1, 0)
    assert toy.toy_propagate(tn, 1) == (0, 1)
    assert list(toy.toy_outputs(tn)) == [0, 1]


def test_propagate_is_pure():
    tn = toy.build_toy(4, 10, 4, np.random.default_rng(1))
    w1, w2 = tn.w1.copy(), tn.w2.copy()
    for i in range(4):
        toy.toy_propagate(tn, i)
    toy.toy_outputs(tn)
    assert np.array_equal(tn.w1, w1) and np.array_equal(tn.w2, w2)


def test_correct_step_changes_nothing():
    tn = ToyNetwork(np.array([[1.0]]), np.array([[1.0]]))
    rec = toy.toy_step(tn, TargetMap((0,)), np.random.default_rng(0))
    assert not rec.punished
    assert tn.w1[0, 0] == 1.0 and tn.w2[0, 0] == 1.0


def test_wrong_step_depresses_two_weights():
    tn = toy.build_toy(3, 5, 3, np.random.default_rng(2), delta=0.05)
    i = 0
    j, k = toy.toy_propagate(tn, i)
    target = TargetMap(tuple((k + 1) % 3 for _ in range(3)))
    w1, w2 = tn.w1.copy(), tn.w2.copy()

    class FixedInput:
        def integers(self, n):
            return i

    rec = toy.toy_step(tn, target, FixedInput())
    assert rec.punished
    d1, d2 = w1 - tn.w1, w2 - tn.w2
    assert np.count_nonzero(d1) == 1 and d1[j, i] == pytest.approx(0.05)
    assert np.count_nonzero(d2) == 1 and d2[k, j] == pytest.approx(0.05)


def test_deterministic_trajectory():
    def run():
        rng = np.random.default_rng(3)
        tn = toy.build_toy(6, 50, 6, rng)
        return toy.toy_train(tn, [TargetMap((5, 4, 3, 2, 1, 0))], 5000, rng)

    a, b = run(), run()
    assert a.errors == b.errors and a.learned_at == b.learned_at


def test_already_satisfied_map():
    tn = toy.build_toy(4, 20, 4, np.random.default_rng(4))
    current = TargetMap(tuple(int(k) for k in toy.toy_outputs(tn)))
    trace = toy.toy_train(tn, [current], 100, np.random.default_rng(5))
    assert trace.errors[0] == 0 and trace.learned_at == [1]


def test_six_maps_learned_in_sequence():
    rng = np.random.default_rng(6)
    tn = toy.build_toy(6, 300, 6, rng)
    trace = toy.toy_train(tn, list(experiments.TOY_MAPS_6.values()), 200_000, rng)
    assert trace.all_learned
    assert trace.learned_at == sorted(trace.learned_at)
    assert trace.errors[-1] == 0


def test_weights_never_increase():
    rng = np.random.default_rng(7)
    tn = toy.build_toy(4, 30, 4, rng)
    w1, w2 = tn.w1.copy(), tn.w2.copy()
    toy.toy_train(tn, [random_map(4, 4, rng) for _ in range(3)], 3000, rng)
    assert np.all(tn.w1 <= w1) and np.all(tn.w2 <= w2)


@pytest.mark.parametrize("delta", [0.01, 0.1, 1.0])
def test_learning_finishes_for_any_delta(delta):
    t = toy.first_map_learning_time(6, 100, 6, TargetMap((1, 2, 3, 4, 5, 0)), seed=8, delta=delta)
    assert t is not None


def test_validation():
    with pytest.raises(ValueError):
        ToyNetwork(np.ones((2, 2)), np.ones((2, 2)), delta=0.0)
    with pytest.raises(ValueError):
        ToyNetwork(np.ones((3, 2)), np.ones((2, 2)))
