"""Randomized invariants, each checked on at least 1000 generated cases."""
import io

import numpy as np
from hypothesis import given, settings, strategies as st

from memlearn import device, network, output, solver, toy
from memlearn.device import BcmParams, BmsParams
from memlearn.network import NetworkDims, build_network
from memlearn.trainer import TargetMap, TrainerConfig, compute_error, read_winner, train_until_learned

from oracles import nodal_oracle

N = 1000
many = settings(max_examples=N, deadline=None)

seeds = st.integers(0, 2**32 - 1)
betas = st.floats(0.8, 1.0)
vths = st.floats(0.05, 0.1)
rmins = st.floats(50.0, 100.0)
dts = st.floats(1e-3, 5.0)
polarities = st.sampled_from([1, -1])


@st.composite
def bms_device(draw):
    p = BmsParams(draw(betas), draw(vths), draw(rmins), 5000.0)
    r = draw(st.floats(p.r_min, p.r_max))
    return p, r


@st.composite
def bcm_device(draw):
    p = BcmParams(**{**device.BCM_REFERENCE, "r_min": draw(st.floats(500.0, 1000.0)), "r_max": 1e4})
    return p, draw(st.floats(0.0, 1.0))


@st.composite
def small_dims(draw, max_in=3, max_bulk=5, max_out=3):
    return NetworkDims(draw(st.integers(1, max_in)), draw(st.integers(1, max_bulk)), draw(st.integers(1, max_out)))


@many
@given(bms_device(), st.floats(-1.0, 1.0, exclude_min=True, exclude_max=True), polarities, dts)
def test_dead_zone_identity(dev, frac, pol, dt):
    p, r = dev
    v = frac * p.v_threshold
    assert device.step_state(p, pol, r, v, dt) == r


@many
@given(bms_device(), st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=20), polarities, dts)
def test_bms_clamping(dev, volts, pol, dt):
    p, r = dev
    for v in volts:
        r = device.step_state(p, pol, r, v, dt)
        assert p.r_min <= r <= p.r_max


@many
@given(bcm_device(), st.lists(st.floats(-8.0, 8.0), min_size=1, max_size=20), polarities,
       st.floats(1e-5, 1e-2))
def test_bcm_clamping(dev, volts, pol, dt):
    p, x = dev
    for v in volts:
        x = device.step_state(p, pol, x, v, dt)
        assert 0.0 <= x <= 1.0


@many
@given(st.one_of(bms_device(), bcm_device()), st.floats(-6.0, 6.0), dts)
def test_polarity_antisymmetry(dev, v, dt):
    p, s = dev
    if isinstance(p, BcmParams):
        dt = dt * 1e-3
    assert device.step_state(p, -1, s, v, dt) == device.step_state(p, 1, s, -v, dt)


@many
@given(bms_device(), st.floats(0.0, 2.0), dts)
def test_bms_monotone_sign(dev, excess, dt):
    p, r = dev
    up = p.v_threshold + excess
    assert device.step_state(p, 1, r, up, dt) <= r
    assert device.step_state(p, 1, r, -up, dt) >= r


@many
@given(bcm_device(), st.floats(-20.0, 20.0))
def test_bcm_boundary_absorption(dev, v):
    p, _ = dev
    if v >= -p.v_th1:
        assert device.bcm_rate(1.0, v, p) == 0.0
    if v <= p.v_th0:
        assert device.bcm_rate(0.0, v, p) == 0.0


@many
@given(small_dims(), seeds, st.floats(0.0, 1.0), st.floats(0.01, 3.0))
def test_perturb_count_exact(dims, seed, fraction, factor):
    rng = np.random.default_rng(seed)
    net = build_network(dims, device.BMS, rng)
    for lay in net.layers:
        lay.state[...] = rng.uniform(lay.params.r_min, 2000.0)
    before = net.all_resistances()
    count = network.perturb(net, fraction, factor, rng)
    assert count == int(np.floor(fraction * net.n_devices))
    after = net.all_resistances()
    # factor 1 or a clamp can hide a selected device, never reveal an extra one
    assert np.count_nonzero(after != before) <= count
    net.validate()


@many
@given(small_dims(max_bulk=8), seeds, st.booleans())
def test_shuffle_conservation(dims, seed, per_layer):
    rng = np.random.default_rng(seed)
    net = build_network(dims, device.BMS, rng)
    for lay in net.layers:
        lay.state[...] = rng.uniform(lay.params.r_min, 5000.0)
    out = network.shuffle_devices(net, rng, per_layer=per_layer)
    assert np.array_equal(np.sort(out.all_resistances()), np.sort(net.all_resistances()))
    out.validate()


@many
@given(small_dims(), seeds, st.sampled_from(device.MODELS))
def test_read_purity(dims, seed, model):
    rng = np.random.default_rng(seed)
    net = build_network(dims, model, rng)
    cfg = TrainerConfig.for_model(model)
    h = net.state_hash()
    read_winner(net, int(rng.integers(dims.n_in)), cfg)
    target = TargetMap(tuple(int(k) for k in rng.integers(dims.n_out, size=dims.n_in)))
    err = compute_error(net, target, cfg)
    assert 0 <= err <= dims.n_in
    assert net.state_hash() == h


@many
@given(small_dims(), seeds, st.floats(-1.0, 1.0).filter(lambda v: abs(v) > 1e-6))
def test_solver_matches_oracle(dims, seed, v):
    rng = np.random.default_rng(seed)
    r1 = rng.uniform(50, 5000, (dims.n_in, dims.n_bulk))
    r2 = rng.uniform(50, 5000, (dims.n_bulk, dims.n_out))
    i, k = int(rng.integers(dims.n_in)), int(rng.integers(dims.n_out))
    ref_v, ref_i = nodal_oracle(r1, r2, i, k, v)
    scale = abs(v)
    for method in solver.METHODS:
        sol = solver.solve_conductances(1 / r1, 1 / r2, i, k, v, method)
        assert np.max(np.abs(sol.node_voltages - ref_v)) <= 1e-9 * scale
        assert abs(sol.terminal_current - ref_i) <= 1e-9 * abs(ref_i)
        assert sol.conservation_error() <= 1e-9
        lo, hi = min(0.0, v), max(0.0, v)
        assert np.all(sol.node_voltages >= lo - 1e-12 * scale)
        assert np.all(sol.node_voltages <= hi + 1e-12 * scale)


@many
@given(small_dims(), seeds, st.floats(0.1, 10.0))
def test_solver_linearity(dims, seed, c):
    rng = np.random.default_rng(seed)
    g1 = 1 / rng.uniform(50, 5000, (dims.n_in, dims.n_bulk))
    g2 = 1 / rng.uniform(50, 5000, (dims.n_bulk, dims.n_out))
    a = solver.solve_conductances(g1, g2, 0, 0, 0.1)
    b = solver.solve_conductances(g1, g2, 0, 0, 0.1 * c)
    np.testing.assert_allclose(b.node_voltages, c * a.node_voltages, rtol=1e-10, atol=1e-14)


@many
@given(seeds, st.integers(1, 4), st.integers(1, 6), st.integers(1, 4))
def test_toy_punishment_only_exactly_two(seed, n_in, n_mid, n_out):
    rng = np.random.default_rng(seed)
    tn = toy.build_toy(n_in, n_mid, n_out, rng)
    target = TargetMap(tuple(int(k) for k in rng.integers(n_out, size=n_in)))
    w1, w2 = tn.w1.copy(), tn.w2.copy()
    rec = toy.toy_step(tn, target, rng)
    d = np.concatenate([(w1 - tn.w1).ravel(), (w2 - tn.w2).ravel()])
    assert np.all(d >= 0)
    if rec.punished:
        assert np.count_nonzero(d) == 2
        assert np.allclose(d[d != 0], tn.delta)
    else:
        assert np.count_nonzero(d) == 0


@many
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 4), st.integers(1, 3))
def test_csv_determinism(seed, n_in, n_bulk, n_out):
    def run():
        rng = np.random.default_rng(seed)
        net = build_network(NetworkDims(n_in, n_bulk, n_out), device.BMS, rng)
        target = TargetMap(tuple(int(k) for k in rng.integers(n_out, size=n_in)))
        cfg = TrainerConfig(max_training_steps=5, max_corrections=5)
        buf = io.StringIO()
        output.emit_csv(train_until_learned(net, target, cfg, rng), buf)
        return buf.getvalue()

    assert run() == run()
