"""Ring-polymer energetics: hand values, gradients, symmetries, JSON."""

import numpy as np
import pytest

from qti.basis import PI_QUARTER, PotentialCoeffs
from qti.errors import ConfigError, DimensionError
from qti.ringpoly import (
    GaussianBump,
    Observable,
    RingParams,
    RingState,
    ScaledHermite,
    action,
    force,
    hamiltonian,
    ring_average,
)


def test_action_hand_value():
    # N=2, M=1, beta=2 -> beta_N=1; q=(0,1), V harmonic:
    # spring = 1*( (0-1)^2 + (1-0)^2 )/(2*1) = 1, potential sum = 0 + 0.5
    params = RingParams(N=2, M=1.0, beta=2.0)
    V = PotentialCoeffs.zero(2)
    assert action([0.0, 1.0], V, params) == pytest.approx(1.5, abs=1e-14)


def test_hamiltonian_hand_value():
    params = RingParams(N=2, M=2.0, beta=2.0)
    V = PotentialCoeffs.zero(1)
    st = RingState(np.array([0.0, 1.0]), np.array([2.0, 0.0]))
    # kinetic 4/(2*2)=1, spring 2*(1+1)/(2*1)=2, potential 0.5
    assert hamiltonian(st, V, params) == pytest.approx(3.5, abs=1e-14)


def test_force_matches_hamiltonian_gradient():
    rng = np.random.default_rng(3)
    params = RingParams(N=8, M=3.0, beta=1.5)
    V = PotentialCoeffs(5, rng.normal(size=6))
    q = rng.normal(size=8)
    f = force(q, V, params)
    h = 1e-6
    for i in range(8):
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        sp = RingState(qp, np.zeros(8))
        sm = RingState(qm, np.zeros(8))
        fd = -(hamiltonian(sp, V, params) - hamiltonian(sm, V, params)) / (2 * h)
        assert f[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_cyclic_relabeling_invariance():
    rng = np.random.default_rng(4)
    params = RingParams(N=6, M=1.0, beta=3.0)
    V = PotentialCoeffs(3, rng.normal(size=4))
    q = rng.normal(size=6)
    p = rng.normal(size=6)
    s0 = action(q, V, params)
    h0 = hamiltonian(RingState(q, p), V, params)
    for k in range(1, 6):
        assert action(np.roll(q, k), V, params) == pytest.approx(s0, abs=1e-12)
        st = RingState(np.roll(q, k), np.roll(p, k))
        assert hamiltonian(st, V, params) == pytest.approx(h0, abs=1e-12)


def test_action_vs_hamiltonian_relation():
    # S_N = beta_N * (H_N - kinetic) at p = 0
    rng = np.random.default_rng(5)
    params = RingParams(N=4, M=2.0, beta=1.0)
    V = PotentialCoeffs(2, rng.normal(size=3))
    q = rng.normal(size=4)
    h = hamiltonian(RingState(q, np.zeros(4)), V, params)
    assert action(q, V, params) == pytest.approx(params.beta_N * h, abs=1e-12)


def test_ring_average_hand_value():
    b = GaussianBump(0.0, 1.0)
    q = np.array([0.0, 1.0])
    assert ring_average(b, q) == pytest.approx(0.5 * (1.0 + np.exp(-1.0)), abs=1e-14)


def test_observable_bounds_and_values():
    b = GaussianBump(-1.0, 2.0)
    assert b.value(-1.0) == 1.0 and b.bound == 1.0
    hline = ScaledHermite(3, 2.0)
    x = np.linspace(-3, 3, 50)
    assert np.all(np.abs(hline.value(x)) <= hline.bound + 1e-12)
    assert hline.bound == pytest.approx(PI_QUARTER)


def test_observable_json_roundtrip_and_dispatch():
    for obs in (GaussianBump(0.25, 1.0), ScaledHermite(2, 3.0)):
        back = Observable.from_json(obs.to_json())
        assert back == obs
    with pytest.raises(ConfigError):
        Observable.from_json('{"kind": "mystery", "parameters": {}, "bound": 1.0}')


def test_validation_errors():
    with pytest.raises(ConfigError):
        RingParams(N=1, M=1.0, beta=1.0)
    with pytest.raises(ConfigError):
        RingParams(N=4, M=-1.0, beta=1.0)
    with pytest.raises(DimensionError):
        RingState(np.zeros(3), np.zeros(4))
    with pytest.raises(ConfigError):
        RingState(np.array([np.inf]), np.array([0.0]))
    with pytest.raises(ConfigError):
        GaussianBump(0.0, -1.0)
    with pytest.raises(ConfigError):
        ScaledHermite(-1, 1.0)
    params = RingParams(N=4, M=1.0, beta=1.0)
    with pytest.raises(DimensionError):
        force(np.zeros(3), PotentialCoeffs.zero(1), params)
    assert params.beta_N == pytest.approx(0.25)
