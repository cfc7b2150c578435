import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltzbench.device import (
    AnnealSchedule,
    DeviceEmulator,
    DeviceProfile,
    SamplesetCapError,
    apply_ice,
    autoscale,
    device_sample,
    effective_alpha,
    load_profile,
    load_schedule,
    save_profile,
    save_schedule,
)
from boltzbench.diagnostics import distribution_distance, empirical_distribution
from boltzbench.embedding import chimera_graph, embed_model, find_embedding
from boltzbench.ising import IsingModel, all_states, exact_distribution, random_model
from boltzbench.samplers import SamplerConfig, gibbs_sample

ZERO_ICE = dict(ice_sigma_h=0.0, ice_sigma_J=0.0, background_chi=0.0, dac_step=0.0, h_scale_spread=0.0)


def test_autoscale_min_ratio():
    m = IsingModel(2, [4.0, 0.0], {(0, 1): 0.5})
    scaled, s = autoscale(m, DeviceProfile())
    assert s == 0.5
    assert scaled.h[0] == 2.0 and scaled.J[(0, 1)] == 0.25


def test_autoscale_identity_and_zero_model():
    m = IsingModel(2, [1.0, -2.0], {(0, 1): -1.0})
    assert autoscale(m, DeviceProfile()) == (m, 1.0)
    assert autoscale(IsingModel.zeros(3), DeviceProfile())[1] == 1.0


def test_autoscale_asymmetric_range():
    prof = DeviceProfile(J_range=(-1.0, 0.5))
    _, s = autoscale(IsingModel(2, [0, 0], {(0, 1): 1.0}), prof)
    assert s == 0.5
    _, s = autoscale(IsingModel(2, [0, 0], {(0, 1): -1.0}), prof)
    assert s == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_scaling_is_linear_in_energy(seed, n):
    m = random_model(n, 0.7, (-6, 6), (-4, 4), np.random.default_rng(seed)).with_offset(1.25)
    scaled, s = autoscale(m, DeviceProfile())
    assert scaled.max_abs_h() <= 2 + 1e-12 and scaled.max_abs_J() <= 1 + 1e-12
    S = all_states(n) if n <= 8 else np.random.default_rng(seed).choice([-1, 1], size=(256, n))
    np.testing.assert_allclose(scaled.energies(S), s * (m.energies(S) - m.offset) + s * m.offset, atol=1e-12)


def test_ice_identity_when_knobs_zero():
    m = random_model(6, 0.6, rng=np.random.default_rng(0))
    out = apply_ice(m, DeviceProfile(**ZERO_ICE), np.random.default_rng(1))
    assert out == m


def test_ice_dac_rounding():
    prof = DeviceProfile(**{**ZERO_ICE, "dac_step": 0.05})
    out = apply_ice(IsingModel(1, [0.513]), prof, np.random.default_rng(0))
    assert out.h[0] == pytest.approx(0.50, abs=1e-15)


def test_ice_half_normal_mean():
    prof = DeviceProfile(**{**ZERO_ICE, "ice_sigma_h": 0.01})
    out = apply_ice(IsingModel.zeros(10_000), prof, np.random.default_rng(2))
    expected = 0.01 * math.sqrt(2 / math.pi)  # 0.00798
    assert abs(np.abs(out.h).mean() - expected) <= 0.1 * expected


def test_ice_background_susceptibility():
    prof = DeviceProfile(**{**ZERO_ICE, "background_chi": 0.1})
    m = IsingModel(3, [1.0, 0.5, 0.0], {(0, 1): -1.0, (1, 2): 0.5})
    out = apply_ice(m, prof, np.random.default_rng(0))
    # h_i + chi * sum_j J_ij h_j
    np.testing.assert_allclose(out.h, [1.0 - 0.05, 0.5 - 0.1 + 0.0, 0.0 + 0.025], atol=1e-15)


def test_ice_deterministic_per_rng():
    m = random_model(5, 1.0, rng=np.random.default_rng(0))
    a = apply_ice(m, DeviceProfile(), np.random.default_rng(9))
    b = apply_ice(m, DeviceProfile(), np.random.default_rng(9))
    assert a == b and a != m


def test_effective_alpha_examples():
    prof = DeviceProfile(alpha_base=1.0, alpha_eq=3.0, tau_relax=1.0)
    assert effective_alpha(AnnealSchedule(), prof, 0.7) == pytest.approx(0.7)
    assert effective_alpha(AnnealSchedule(pause_s=0.4, pause_duration=0.0), prof, 0.7) == pytest.approx(0.7)
    long = AnnealSchedule(pause_s=0.4, pause_duration=20.0)
    assert abs(effective_alpha(long, prof, 0.7) - 0.7 * 3.0) < 1e-6
    one = AnnealSchedule(pause_s=0.4, pause_duration=1.0)
    assert effective_alpha(one, prof, 0.5) == pytest.approx(0.5 * (1 + 2 * (1 - math.exp(-1))), rel=1e-12)
    assert effective_alpha(one, prof, 1.0) == pytest.approx(2.2642, abs=1e-4)


def test_schedule_validation():
    AnnealSchedule(points=((0, 10, 1), (1, 1, 10)))
    with pytest.raises(ValueError):
        AnnealSchedule(points=((0, 5, 1), (1, 0.05, 5)))  # A(0) < 10 B(0)
    with pytest.raises(ValueError):
        AnnealSchedule(points=((0, 5, 0.1), (0.5, 6, 1), (1, 0.05, 5)))  # A increases
    with pytest.raises(ValueError):
        AnnealSchedule(t_f=0)
    with pytest.raises(ValueError):
        AnnealSchedule(pause_s=1.0, pause_duration=1)
    with pytest.raises(ValueError):
        AnnealSchedule(pause_duration=1)


def test_profile_validation():
    with pytest.raises(ValueError):
        DeviceProfile(h_range=(1, 2))
    with pytest.raises(ValueError):
        DeviceProfile(readout_fidelity=0.4)
    with pytest.raises(ValueError):
        DeviceProfile(spinbath_rho=1.0)
    with pytest.raises(ValueError):
        DeviceProfile(max_reads=0)
    with pytest.raises(ValueError):
        DeviceProfile.from_dict({"nonsense": 1})


def test_config_files_roundtrip(tmp_path):
    prof = DeviceProfile.noiseless(alpha_base=0.3, max_reads=500)
    save_profile(prof, tmp_path / "cfg" / "profile.json")
    assert load_profile(tmp_path / "cfg" / "profile.json") == prof
    sched = AnnealSchedule(t_f=5.0, pause_s=0.3, pause_duration=2.0)
    save_schedule(sched, tmp_path / "schedule.json")
    assert load_schedule(tmp_path / "schedule.json") == sched


def test_noise_off_ferromagnet(ferromagnet):
    ss = device_sample(ferromagnet, profile=DeviceProfile.noiseless(), num_reads=10_000, seed=1)
    assert distribution_distance(empirical_distribution(ss), exact_distribution(ferromagnet, 1.0)) < 0.05


def test_sampleset_cap(ferromagnet):
    device_sample(ferromagnet, num_reads=10_000, seed=0)
    with pytest.raises(SamplesetCapError, match="cap"):
        device_sample(ferromagnet, num_reads=10_001)


def test_half_fidelity_erases_information():
    for m in (IsingModel(3, [2.0, -2.0, 2.0], {(0, 1): -1.0}), IsingModel(2, [0, 0], {(0, 1): -1.0})):
        ss = device_sample(m, profile=DeviceProfile(readout_fidelity=0.5), num_reads=10_000, seed=4)
        uniform = exact_distribution(IsingModel.zeros(m.num_spins), 0.0)
        assert distribution_distance(empirical_distribution(ss), uniform) < 0.05


def test_neutral_device_matches_gibbs():
    m = random_model(4, 1.0, rng=np.random.default_rng(11))
    dev = device_sample(m, profile=DeviceProfile.noiseless(), num_reads=10_000, seed=5)
    gib = gibbs_sample(m, 1.0, SamplerConfig(seed=6, num_reads=10_000))
    assert distribution_distance(empirical_distribution(dev), empirical_distribution(gib)) < 0.03


def _lag1(x):
    x = x.astype(float) - x.mean()
    return float((x[1:] * x[:-1]).mean() / (x * x).mean())


def test_spinbath_autocorrelation():
    m = IsingModel(2, [0.0, 0.0], {(0, 1): -0.5})
    for rho, check in ((0.0, lambda r: abs(r) <= 0.02), (0.9, lambda r: r > 0.5)):
        ss = device_sample(m, profile=DeviceProfile.noiseless(spinbath_rho=rho), num_reads=10_000, seed=7)
        assert check(_lag1(ss.states[:, 0])), rho


def test_spinbath_autocorrelation_grows_with_rho():
    m = IsingModel(2, [0.0, 0.0], {(0, 1): -0.5})
    corr = [
        _lag1(device_sample(m, profile=DeviceProfile.noiseless(spinbath_rho=r), num_reads=10_000, seed=8).states[:, 1])
        for r in (0.0, 0.3, 0.6, 0.9)
    ]
    assert all(b > a for a, b in zip(corr, corr[1:]))


def test_depolarize_wait_weakens_memory():
    m = IsingModel(2, [0.0, 0.0], {(0, 1): -0.5})
    near = DeviceProfile.noiseless(spinbath_rho=0.9)
    far = DeviceProfile.noiseless(spinbath_rho=0.9, depolarize_wait=5.0)
    a = _lag1(device_sample(m, profile=near, num_reads=5000, seed=1).states[:, 0])
    b = _lag1(device_sample(m, profile=far, num_reads=5000, seed=1).states[:, 0])
    assert b < a and abs(b) < 0.05


def test_spinbath_state_carries_across_calls():
    m = IsingModel(3, [0.0, 0.0, 0.0])
    prof = DeviceProfile.noiseless(spinbath_rho=0.99)
    dev = DeviceEmulator(prof)
    first = dev.sample(m, num_reads=5, seed=1)
    second = dev.sample(m, num_reads=5, seed=2)
    fresh = DeviceEmulator(prof).sample(m, num_reads=5, seed=2)
    assert second != fresh
    agree = (second.states[0] == first.states[-1]).mean()
    assert agree >= 2 / 3


def test_ice_severity_monotone():
    means = []
    for sigma in (0.0, 0.05, 0.2):
        tvs = []
        for seed in range(20):
            m = random_model(4, 1.0, rng=np.random.default_rng(100 + seed))
            clean = device_sample(m, profile=DeviceProfile.noiseless(), num_reads=2000, seed=seed)
            noisy = device_sample(m, profile=DeviceProfile.noiseless(ice_sigma_h=sigma), num_reads=2000, seed=seed)
            tvs.append(distribution_distance(empirical_distribution(noisy), empirical_distribution(clean)))
        means.append(np.mean(tvs))
    assert means[0] == 0.0
    assert means[0] <= means[1] <= means[2]


def test_reported_energies_use_user_model():
    m = random_model(5, 0.8, (-3, 3), (-2, 2), np.random.default_rng(3))
    prof = DeviceProfile(ice_sigma_h=0.3, ice_sigma_J=0.3, readout_fidelity=0.8, spinbath_rho=0.5, photon_tau=5.0)
    ss = device_sample(m, profile=prof, num_reads=500, seed=2)
    np.testing.assert_array_equal(ss.energies, m.energies(ss.states))
    assert ss.model_fingerprint == m.fingerprint()


def test_photon_excitation_heats_the_output():
    m = IsingModel(2, [0.0, 0.0], {(0, 1): -1.0})
    cold = device_sample(m, profile=DeviceProfile.noiseless(), num_reads=10_000, seed=3)
    hot = device_sample(m, profile=DeviceProfile.noiseless(photon_tau=1e-3), num_reads=10_000, seed=3)
    ex_half = exact_distribution(m, 0.5)
    assert distribution_distance(empirical_distribution(hot), ex_half) < 0.03
    assert cold.energies.mean() < hot.energies.mean()


def test_readout_flip_rate():
    m = random_model(10, 0.5, rng=np.random.default_rng(0))
    dev = DeviceEmulator(DeviceProfile(readout_fidelity=0.95))
    ss = dev.sample(m, num_reads=2000, seed=1)
    rate = (ss.states != dev.last_raw).mean()
    assert abs(rate - 0.05) < 0.005


def test_embedded_device_run():
    g = chimera_graph(2)
    m = IsingModel(3, [0.1, 0.0, -0.1], {(0, 1): -0.5, (1, 2): -0.5, (0, 2): -0.5})
    emb = find_embedding(m, g, seed=0, chain_strength=1.0)
    ss = device_sample(m, profile=DeviceProfile(), emb=emb, num_reads=300, seed=0, hardware=g)
    hw = embed_model(m, emb, g)
    assert ss.num_spins == hw.num_spins
    np.testing.assert_array_equal(ss.energies, hw.energies(ss.states))
    with pytest.raises(ValueError):
        device_sample(m, emb=emb, num_reads=10)


def test_device_deterministic(ferromagnet):
    a = device_sample(ferromagnet, num_reads=1000, seed=42)
    b = device_sample(ferromagnet, num_reads=1000, seed=42)
    assert a == b
    assert a != device_sample(ferromagnet, num_reads=1000, seed=43)


def test_autoscale_feeds_alpha():
    m = IsingModel(2, [0.0, 0.0], {(0, 1): -2.0})
    dev = DeviceEmulator(DeviceProfile.noiseless())
    ss = dev.sample(m, num_reads=10_000, seed=0)
    assert dev.last_scale == 0.5 and dev.last_alpha == 0.5
    # the user model is sampled at alpha = scale * alpha_base
    assert distribution_distance(empirical_distribution(ss), exact_distribution(m, 0.5)) < 0.03
