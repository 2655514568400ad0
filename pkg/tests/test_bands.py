"""Band-limited noise components and the quadratic resonant noise."""

import math

import numpy as np
import pytest

from snf.bands import (autocorrelation, band_component, kernel_limit,
                       quad_resonant_noise, white_spectrum, _kernel)

DT, T, DELTA = 0.05, 2000.0, 0.2
N = int(T / DT)


def white(seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(N) / math.sqrt(DT)


def test_band_unit_variance():
    vs = []
    for seed in range(6):
        w = white(seed)
        vs.append(band_component(w, DT, 0.0, DELTA).sample_variance())
        vs.append(band_component(w, DT, 2.0, DELTA).sample_variance())
    assert 0.8 < np.mean(vs) < 1.2


def test_band_independence():
    cross = []
    for seed in range(6):
        w = white(seed + 50)
        p0 = band_component(w, DT, 0.0, DELTA)
        p2 = band_component(w, DT, 2.0, DELTA)
        cross.append(np.mean(p0.values * np.conj(p2.values)))
    m = np.mean(cross)
    se = np.std([c.real for c in cross], ddof=1) / math.sqrt(len(cross))
    assert abs(m.real) < 3 * se + 0.05


def test_conjugate_band_pair():
    w = white(3)
    p2 = band_component(w, DT, 2.0, DELTA)
    m2 = band_component(w, DT, -2.0, DELTA)
    assert np.max(np.abs(m2.values - np.conj(p2.values))) < 1e-10


def test_band_of_deterministic_cosine():
    # For phi = cos 2t the frequency-2 band captures the whole line and the
    # zero band nothing.  Under the unit-variance normalisation used here
    # the line's band amplitude is sqrt(2 pi)/2; the radian-frequency
    # spectral convention that would give exactly 1/2 is incompatible with
    # E|phi_m|^2 = 1 (see the band module docstring).
    t = np.arange(N) * DT
    w = np.cos(2.0 * t)
    p2 = band_component(w, DT, 2.0, DELTA)
    p0 = band_component(w, DT, 0.0, DELTA)
    got = math.sqrt(2 * DELTA) * np.mean(p2.values).real
    assert abs(got - math.sqrt(2 * math.pi) / 2) < 0.02
    assert np.max(np.abs(p0.values)) < 0.1


def test_band_overlap_rejected():
    with pytest.raises(ValueError):
        band_component(white(1), DT, 0.0, 1.0)


def test_autocorrelation_scale():
    # decays on the 1/delta scale: near sinc(delta * lag)
    w = white(11)
    p0 = band_component(w, DT, 0.0, DELTA)
    ac = autocorrelation(p0.values, int(8 / DELTA / DT))
    lag1 = int(1 / DELTA / DT)
    assert ac[lag1] > 0.6                       # still correlated at 1/delta
    tail = ac[int(6 / DELTA / DT):]
    assert np.max(np.abs(tail)) < 0.35          # near zero for lags >> 1/delta


def test_kernel_reparametrised_limit():
    om = np.linspace(-5, 5, 41)
    om = om[np.all(np.abs(om[:, None] - np.array([-2.0, 0.0, 2.0])) > 0.3, axis=1)]
    # K(Omega, Omegatilde) at Omegatilde = -Omega + eps approaches the
    # advertised limit 1/((omega+2)(omega-2))
    for sign in (+1, -1):
        got = _kernel(om, -om + 1e-10, sign)
        assert np.max(np.abs(got - kernel_limit(om))) < 1e-6


def test_quad_noise_constants_and_normalisation():
    crs, cis = [], []
    for seed in range(5):
        q = quad_resonant_noise(white(seed + 100), DT, DELTA)
        crs.append(q.c_r)
        cis.append(q.c_i)
        assert abs(np.std(q.psi_r) - 1.0) < 1e-9
        assert abs(np.std(q.psi_i) - 1.0) < 1e-9
    assert 0.75 < np.mean(crs) < 1.05
    assert 0.12 < np.mean(cis) < 0.30


def test_quad_noise_slowly_varying():
    q = quad_resonant_noise(white(200), DT, DELTA)
    # over one fast period (2 pi) the process moves much less than its spread
    lag = int(2 * math.pi / DT)
    step = np.abs(q.psi_plus[lag:] - q.psi_plus[:-lag])
    assert np.mean(step) < 0.8 * np.std(q.psi_plus)


def test_sqrt_delta_scaling_of_band_forcing():
    # the model's band-noise terms carry sqrt(delta/2) against unit-variance
    # phi_m: their magnitude must scale as sqrt(delta) when delta varies
    deltas = [0.05, 0.1, 0.2, 0.4]
    mags = []
    for d in deltas:
        vals = []
        for seed in range(4):
            w = white(300 + seed)
            p0 = band_component(w, DT, 0.0, d)
            vals.append(np.std(math.sqrt(d / 2) * p0.values.real))
        mags.append(np.mean(vals))
    slope = np.polyfit(np.log(deltas), np.log(mags), 1)[0]
    assert abs(slope - 0.5) < 0.1


def test_spectrum_parseval():
    # unitary convention: integral |phihat|^2 dOmega = integral w^2 dt
    w = white(7)
    _om, ph = white_spectrum(w, DT)
    dOm = 2 * math.pi / T
    lhs = np.sum(np.abs(ph) ** 2) * dOm
    rhs = np.sum(w ** 2) * DT
    assert abs(lhs - rhs) < 1e-6 * rhs
