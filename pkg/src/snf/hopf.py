"""Numerical laboratory for the stochastically forced Hopf bifurcation of
the Duffing-van der Pol oscillator

    x1'' = (alpha + sigma phi(t)) x1 + beta x1' - x1^3 - x1^2 x1',

its complex-amplitude reductions near alpha = -1 (solutions carried as
x1 ~ a e^{it} + conj(a) e^{-it}), and the Mathieu-type check with the
deterministic forcing phi = cos 2t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .bands import QuadNoise, band_component, quad_resonant_noise


def simulate_dvdp(alpha: float, beta: float, sigma: float,
                  dw: np.ndarray, dt: float,
                  init: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Stratonovich Heun integration of the oscillator driven by given
    Brownian increments (shape (n,) or (R, n)); returns (x1, v) arrays with
    one more sample than increments."""
    dw = np.atleast_2d(dw)
    R, n = dw.shape
    x = np.empty((R, n + 1))
    v = np.empty((R, n + 1))
    x[:, 0], v[:, 0] = init

    def acc(xx, vv):
        return alpha * xx + beta * vv - xx ** 3 - xx ** 2 * vv

    for i in range(n):
        xi, vi, dwi = x[:, i], v[:, i], dw[:, i]
        # parametric noise sigma*x1 o dW enters the velocity equation
        xp = xi + vi * dt
        vp = vi + acc(xi, vi) * dt + sigma * xi * dwi
        x[:, i + 1] = xi + 0.5 * dt * (vi + vp)
        v[:, i + 1] = vi + 0.5 * dt * (acc(xi, vi) + acc(xp, vp)) \
            + 0.5 * sigma * (xi + xp) * dwi
    return x, v


@dataclass
class AmplitudeDrivers:
    """Sampled slowly varying noises feeding the amplitude models."""
    phi0: np.ndarray
    phi2: np.ndarray            # phi_{+2}; phi_{-2} is its conjugate
    psi: Optional[QuadNoise] = None

    @classmethod
    def from_noise(cls, w: np.ndarray, dt: float, delta: float,
                   quadratic: bool = False) -> "AmplitudeDrivers":
        p0 = band_component(w, dt, 0.0, delta)
        p2 = band_component(w, dt, 2.0, delta)
        q = quad_resonant_noise(w, dt, delta) if quadratic else None
        return cls(p0.values, p2.values, q)


def landau_rhs(a: np.ndarray, beta: float) -> np.ndarray:
    return 0.5 * beta * a - (0.5 - 1.5j) * (np.abs(a) ** 2) * a


def simulate_amplitude(order: int, beta: float, sigma: float, delta: float,
                       drivers: AmplitudeDrivers, dt: float, a0: complex,
                       n_steps: Optional[int] = None) -> np.ndarray:
    """Heun integration of the complex amplitude model with b = conj(a).

    ``order`` 1 uses the linear-noise model; 2 adds the quadratic noise
    (psi and the deterministic frequency-shift terms proportional to delta).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if order == 2 and drivers.psi is None:
        raise ValueError("order-2 model needs the quadratic noise drivers")
    n = len(drivers.phi0) - 1 if n_steps is None else n_steps
    amp = math.sqrt(delta / 2.0)

    def rhs(a, i):
        out = landau_rhs(a, beta) + sigma * amp * (
            a * drivers.phi0[i] - np.conj(a) * drivers.phi2[i])
        if order == 2:
            q = drivers.psi
            out = out + 0.5j * sigma ** 2 * (
                q.c_r * q.psi_r[i] + 1j * q.c_i * q.psi_i[i]) * a
            out = out - 1j * delta * sigma ** 2 * (
                0.25 * drivers.phi0[i] ** 2
                + 0.125 * drivers.phi2[i] * np.conj(drivers.phi2[i])) * a
        return out

    a = np.empty(n + 1, dtype=complex)
    a[0] = a0
    for i in range(n):
        pred = a[i] + rhs(a[i], i) * dt
        a[i + 1] = a[i] + 0.5 * dt * (rhs(a[i], i) + rhs(pred, i + 1))
    return a


def simulate_amplitude_longtime(beta: float, sigma: float, c_r: float,
                                c_i: float, dt: float, n: int, a0: complex,
                                seed: int = 0) -> np.ndarray:
    """The very-long-time model: Landau drift plus the two effective white
    noises from the quadratic resonance,

        da = [beta a/2 - (1/2 - 3i/2)|a|^2 a] dt
             + (i/2) c_r sigma^2 a o dW_r - (1/2) c_i sigma^2 a o dW_i.
    """
    rng = np.random.default_rng(seed)
    sq = math.sqrt(dt)
    dWr = rng.standard_normal(n) * sq
    dWi = rng.standard_normal(n) * sq

    def g(a, i):
        return (0.5j * c_r * sigma ** 2 * a) * dWr[i] \
            - (0.5 * c_i * sigma ** 2 * a) * dWi[i]

    a = np.empty(n + 1, dtype=complex)
    a[0] = a0
    for i in range(n):
        pred = a[i] + landau_rhs(a[i], beta) * dt + g(a[i], i)
        a[i + 1] = a[i] + 0.5 * dt * (landau_rhs(a[i], beta)
                                      + landau_rhs(pred, beta)) \
            + 0.5 * (g(a[i], i) + g(pred, i))
    return a


def reconstruct_x1(a: np.ndarray, dt: float) -> np.ndarray:
    t = np.arange(len(a)) * dt
    return (a * np.exp(1j * t) + np.conj(a) * np.exp(-1j * t)).real


def fit_growth_rate(amplitude: np.ndarray, dt: float,
                    lo_frac: float = 0.25, hi_frac: float = 1.0) -> float:
    """Least-squares slope of log amplitude over a window."""
    n = len(amplitude)
    lo, hi = int(n * lo_frac), int(n * hi_frac)
    t = np.arange(lo, hi) * dt
    y = np.log(np.abs(amplitude[lo:hi]))
    A = np.vstack([t, np.ones_like(t)]).T
    slope, _ = np.linalg.lstsq(A, y, rcond=None)[0]
    return float(slope)


def mathieu_growth(beta: float, sigma: float, T: float = 80.0,
                   dt: float = 1e-3) -> Dict[str, float]:
    """Growth rates under the deterministic forcing phi = cos 2t.

    Integrates the amplitude pair da/dt = beta a/2 + sigma b/4 (conjugate
    pair coupling from the frequency-2 line) and the linearised oscillator
    x1'' = (-1 + sigma cos 2t) x1 + beta x1', and fits both exponential
    rates; the model predicts lambda = beta/2 + sigma/4.
    """
    n = int(round(T / dt))
    # amplitude pair: dominant eigenvector of [[b/2, s/4],[s/4, b/2]] has a=b
    a = np.empty(n + 1, dtype=complex)
    b = np.empty(n + 1, dtype=complex)
    a[0], b[0] = 0.01 + 0.003j, np.conj(0.01 + 0.003j)
    for i in range(n):
        fa = 0.5 * beta * a[i] + 0.25 * sigma * b[i]
        fb = 0.5 * beta * b[i] + 0.25 * sigma * a[i]
        ap, bp = a[i] + fa * dt, b[i] + fb * dt
        fap = 0.5 * beta * ap + 0.25 * sigma * bp
        fbp = 0.5 * beta * bp + 0.25 * sigma * ap
        a[i + 1] = a[i] + 0.5 * dt * (fa + fap)
        b[i + 1] = b[i] + 0.5 * dt * (fb + fbp)
    model_rate = fit_growth_rate(np.abs(a) + np.abs(b), dt)

    # linearised full oscillator, deterministic RK4
    x, v = 0.01, 0.0
    env = np.empty(n + 1)
    env[0] = math.hypot(x, v)

    def deriv(state, t):
        xx, vv = state
        return np.array([vv, (-1.0 + sigma * math.cos(2 * t)) * xx + beta * vv])

    s = np.array([x, v])
    for i in range(n):
        t = i * dt
        k1 = deriv(s, t)
        k2 = deriv(s + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = deriv(s + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = deriv(s + dt * k3, t + dt)
        s = s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        env[i + 1] = math.hypot(s[0], s[1])
    full_rate = fit_growth_rate(env, dt)
    return {"model": model_rate, "full": full_rate,
            "predicted": 0.5 * beta + 0.25 * sigma}
