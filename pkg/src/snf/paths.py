"""Discretised Brownian paths and exponentially filtered noise samples.

A path carries increments ``dW ~ N(0, dt)`` on a grid that extends beyond
the working window ``[0, T]`` by a spin-up prefix and a trim suffix, so that
memory convolutions (rate < 0, filtered forward) and anticipatory
convolutions (rate > 0, filtered backward from the end) are stationary over
the whole working window.  Filter updates are exact for the exponential
kernel, with the noise weight variance-matched so that stationary moments
carry no O(dt) bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import lfilter

from . import noise
from .noise import Expr, ONE


class IllFormedForSampling(ValueError):
    """Bare noise below the top level cannot be evaluated pointwise."""


SPINUP_TIME_CONSTANTS = 10.0


@dataclass
class NoisePath:
    """Brownian increments on [-spin, T + trim] for ``n_noise`` symbols."""
    dt: float
    n_main: int
    n_spin: int
    n_trim: int
    increments: np.ndarray      # shape (n_noise, n_total)
    seed: int

    @classmethod
    def generate(cls, T: float, dt: float, n_noise: int = 1, seed: int = 0,
                 spin: float = 30.0, trim: float = 0.0) -> "NoisePath":
        if T <= 0 or dt <= 0:
            raise ValueError("need positive T and dt")
        n_main = int(round(T / dt))
        n_spin = int(math.ceil(spin / dt)) if spin else 0
        n_trim = int(math.ceil(trim / dt)) if trim else 0
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        total = n_spin + n_main + n_trim
        inc = rng.standard_normal((n_noise, total)) * math.sqrt(dt)
        return cls(dt, n_main, n_spin, n_trim, inc, seed)

    @property
    def n_total(self) -> int:
        return self.increments.shape[1]

    @property
    def n_points(self) -> int:
        return self.n_total + 1

    def times(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_spin) * self.dt

    @property
    def main_lo(self) -> int:
        return self.n_spin

    @property
    def main_hi(self) -> int:
        return self.n_spin + self.n_main

    def main_slice(self) -> slice:
        return slice(self.main_lo, self.main_hi + 1)

    def reversed(self) -> "NoisePath":
        return NoisePath(self.dt, self.n_main, self.n_trim, self.n_spin,
                         self.increments[:, ::-1].copy(), self.seed)


@dataclass
class ConvolutionSample:
    """A filtered-noise trajectory on the path grid with its valid window."""
    rate: Fraction
    values: np.ndarray
    valid_lo: int
    valid_hi: int

    def main_values(self, path: NoisePath) -> np.ndarray:
        if self.valid_lo > path.main_lo or self.valid_hi < path.main_hi:
            raise IllFormedForSampling(
                "path too short for the spin-up/trim windows of this expression")
        return self.values[path.main_slice()]


def _run_filter(a: float, driver: np.ndarray) -> np.ndarray:
    # y_n = a y_{n-1} + driver_n, started from zero.
    return lfilter([1.0], [1.0, -a], driver)


def _filter_forward_dw(path: NoisePath, mu: float, k: int) -> ConvolutionSample:
    dt = path.dt
    a = math.exp(mu * dt)
    # Weight variance-matched to the stationary moment 1/(2|mu|).
    c = math.sqrt((1.0 - a * a) / (2.0 * abs(mu)) / dt)
    z = np.empty(path.n_points)
    z[0] = 0.0
    z[1:] = _run_filter(a, c * path.increments[k])
    spin = int(math.ceil(SPINUP_TIME_CONSTANTS / (abs(mu) * dt)))
    return ConvolutionSample(Fraction(mu), z, spin, path.n_total)


def _filter_forward_signal(path: NoisePath, mu: float,
                           f: ConvolutionSample) -> ConvolutionSample:
    dt = path.dt
    a = math.exp(mu * dt)
    v = f.values
    z = np.empty(path.n_points)
    z[0] = 0.0
    # Exact exponential step, trapezoid quadrature of the driving signal.
    z[1:] = _run_filter(a, (a * v[:-1] + v[1:]) * (dt / 2.0))
    spin = int(math.ceil(SPINUP_TIME_CONSTANTS / (abs(mu) * dt)))
    return ConvolutionSample(Fraction(mu), z, f.valid_lo + spin, f.valid_hi)


def _filter_backward_dw(path: NoisePath, mu: float, k: int) -> ConvolutionSample:
    dt = path.dt
    a = math.exp(-mu * dt)
    c = math.sqrt((1.0 - a * a) / (2.0 * mu) / dt)
    z = np.empty(path.n_points)
    z[-1] = 0.0
    z[:-1] = _run_filter(a, c * path.increments[k][::-1])[::-1]
    trim = int(math.ceil(SPINUP_TIME_CONSTANTS / (mu * dt)))
    return ConvolutionSample(Fraction(mu), z, 0, path.n_total - trim)


def _filter_backward_signal(path: NoisePath, mu: float,
                            f: ConvolutionSample) -> ConvolutionSample:
    dt = path.dt
    a = math.exp(-mu * dt)
    v = f.values
    u = (a * v[1:] + v[:-1]) * (dt / 2.0)
    z = np.empty(path.n_points)
    z[-1] = 0.0
    z[:-1] = _run_filter(a, u[::-1])[::-1]
    trim = int(math.ceil(SPINUP_TIME_CONSTANTS / (mu * dt)))
    return ConvolutionSample(Fraction(mu), z, f.valid_lo, f.valid_hi - trim)


class PathSampler:
    """Evaluates bare-free noise expressions on a path, caching filters."""

    def __init__(self, path: NoisePath):
        self.path = path
        self._cache: Dict[Expr, ConvolutionSample] = {}

    def atom(self, a) -> ConvolutionSample:
        return self.expr((a,))

    def expr(self, expr: Expr) -> ConvolutionSample:
        if expr in self._cache:
            return self._cache[expr]
        if expr == ONE:
            out = ConvolutionSample(Fraction(0), np.ones(self.path.n_points),
                                    0, self.path.n_total)
        elif len(expr) == 1:
            out = self._single(expr[0])
        else:
            parts = [self.expr((a,)) for a in expr]
            vals = parts[0].values.copy()
            for p in parts[1:]:
                vals *= p.values
            out = ConvolutionSample(Fraction(0), vals,
                                    max(p.valid_lo for p in parts),
                                    min(p.valid_hi for p in parts))
        self._cache[expr] = out
        return out

    def _single(self, a) -> ConvolutionSample:
        if noise.is_bare(a):
            raise IllFormedForSampling(
                "bare noise has no pointwise values; it only multiplies dW")
        mu, child = float(a[1]), a[2]
        if len(child) == 1 and noise.is_bare(child[0]):
            k = child[0][1]
            return (_filter_forward_dw(self.path, mu, k) if mu < 0
                    else _filter_backward_dw(self.path, mu, k))
        if any(noise.is_bare(c) for c in child):
            raise IllFormedForSampling(
                f"bare noise in a non-top-level position: {child}")
        inner = self.expr(child)
        return (_filter_forward_signal(self.path, mu, inner) if mu < 0
                else _filter_backward_signal(self.path, mu, inner))


def sample_convolution(path: NoisePath, expr: Expr) -> ConvolutionSample:
    """Pointwise values of a bare-free noise product on the path grid."""
    return PathSampler(path).expr(expr)


def evaluate_series(sampler: PathSampler, series, params: Dict[str, float],
                    slow: Sequence, fast: Sequence) -> np.ndarray:
    """Pointwise values of a bare-free series along the path grid.

    ``slow``/``fast`` supply one scalar or grid-length array per variable;
    parameters are numeric.  Noise factors are sampled convolutions.
    """
    path = sampler.path
    out = np.zeros(path.n_points)
    names = series.dims.params
    for (mono, expr), c in series.terms.items():
        val = np.full(path.n_points, float(c))
        for k, e in enumerate(mono[2]):
            if e:
                val *= params[names[k]] ** e
        for i, e in enumerate(mono[0]):
            if e:
                val = val * np.asarray(slow[i]) ** e
        for j, e in enumerate(mono[1]):
            if e:
                val = val * np.asarray(fast[j]) ** e
        if expr != ONE:
            val = val * sampler.expr(expr).values
        out += val
    return out


def integrate_expression(path: NoisePath, terms: Sequence[Tuple[float, Expr]],
                         sampler: Optional[PathSampler] = None) -> np.ndarray:
    """Cumulative Stratonovich integral of sum_i c_i expr_i over the grid.

    Terms with one top-level bare factor integrate against the matching dW
    with the midpoint value of the remaining factors; bare-free terms
    integrate against dt by the trapezoid rule.  Returns an array over grid
    points; the result is the pathwise meaning of the expression as a rate.
    """
    sampler = sampler or PathSampler(path)
    n = path.n_total
    incr = np.zeros(n)
    for c, expr in terms:
        bares = [a for a in expr if noise.is_bare(a)]
        rest = tuple(a for a in expr if not noise.is_bare(a))
        if len(bares) > 1:
            raise IllFormedForSampling("two bare factors cannot be integrated")
        if bares:
            k = bares[0][1]
            r = sampler.expr(rest).values
            mid = 0.5 * (r[:-1] + r[1:])
            incr += c * mid * path.increments[k]
        else:
            r = sampler.expr(expr).values
            incr += c * 0.5 * (r[:-1] + r[1:]) * path.dt
    out = np.empty(path.n_points)
    out[0] = 0.0
    np.cumsum(incr, out=out[1:])
    return out
