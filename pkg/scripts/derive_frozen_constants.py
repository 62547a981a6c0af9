#!/usr/bin/env python3
"""Re-derive the constants frozen into the test suite from independent oracles.

Prints the stable-law amplitude table (numerical quadrature vs the
Gamma-function identity), the photon-kick CF value at k0 s = pi, and the
finite-difference moments of the photon-kick distribution.  Run after any
change to the quadrature or CF code to confirm the frozen numbers still hold.
"""

import numpy as np
from scipy.special import gamma

import levydec as L


def stable_amplitudes():
    print("stable-law amplitude c_alpha (quadrature oracle vs Gamma identity)")
    for alpha in (0.5, 1.0, 1.5):
        raw = L.power_law_jump_integral(alpha, 1.0, 1.0)
        c_oracle = -1.0 / raw.real
        c_formula = gamma(1 + alpha) * np.sin(0.5 * np.pi * alpha) / np.pi
        print(f"  alpha={alpha:3.1f}: oracle {c_oracle:.12f}  "
              f"formula {c_formula:.12f}  "
              f"rel diff {abs(c_oracle - c_formula) / c_formula:.2e}")


def mandel_values():
    cf = L.mandel_cf(L.MandelParams(k0=1.0))
    print("photon-kick CF spot values")
    val = cf(np.pi)
    print(f"  Phi(k0 s = pi) = {val.real:.15f}  "
          f"(3/(2 pi^2) = {3 / (2 * np.pi ** 2):.15f})")
    h = 1e-4
    mean_fd = ((cf(h) - cf(-h)) / (2 * h)).imag
    second_fd = -((cf(h) - 2.0 * cf(0.0) + cf(-h)) / h ** 2).real
    print(f"  mean  (finite difference) = {mean_fd:.10f}   frozen: 1.0")
    print(f"  <q^2> (finite difference) = {second_fd:.10f}  frozen: 1.4")


def reconstruction_quality():
    p = L.MandelParams(k0=1.0)
    pd = L.mandel_pd(p, L.default_mandel_grid(p))
    mean = L.spectral.trapezoid(pd.q * pd.f, pd.q)
    second = L.spectral.trapezoid(pd.q ** 2 * pd.f, pd.q)
    print("reconstructed photon-kick density (default grid)")
    print(f"  mean  error {abs(mean - 1.0):.2e}")
    print(f"  <q^2> error {abs(second - 1.4):.2e}")


if __name__ == "__main__":
    stable_amplitudes()
    mandel_values()
    reconstruction_quality()
