"""Reference computations that share no code with the package.

Amplitude ratios come from the static step seen in the frame riding on the
step; fields come from summing complex plane waves directly, with the
current taken by central finite differences.
"""

import cmath
import math

import numpy as np


def static_ratios(k1, v, V0, hbar=1.0, mass=1.0):
    """(b/a, c/a, k3) from the step-frame static problem, oscillating case only."""
    u = mass * v / hbar
    kp = k1 - u
    k3p = math.sqrt(kp * kp - 2.0 * mass * V0 / hbar ** 2)
    r = (kp - k3p) / (kp + k3p)
    return r, 2.0 * kp / (kp + k3p), u + k3p


def psi(x, t, k1, v, V0, a=1.0, theta=0.0, hbar=1.0, mass=1.0, kind="finite"):
    """Plane-wave superposition evaluated from scratch."""
    x = np.asarray(x, dtype=float)
    u = mass * v / hbar
    k2 = 2.0 * u - k1
    A = a * cmath.exp(1j * theta)

    def w(k):
        return hbar * k * k / (2.0 * mass)

    if kind == "infinite":
        B, C, k3, w3 = -A, 0.0, 0.0, 0.0
    else:
        disc = (k1 - u) ** 2 - 2.0 * mass * V0 / hbar ** 2
        if disc >= 0:
            k3 = u + math.sqrt(disc)
            r = (k1 - k3) / (k1 + k3 - 2.0 * u)
        else:
            k3 = complex(u, math.sqrt(-disc))
            r = 1.0
        B = r * A
        C = A + B
        w3 = w(k3) + V0 / hbar
    left = A * np.exp(1j * (k1 * x - w(k1) * t)) + B * np.exp(1j * (k2 * x - w(k2) * t))
    right = C * np.exp(1j * (k3 * x - w3 * t))
    return np.where(x <= v * t, left, right)


def density(x, t, **kw):
    return np.abs(psi(x, t, **kw)) ** 2


def current(x, t, h=1e-5, **kw):
    hbar = kw.get("hbar", 1.0)
    mass = kw.get("mass", 1.0)
    x = np.asarray(x, dtype=float)
    p0 = psi(x, t, **kw)
    dp = (psi(x + h, t, **kw) - psi(x - h, t, **kw)) / (2.0 * h)
    return hbar / mass * np.imag(np.conj(p0) * dp)
