"""Independent reference computations used to pin expected test values.

Everything here is deliberately written from first principles, avoiding the
package's own algorithms, so tests compare two unrelated routes:

* torus_link_signature: lattice-point count for the signature of the closure
  of (s_1 ... s_{p-1})^q, from the classical eigenvalue description of the
  intersection form of the Brieskorn fiber x^p + y^q.
* float_signature: eigenvalue-sign count of V + V^T in floating point.
* binomial_slope: closed-form expectation of the per-sample slope for a hard
  step rotation, used as the analytic model behind the Monte Carlo checks.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def torus_link_signature(p: int, q: int) -> int:
    """Signature of the (p, q) torus link, p, q >= 1.

    Counts f = i/p + j/q mod 2 over 1 <= i <= p-1, 1 <= j <= q-1:
    values in (0, 1/2) or (3/2, 2) contribute +1, values in (1/2, 3/2)
    contribute -1, and the exact boundary points contribute 0.
    """
    sig = 0
    for i in range(1, p):
        for j in range(1, q):
            f = Fraction(i, p) + Fraction(j, q)
            f = f % 2
            if Fraction(0) < f < Fraction(1, 2) or Fraction(3, 2) < f < 2:
                sig += 1
            elif Fraction(1, 2) < f < Fraction(3, 2):
                sig -= 1
    return sig


def float_signature(seifert: np.ndarray, tol: float = 1e-9) -> int:
    """Signature of V + V^T by floating-point eigenvalues (test oracle only)."""
    if seifert.size == 0:
        return 0
    sym = seifert.astype(float) + seifert.astype(float).T
    eig = np.linalg.eigvalsh(sym)
    scale = max(1.0, float(np.max(np.abs(eig))))
    return int(np.sum(eig > tol * scale) - np.sum(eig < -tol * scale))


def full_twist_signature_rate(p: int) -> int:
    """Slope in k of torus_link_signature(p, p*k); equals -2*floor(p^2/4)."""
    return -2 * (p * p // 4)


def s_ratio(n: int) -> Fraction:
    """Full-twist signature rate divided by the full twist's writhe n(n-1)."""
    return Fraction(full_twist_signature_rate(n), n * (n - 1))


def binomial_slope(a: float, n_points: int) -> float:
    """Expected per-sample slope for a hard step profile, unit inner speed.

    With each of n_points samples independently inside the rotating disc with
    probability a, the signature of the traced braid closure grows like
    full_twist_signature_rate(k) per time unit when k points are inside, and
    the writhe grows like k(k-1); subtracting s_ratio(n_points) times the
    writhe and taking binomial expectations gives this closed form.
    """
    rho = s_ratio(n_points)
    total = 0.0
    for k in range(n_points + 1):
        weight = math.comb(n_points, k) * a ** k * (1 - a) ** (n_points - k)
        rate = full_twist_signature_rate(k) if k >= 2 else 0
        total += weight * (rate - float(rho) * k * (k - 1))
    return total


def gg_step_value(u0: float, lam: float, n: int) -> float:
    """(n/2) * integral_{u0}^{1} lam * (u^(2n-1) - u) du in closed form."""
    upper = 1.0 / (2 * n) - 0.5
    lower = u0 ** (2 * n) / (2 * n) - u0 ** 2 / 2.0
    return (n / 2.0) * lam * (upper - lower)


def psi0_radial(a: float, n_grid: int = 400001, rho_max: float = 400.0) -> float:
    """One-dimensional reduction of the psi0 integral (independent route).

    For real a >= 0 the angular integral has the closed form
    2*pi*(1+a^2+rho^2) / ((1+(a-rho)^2)*(1+(a+rho)^2))^(3/2); integrate over
    rho with Simpson's rule plus the analytic rho^-4 tail estimate.
    """
    if rho_max < 20.0 * (1.0 + a):
        rho_max = 20.0 * (1.0 + a)
    rho = np.linspace(0.0, rho_max, n_grid)
    A = 1.0 + a * a + rho * rho
    denom = ((1.0 + (a - rho) ** 2) * (1.0 + (a + rho) ** 2)) ** 1.5
    vals = 2.0 * math.pi * A / denom
    from scipy.integrate import simpson
    body = float(simpson(vals, x=rho))
    tail = 2.0 * math.pi / (3.0 * rho_max ** 3)  # integrand ~ 2*pi/rho^4 out there
    return body + tail
