"""Independent oracles shared by the test modules.

These deliberately avoid the package's own evaluation paths: the Bessel
oracle is a composite trapezoid rule on the integral representation, and the
static-spectrum oracle is a dense Hermitian eigensolve of the undriven
coupling matrix.
"""

import numpy as np


def bessel_quadrature(k: int, x: float, n_points: int = 16384) -> float:
    """J_k(x) = (1/pi) * integral_0^pi cos(k tau - x sin tau) d tau.

    The integrand extends to an even, 2pi-periodic smooth function, so the
    composite trapezoid rule converges spectrally; n_points >= 1e4 leaves
    the error at rounding level for |x| <= 60, k <= 10.
    """
    tau = np.linspace(0.0, np.pi, n_points + 1)
    f = np.cos(k * tau - x * np.sin(tau))
    return float(np.trapezoid(f, tau) / np.pi)


def bisect_zero(fn, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Plain bisection against an arbitrary sign-changing callable."""
    f_lo = fn(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if (f_lo < 0.0) == (f_mid < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def static_eigenvalues(n: int, omega0: float, nu0: float = 0.0) -> np.ndarray:
    """Sorted spectrum of the undriven chain (independent dense eigensolve)."""
    h = np.zeros((n, n))
    for j in range(n - 1):
        h[j, j + 1] = h[j + 1, j] = omega0
    for j in range(n - 2):
        h[j, j + 2] = h[j + 2, j] = nu0
    return np.sort(np.linalg.eigvalsh(h))


def fold_into_zone(values: np.ndarray, omega: float) -> np.ndarray:
    """Fold real energies into (-omega/2, omega/2]."""
    folded = np.mod(np.asarray(values, dtype=float) + 0.5 * omega, omega) - 0.5 * omega
    folded[folded <= -0.5 * omega] += omega  # exact lower edge maps to +omega/2
    return folded


def circular_match(eps_a, eps_b, omega: float) -> float:
    """Max circular distance between two sorted quasi-energy multisets."""
    a = np.sort(np.asarray(eps_a, dtype=float))
    b = np.sort(np.asarray(eps_b, dtype=float))
    d = np.abs(a - b) % omega
    return float(np.max(np.minimum(d, omega - d)))
