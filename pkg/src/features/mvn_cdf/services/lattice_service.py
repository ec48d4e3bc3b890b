"""Rank-1 lattice generators by fast component-by-component construction.

Follows Nuyens and Cools, "Fast Component-by-Component Construction, a
Reprise for Different Kernels" (MCQMC 2004).
"""

from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy.fft import fft, ifft


def primes_up_to(limit: int) -> np.ndarray:
    """All primes p with 2 <= p <= limit (sieve of Eratosthenes)"""
    if limit < 2:
        return np.array([], dtype=int)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(limit ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve)


def _prime_factors(n: int) -> List[int]:
    factors = set()
    for p in primes_up_to(int(np.sqrt(n)) + 1):
        p = int(p)
        while n % p == 0:
            factors.add(p)
            n //= p
        if n == 1:
            break
    if n != 1:
        factors.add(n)
    return sorted(factors)


def _primitive_root(p: int) -> int:
    pm = p - 1
    factors = _prime_factors(pm)
    r = 2
    k = 0
    while k < len(factors):
        if pow(r, pm // factors[k], p) == 1:
            r += 1
            k = 0
        else:
            k += 1
    return r


@lru_cache(maxsize=128)
def cbc_lattice(n_dim: int, n_points: int) -> Tuple[np.ndarray, int]:
    """
    Lattice generator vector for ``n_dim`` dimensions.

    Args:
        n_dim: Number of lattice dimensions (> 0)
        n_points: Requested point count, rounded down to a prime (>= 5)

    Returns:
        (generator in (0, 1)^n_dim, prime point count). The array is read-only.
    """
    n_points = int(primes_up_to(max(n_points, 5))[-1])

    gm = np.hstack([1.0, 0.8 ** np.arange(n_dim - 1)])
    q = 1.0
    w = 0
    z = np.arange(1, n_dim + 1)
    m = (n_points - 1) // 2
    g = _primitive_root(n_points)
    perm = np.ones(m, dtype=np.int64)
    for j in range(m - 1):
        perm[j + 1] = (g * perm[j]) % n_points
    perm = np.minimum(n_points - perm, perm)
    pn = perm / n_points
    c = pn * pn - pn + 1.0 / 6
    fc = fft(c)
    for s in range(1, n_dim):
        reordered = np.hstack([c[:w + 1][::-1], c[w + 1:m][::-1]])
        q = q * (1.0 + gm[s - 1] * reordered)
        w = int(ifft(fc * fft(q)).real.argmin())
        z[s] = perm[w]

    generator = z / n_points
    generator.setflags(write=False)
    return generator, n_points
