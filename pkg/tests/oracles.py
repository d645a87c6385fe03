"""Independent reference implementations used as test oracles.

Everything here is deliberately naive (direct O(T^2) transforms, exhaustive
loops) and shares no code with the library paths it checks.
"""

import numpy as np


def dft_direct(x: np.ndarray) -> np.ndarray:
    """Direct O(T^2) DFT of a real 1-D signal, full complex spectrum."""
    t = len(x)
    k = np.arange(t)
    w = np.exp(-2j * np.pi * np.outer(k, k) / t)
    return w @ x.astype(np.complex128)


def rdft_direct(x: np.ndarray) -> np.ndarray:
    """Direct half-spectrum DFT (first T//2 + 1 bins)."""
    return dft_direct(x)[: len(x) // 2 + 1]


def idft_direct(spec_full: np.ndarray) -> np.ndarray:
    """Direct O(T^2) inverse DFT with the 1/T factor."""
    t = len(spec_full)
    k = np.arange(t)
    w = np.exp(2j * np.pi * np.outer(k, k) / t)
    return (w @ spec_full) / t


def irdft_direct(spec_half: np.ndarray, t: int) -> np.ndarray:
    """Inverse via Hermitian extension of a half spectrum, direct O(T^2)."""
    full = np.zeros(t, dtype=np.complex128)
    s = t // 2 + 1
    half = spec_half.astype(np.complex128).copy()
    half[0] = half[0].real
    if t % 2 == 0:
        half[-1] = half[-1].real
    full[:s] = half
    full[s:] = np.conj(half[1 : t - s + 1][::-1])
    return idft_direct(full).real


def levenshtein_matrix(a, b) -> int:
    """Textbook dynamic-programming edit distance."""
    m, n = len(a), len(b)
    d = np.zeros((m + 1, n + 1), dtype=int)
    d[:, 0] = np.arange(m + 1)
    d[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i, j] = min(d[i - 1, j] + 1, d[i, j - 1] + 1, d[i - 1, j - 1] + cost)
    return int(d[m, n])
