"""Numpy fallback for the frame sweep; vectorized across lines."""

import numpy as np


def polar_su3(F):
    """Nearest SU(3) element for a stack (..., 3, 3) of near-unitary matrices."""
    u, _, vh = np.linalg.svd(F)
    Q = u @ vh
    d = np.linalg.det(Q)
    return Q * (np.exp(-1j * np.angle(d) / 3))[..., None, None]


def sweep_lines(F0, A, Amid, h, drift_limit):
    m, n = A.shape[:2]
    out = np.empty((m, n, 3, 3), dtype=np.complex128)
    F = np.array(F0, dtype=np.complex128)
    out[:, 0] = F
    eye = np.eye(3)
    worst = 0.0
    for s in range(n - 1):
        k1 = F @ A[:, s]
        k2 = (F + 0.5 * h * k1) @ Amid[:, s]
        k3 = (F + 0.5 * h * k2) @ Amid[:, s]
        k4 = (F + h * k3) @ A[:, s + 1]
        F = F + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        defect = np.linalg.norm(np.conj(np.swapaxes(F, -1, -2)) @ F - eye, axis=(-2, -1))
        worst = max(worst, float(defect.max()))
        if worst > drift_limit:
            break
        F = polar_su3(F)
        out[:, s + 1] = F
    return out, worst
