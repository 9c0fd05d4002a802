"""Reference constructions that share no code with the package.

Element gates come from ``scipy.linalg.expm`` and literal CNOT tables, and
are embedded into the full register by explicit index bookkeeping.
"""

from functools import lru_cache

import numpy as np
from scipy.linalg import expm

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
C1 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
C2 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def exp_pauli(theta, pauli):
    return expm(1j * theta * pauli)


def embed(mat, targets, nq):
    """Full 2^nq matrix of ``mat`` on ``targets`` (targets[0] = most significant of mat)."""
    k = len(targets)
    dim = 1 << nq
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (nq - 1 - q)) & 1 for q in range(nq)]
        sub_in = 0
        for t in targets:
            sub_in = (sub_in << 1) | bits[t]
        for sub_out in range(1 << k):
            amp = mat[sub_out, sub_in]
            if amp == 0:
                continue
            new = list(bits)
            for pos, t in enumerate(targets):
                new[t] = (sub_out >> (k - 1 - pos)) & 1
            row = int("".join(map(str, new)), 2)
            out[row, col] += amp
    return out


def rotation_element(m, k):
    xi = 2 * np.pi / 2 ** m
    theta = 2 ** (k - 1) * xi
    e = np.zeros((8, 8), dtype=complex)
    e[0:2, 0:2] = np.eye(2)
    e[2:4, 2:4] = exp_pauli(theta, SX)
    e[4:6, 4:6] = np.eye(2)
    e[6:8, 6:8] = exp_pauli(theta, SZ)
    return e


def cnot_element():
    e = np.zeros((16, 16), dtype=complex)
    e[0:8, 0:8] = np.eye(8)
    e[8:12, 8:12] = C1
    e[12:16, 12:16] = C2
    return e


@lru_cache(maxsize=None)
def dense_G(n, m):
    """Product of element gates for the program-then-data layout."""
    pw = 1 + m + 2 * (n - 1)
    nq = pw + n
    r = pw - 1
    d = [pw + j for j in range(n)]
    g = np.eye(1 << nq, dtype=complex)
    for k in range(1, m + 1):
        a = 2 * (n - 1) + (m - k)
        g = embed(rotation_element(m, k), [r, a, d[0]], nq) @ g
    for k in range(2, n + 1):
        b, p = 2 * (n - k), 2 * (n - k) + 1
        g = embed(cnot_element(), [b, p, d[k - 2], d[k - 1]], nq) @ g
    return g


def data_unitary(n, m, word):
    """U_p read off the dense oracle as the diagonal block for program word ``word``."""
    pw = 1 + m + 2 * (n - 1)
    g = dense_G(n, m)
    p = int(word, 2)
    dn = 1 << n
    return g[p * dn:(p + 1) * dn, p * dn:(p + 1) * dn]


def brute_quantize(theta, m):
    """Nearest grid code by scanning every code; ties to the smaller code."""
    xi = 2 * np.pi / 2 ** m
    best, best_err = None, None
    for code in range(2 ** m):
        err = np.angle(np.exp(1j * (code * xi - theta)))
        if best is None or abs(err) < abs(best_err) - 1e-15:
            best, best_err = code, err
    return best, best_err


def equal_up_to_phase(a, b, atol):
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    phase = a[idx] / b[idx]
    phase /= abs(phase)
    return np.max(np.abs(a - phase * b)) <= atol


CNOT_CT = C1   # control is the first listed qubit


def ideal_unitary(gates, n):
    """Exact circuit operator on n data qubits, d_1 most significant."""
    from qcpu.compiler import Cnot

    u = np.eye(1 << n, dtype=complex)
    for g in gates:
        if isinstance(g, Cnot):
            step = embed(CNOT_CT, [g.control - 1, g.target - 1], n)
        else:
            step = embed(g.matrix, [g.target - 1], n)
        u = step @ u
    return u


def haar_unitary(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_circuit(n, max_gates, rng):
    from qcpu.compiler import Cnot, Unitary1Q

    gates = []
    for _ in range(int(rng.integers(1, max_gates + 1))):
        if n > 1 and rng.random() < 0.4:
            c, t = rng.choice(np.arange(1, n + 1), size=2, replace=False)
            gates.append(Cnot(int(c), int(t)))
        else:
            gates.append(Unitary1Q(haar_unitary(2, rng), int(rng.integers(1, n + 1))))
    return gates
