"""Random LP generator shared by the LP tests and the acceptance suite."""
import numpy as np

from ghzw.lp import LinearProgram


def random_lp(rng: np.random.Generator) -> LinearProgram:
    m = int(rng.integers(1, 7))
    n = int(rng.integers(1, 7))
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    if rng.random() < 0.3:
        A[rng.random(A.shape) < 0.4] = 0.0
    rels = list(rng.choice(["<=", "=", ">="], size=m, p=[0.5, 0.2, 0.3]))
    rhs = rng.integers(-5, 10, size=m).astype(float)
    c = rng.integers(-5, 6, size=n).astype(float)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for j in range(n):
        r = rng.random()
        if r < 0.15:
            lower[j] = -np.inf
        elif r < 0.3:
            lower[j] = float(rng.integers(-3, 3))
        if rng.random() < 0.25:
            upper[j] = (lower[j] if np.isfinite(lower[j]) else -3) + float(rng.integers(0, 6))
    sense = "max" if rng.random() < 0.5 else "min"
    return LinearProgram(c, A, rels, rhs, sense, lower, upper)
