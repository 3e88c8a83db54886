"""Regenerate the small problems bundled under src/msso/data/fixtures."""

import os

import numpy as np

from msso.problem import MssoProblem, save_problem

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "src", "msso", "data", "fixtures")


def planted(rng, M, N, P, K, complex_data=False):
    shape = (P, M, N)
    F = rng.standard_normal(shape)
    if complex_data:
        F = F + 1j * rng.standard_normal(shape)
    F /= np.linalg.norm(F, axis=1, keepdims=True)
    G = np.zeros((N, P), dtype=F.dtype)
    rows = np.sort(rng.choice(N, size=K, replace=False))
    G[rows] = rng.standard_normal((K, P))
    if complex_data:
        G[rows] += 1j * rng.standard_normal((K, P))
    return MssoProblem(np.einsum("pmn,np->m", F, G), F)


def main():
    rng = np.random.default_rng(20240117)
    os.makedirs(OUT, exist_ok=True)
    fixtures = {
        "real_small.json": planted(rng, 12, 8, 2, 2),
        "complex_small.json": planted(rng, 6, 5, 2, 2, complex_data=True),
        "wide.json": planted(rng, 2, 6, 3, 2),
    }
    for name, problem in fixtures.items():
        save_problem(problem, os.path.join(OUT, name))


if __name__ == "__main__":
    main()
