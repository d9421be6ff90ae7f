"""TMI statistics of Haar-random 4-qubit unitaries.

Usage: python3 scripts/tmi_haar.py [--samples 100]

Compares the operator TMI of U (its Choi state, A on the input register and
B, C on the output register) with the TMI of the pure output state U|0000>.
The latter vanishes identically because A, B and C cover every qubit.
"""
import argparse

import numpy as np
from scipy.stats import unitary_group

from scramble import core, diagnostics


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=100)
    args = p.parse_args(argv)
    op, state = [], []
    for seed in range(args.samples):
        u = unitary_group.rvs(16, random_state=seed)
        op.append(diagnostics.unitary_tmi(u, [0], [1], [2, 3]))
        psi = core.pure_state(u[:, 0])
        state.append(diagnostics.tripartite_mutual_information(psi, [0], [1], [2, 3]))
    op, state = np.array(op), np.array(state)
    print(f"operator TMI: {np.sum(op < 0)}/{args.samples} negative, range [{op.min():.3f}, {op.max():.3f}]")
    print(f"state TMI:    {np.sum(state < -1e-10)}/{args.samples} negative, max |TMI| {np.abs(state).max():.1e}")


if __name__ == "__main__":
    main()
