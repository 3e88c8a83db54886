"""Regenerate src/msso/data/noisy_lambdas.json.

Picks one lambda per (SNR, K) cell of the noisy experiment by mean recovery
over tuning draws that are disjoint from the evaluation trials.
"""

import argparse
import json
import os

from msso.experiments import tune_noisy_lambdas

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "src", "msso", "data", "noisy_lambdas.json")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--observations", type=int, default=3)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default=OUT)
    args = parser.parse_args()
    entries = tune_noisy_lambdas(observations=args.observations,
                                 jobs=args.jobs)
    doc = {
        "description": "lambda per (snr_db, K) for the noisy experiment; "
                       "N=30, M=25, P=3; tuned with RBRS on "
                       f"{args.observations} draws per cell from the "
                       "noisy-tune seed family, grid 41 points on [0, 2]",
        "entries": entries,
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
