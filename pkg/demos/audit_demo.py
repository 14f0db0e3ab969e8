"""Run the privacy audits at small shapes and print the reports.

The exhaustive audits enumerate every encoder path with exact rational
weights, so a passing run means the view distributions literally coincide.
The sampled audits draw fresh encodings and compare debiased frequencies.
"""

import argparse
import random

from plclab import (
    PrimeField,
    audit_individual_privacy,
    audit_joint_privacy,
    audit_recoverability,
    audit_reduction_marginal,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=20000,
                    help="sample count for the sampled audits")
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    f3 = PrimeField(3)
    rng = random.Random(args.seed)

    print(audit_recoverability("jplc", 2, 4, 2, PrimeField(5), rng, trials=25))
    print(audit_recoverability("iplc", 2, 4, 2, f3, rng, trials=25))

    print(audit_joint_privacy(2, 3, 2, f3, mode="exhaustive"))
    print(audit_individual_privacy(2, 5, 2, f3, mode="exhaustive"))
    print(audit_reduction_marginal("pir-psi", 2, 3, 1, f3, mode="exhaustive"))

    print(audit_joint_privacy(2, 3, 2, f3, rng=rng, mode="sampled",
                              samples=args.samples))
    print(audit_individual_privacy(2, 5, 2, f3, rng=rng, mode="sampled",
                                   samples=args.samples))


if __name__ == "__main__":
    main()
