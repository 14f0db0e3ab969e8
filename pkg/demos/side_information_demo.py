# Retrieval with side information, both flavors.
#
# A user who already holds M of the K streams wants another one. Asking for
# a random-looking combination of the target and the held streams lets the
# user subtract what it knows. Which privacy notion the combination needs
# decides which encoder runs underneath:
#   - hide (target, side info) jointly  -> joint-privacy encoder
#   - hide only the identity of each    -> partition encoder
import random

from plclab import (
    PrimeField,
    random_dataset,
    random_side_info_instance,
    solve_pir_psi_via_jplc,
    solve_pir_si_via_iplc,
)


def show(tag, dataset, inst, result):
    got = tuple(result.recovered)
    want = dataset.stream(inst.target_index).entries
    print(f"{tag}: target X_{inst.target_index}, side {inst.side_indices}")
    print(f"  coded demand support {result.demand.indices} "
          f"coefficients {result.demand.coefficients.entries}")
    print(f"  rate {result.report.rate}, recovered ok: {got == want}")


rng = random.Random(42)
f3 = PrimeField(3)

data = random_dataset(f3, 3, 8, rng)
inst = random_side_info_instance(data, 1, rng)
show("joint flavor   (K=3, M=1)", data, inst,
     solve_pir_psi_via_jplc(2, data, inst, rng))

data = random_dataset(f3, 5, 16, rng)
inst = random_side_info_instance(data, 1, rng)
show("individual flavor (K=5, M=1)", data, inst,
     solve_pir_si_via_iplc(2, data, inst, rng))
