"""NAR summary rows, one per household.

With descriptor paths as arguments, reports those households. Without
arguments, synthesises one household per NAR target and reports them.

    python3 scripts/nar_table.py                       # synthetic sweep
    python3 scripts/nar_table.py data/*/household.conf # real exports
"""

import sys

from nilmgap import synth
from nilmgap.cli import nar_row
from nilmgap.ingest import load_household, read_descriptor

TARGETS = (0.0, 0.059, 0.15, 0.275, 0.651)
APPLIANCES = ["fridge", "kettle", "washing_machine", "dishwasher", "microwave"]


def main(paths):
    if paths:
        households = [load_household(read_descriptor(p)) for p in paths]
    else:
        models = synth.catalog_models(APPLIANCES)
        households = [
            synth.generate(models, synth.NoiseSpec(t), 100_000, seed=i, label=f"synthetic-nar{t:g}")
            for i, t in enumerate(TARGETS)
        ]
    for i, ds in enumerate(households):
        print(nar_row(ds, header=i == 0))


if __name__ == "__main__":
    main(sys.argv[1:])
