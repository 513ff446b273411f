"""Run every preset with diagnostics and print the headline numbers.

    python3 scripts/run_presets.py [OUT_DIR]
"""

import os
import sys

from glimm_escape.presets import PRESETS, preset
from glimm_escape.runner import run_scenario

KEYS = ("steps", "t_final", "min_u_cells", "min_rho_cells", "varrho", "tv0", "tv_max", "tv_bound",
        "continuity_constant", "interaction_violations", "boundary_violations", "decay_violations")


def main(out_root):
    for name in PRESETS:
        res = run_scenario(preset(name), os.path.join(out_root, name))
        s = res.summary
        print(name)
        for key in KEYS:
            if key in s:
                print(f"  {key:24s} {s[key]}")
        if "region" in s:
            print(f"  {'region':24s} {s['region']}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "out")
