"""Generalized Glimm against fractional-step splitting on heated-escape.

    python3 scripts/compare_splitting.py [LEVELS]
"""

import sys

from glimm_escape.presets import preset
from glimm_escape.runner import compare_oracle


def main(levels):
    for r in compare_oracle(preset("heated-escape"), levels):
        print(f"{r['n_cells']:6d} cells  relative L1 {r['relative_l1']:.3e}  "
              f"steps {r['steps_glimm']} / {r['steps_splitting']}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
