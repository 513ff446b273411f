"""Refinement study on escape-compliant: weak and entropy residuals per level.

    python3 scripts/convergence.py [BASE_CELLS] [LEVELS]

With the defaults (400 cells, 5 levels) this takes about 20 minutes on one core.
"""

import sys

from glimm_escape import io
from glimm_escape.presets import preset
from glimm_escape.runner import convergence_study


def main(base, levels):
    c = preset("escape-compliant")
    c = c.refined(base / c.grid.n_cells)
    rows = convergence_study(c, levels)
    for r in rows:
        print(io.dumps({key: r.get(key) for key in ("n_cells", "weak_residual", "entropy_residual",
                                                    "entropy_scale", "l1_to_previous", "l1_ratio")}))


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:3]]
    main(*(args + [400, 5][len(args):]))
