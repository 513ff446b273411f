"""Supersonic and Knudsen radii for escape-compliant, with the dominance scans.

    python3 scripts/region_scan.py
"""

from glimm_escape import io
from glimm_escape.presets import preset
from glimm_escape.runner import run_scenario


def main():
    res = run_scenario(preset("escape-compliant"))
    print(io.dumps(res.region.to_json(), indent=1))


if __name__ == "__main__":
    main()
