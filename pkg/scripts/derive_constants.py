#!/usr/bin/env python3
"""
Derive pinned regression constants
Solves the TV defect LP on the free group of rank 2 with the exact-rational
oracle and prints the optimal values next to the float engine's
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.exact_lp import solve_exact  # noqa: E402
from src.groups import FreeGroup  # noqa: E402
from src.lp import solve_lp  # noqa: E402
from src.solver import SolveConfig, build_defect_lp  # noqa: E402

logger = logging.getLogger(__name__)


def derive(radius: int, generators=None):
    spec = FreeGroup(2)
    cfg = SolveConfig(radius=radius, generators=generators)
    lp = build_defect_lp(spec, cfg)
    logger.info(f"F_2, r={radius}, generators {generators or 'all'}: {lp.problem.num_variables} variables")
    exact = solve_exact(lp.problem)
    approx = solve_lp(lp.problem)
    return exact, approx


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument('--radius', type=int, action='append',
                        help='Radius to derive (repeatable; default 1 and 2)')
    parser.add_argument('--all-generators', action='store_true',
                        help='Use a, A, b, B instead of the subset a, b (slow at r=2)')
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    generators = None if args.all_generators else ['a', 'b']
    for radius in args.radius or [1, 2]:
        exact, approx = derive(radius, generators)
        print(f"r={radius}: exact {exact.value} ({float(exact.value):.17g}), "
              f"float {approx.value:.17g}, pivots {exact.pivots}")


if __name__ == "__main__":
    main()
