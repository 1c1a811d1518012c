"""
Dayflow - Command Line Front End
Reads group and action specifications, runs defect profiles, mean solves and
fixed-point pipelines, and writes machine-readable reports
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import __version__
from .actions import afp_pipeline, load_action, simplex_vertex
from .config import Config
from .errors import DayflowError, InvalidArgument
from .groups import GroupSpec, load_group
from .manifest import RunManifest
from .measures import MolecularMeasure
from .selftest import run_selftest
from .solver import (DEFECT_KINDS, SolveConfig, box_mean, defect_profile, folner_uniform,
                     solve_invariant_mean)
from .testfn import LipschitzBallSpec, TestFunction, testfunction_from_json

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
WITNESS_INTERPRETATION = "defect>0 at this radius; not a proof of non-amenability"
VANISHING_INTERPRETATION = "defect vanishes at this radius (within slack)"


def setup_logging(level: Optional[str] = None):
    """File handler on Config.LOG_FILE plus a console handler, colored when coloredlogs is installed"""
    level = getattr(logging, (level or Config.LOG_LEVEL).upper())
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.setLevel(level)

    if Config.LOG_FILE is not None:
        Config.LOG_FILE.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(Config.LOG_FILE)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(file_handler)

    try:
        import coloredlogs
        coloredlogs.install(level=level, fmt=LOG_FORMAT, stream=sys.stderr)
    except ImportError:
        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(stream_handler)


# --- argument helpers ------------------------------------------------------------------------


def parse_radii(text: str) -> List[int]:
    """'1..60' or '1,2,5' -> list of radii"""
    try:
        if '..' in text:
            lo, hi = text.split('..', 1)
            radii = list(range(int(lo), int(hi) + 1))
        else:
            radii = [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise InvalidArgument(f"Cannot parse radii {text!r} (use '1..60' or '1,2,5')")
    if not radii or min(radii) < 0:
        raise InvalidArgument(f"Radii must be a nonempty list of nonnegative integers (got {text!r})")
    return radii


def parse_point(text: str) -> np.ndarray:
    """'0,0' or '[0, 0]' -> vector"""
    try:
        values = json.loads(text) if text.strip().startswith('[') else [float(v) for v in text.split(',')]
        return np.asarray(values, dtype=float).reshape(-1)
    except (ValueError, json.JSONDecodeError):
        raise InvalidArgument(f"Cannot parse point {text!r}")


def load_family(path, spec: GroupSpec) -> List[TestFunction]:
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise InvalidArgument(f"Test family not found: {path}")
    except json.JSONDecodeError as e:
        raise InvalidArgument(f"Test family {path} is not valid JSON: {e}")
    if not isinstance(data, list):
        raise InvalidArgument("A test family must be a JSON array of test functions")
    return [testfunction_from_json(entry, spec) for entry in data]


def _ball_spec(args) -> LipschitzBallSpec:
    return LipschitzBallSpec(metric=args.metric, sup_cap=args.sup_cap, lipschitz_cap=args.lipschitz_cap)


def _solve_config(args, spec: GroupSpec, radius: int) -> SolveConfig:
    family = load_family(args.family, spec) if getattr(args, 'family', None) else None
    generators = args.generators.split(',') if getattr(args, 'generators', None) else None
    return SolveConfig(radius=radius, kind=args.kind,
                       ball_spec=_ball_spec(args) if args.kind == 'blip' else None,
                       family=family, tolerance=args.tolerance, generators=generators)


def _write_json(data) -> Callable[[Path], None]:
    def writer(path: Path):
        with open(path, 'w') as f:
            json.dump(data, f, indent=2)
    return writer


def _write_csv(frame) -> Callable[[Path], None]:
    def writer(path: Path):
        frame.to_csv(path, index=False, float_format=Config.CSV_FLOAT_FORMAT)
    return writer


# --- commands --------------------------------------------------------------------------------


def cmd_defect(args) -> int:
    """Følner and LP defect profile for r = 0..radius"""
    spec = load_group(args.group)
    manifest = RunManifest('defect', args.out)
    manifest.record_input('group', args.group)
    manifest.record_options(radius=args.radius, kind=args.kind, metric=args.metric, family=args.family)

    start = time.perf_counter()
    family = load_family(args.family, spec) if args.family else None
    table = defect_profile(spec, args.radius, kind=args.kind,
                           ball_spec=_ball_spec(args) if args.kind == 'blip' else None,
                           family=family, tolerance=args.tolerance, jobs=args.jobs)

    manifest.record_timings('rows', table.attrs.get('millis', []))
    manifest.stage('profile.csv', _write_csv(table))
    manifest.commit(time.perf_counter() - start)
    logger.info(f"✅ Profile written: {len(table)} rows, final LP defect {table['lp_defect'].iloc[-1]:.6g}")
    return 0


def cmd_solve(args) -> int:
    """Single LP solve at a fixed radius"""
    spec = load_group(args.group)
    manifest = RunManifest('solve', args.out)
    manifest.record_input('group', args.group)
    manifest.record_options(radius=args.radius, kind=args.kind, generators=args.generators)

    start = time.perf_counter()
    report = solve_invariant_mean(spec, _solve_config(args, spec, args.radius))

    manifest.record_timings('solve', report.wall_time * 1000.0)
    manifest.stage('report.json', _write_json(report.to_json(prune=args.prune)))
    manifest.commit(time.perf_counter() - start)
    logger.info(f"✅ Mean found: max defect {report.max_defect:.12g} ({report.lp_status})")
    return 0


def _afp_means(args, spec: GroupSpec, radii: Sequence[int]) -> List[MolecularMeasure]:
    if args.mean == 'folner':
        return [folner_uniform(spec, r) for r in radii]
    if args.mean == 'box':
        return [box_mean(spec, r) for r in radii]
    return [solve_invariant_mean(spec, _solve_config(args, spec, r)).measure for r in radii]


def cmd_afp(args) -> int:
    """Approximate fixed points x_r = extend_phi(mu_r) along a sequence of means"""
    spec = load_group(args.group)
    action = load_action(args.action, spec, seed=args.seed)
    if args.x0 is not None:
        x0 = parse_point(args.x0)
    elif action.domain.kind == 'simplex':
        x0 = simplex_vertex(spec, spec.identity)
    else:
        raise InvalidArgument("--x0 is required unless the action is canonical")
    if x0.shape != (action.dimension,):
        raise InvalidArgument(f"--x0 has dimension {x0.size}; the action lives in dimension {action.dimension}")
    radii = parse_radii(args.radii)

    manifest = RunManifest('afp', args.out)
    manifest.record_input('group', args.group)
    manifest.record_input('action', args.action)
    manifest.record_options(x0=x0.tolist(), radii=radii, mean=args.mean, kind=args.kind)

    start = time.perf_counter()
    trace = afp_pipeline(spec, action, x0, _afp_means(args, spec, radii), radii=radii, jobs=args.jobs)
    frame = trace.to_frame()
    flagged = int(frame['orbit_flag'].sum())
    if flagged:
        logger.warning(f"⚠️  {flagged} row(s) flagged: orbit points left the declared domain")

    manifest.stage('trace.csv', _write_csv(frame))
    manifest.commit(time.perf_counter() - start)
    logger.info(f"✅ Trace written: {len(frame)} rows, final residual {frame['residual_max'].iloc[-1]:.6g}")
    return 0


def cmd_witness(args) -> int:
    """LP defect floor at one radius, with its interpretation"""
    spec = load_group(args.group)
    manifest = RunManifest('witness', args.out)
    manifest.record_input('group', args.group)
    manifest.record_options(radius=args.radius, kind=args.kind)

    start = time.perf_counter()
    report = solve_invariant_mean(spec, _solve_config(args, spec, args.radius))
    positive = report.max_defect > Config.DEFECT_SLACK
    witness = {
        'group': spec.to_json(),
        'radius': args.radius,
        'kind': report.kind,
        'lp_defect': report.max_defect,
        'lp_status': report.lp_status,
        'interpretation': WITNESS_INTERPRETATION if positive else VANISHING_INTERPRETATION,
    }

    manifest.stage('witness.json', _write_json(witness))
    manifest.commit(time.perf_counter() - start)
    print(json.dumps(witness, indent=2))
    return 0


def cmd_selftest(args) -> int:
    """Invariant suite; exit 0 iff every check passes"""
    results = run_selftest(seed=args.seed)
    failed = [name for name, result in results.items() if not result['passed']]
    logger.info("="*80)
    if failed:
        logger.error(f"❌ {len(failed)} of {len(results)} checks failed: {', '.join(failed)}")
        return 1
    logger.info(f"✅ All {len(results)} checks passed")
    return 0


# --- parser ----------------------------------------------------------------------------------


def _add_kind_options(parser: argparse.ArgumentParser):
    parser.add_argument('--kind', choices=DEFECT_KINDS, default='tv', help='Defect seminorm')
    parser.add_argument('--metric', default='word', choices=('word', 'discrete', 'unit'),
                        help='Metric for --kind blip')
    parser.add_argument('--sup-cap', type=float, default=1.0, help='Sup-norm cap for --kind blip')
    parser.add_argument('--lipschitz-cap', type=float, default=1.0, help='Lipschitz cap for --kind blip')
    parser.add_argument('--family', help='JSON array of test functions for --kind weak')
    parser.add_argument('--tolerance', type=float, default=None, help='LP tolerance')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='dayflow', description=__doc__.strip().splitlines()[0])
    parser.add_argument('--version', action='version', version=f"dayflow {__version__}")
    parser.add_argument('--seed', type=int, default=Config.SEED, help='Seed for every sampling check')
    parser.add_argument('--jobs', type=int, default=Config.JOBS, help='Worker threads')
    parser.add_argument('--log-level', default=None, help='Logging level (default from LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('defect', help='Følner and LP defect profile')
    p.add_argument('group', help='Group specification JSON')
    p.add_argument('--radius', type=int, required=True, help='Largest radius')
    _add_kind_options(p)
    p.add_argument('--out', type=Path, default=None, help='Output directory')
    p.set_defaults(handler=cmd_defect)

    p = sub.add_parser('solve', help='Invariant-mean LP at one radius')
    p.add_argument('group')
    p.add_argument('--radius', type=int, required=True)
    _add_kind_options(p)
    p.add_argument('--generators', help='Comma-separated generator subset')
    p.add_argument('--prune', type=float, default=0.0, help='Drop |weights| <= prune from the JSON')
    p.add_argument('--out', type=Path, default=None)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser('afp', help='Approximate fixed points of an affine action')
    p.add_argument('group')
    p.add_argument('action', help='Action specification JSON')
    p.add_argument('--x0', default=None, help="Base point, e.g. '0,0'")
    p.add_argument('--radii', default='1..10', help="'1..60' or '1,2,5'")
    p.add_argument('--mean', choices=('folner', 'lp', 'box'), default='folner')
    _add_kind_options(p)
    p.add_argument('--out', type=Path, default=None)
    p.set_defaults(handler=cmd_afp)

    p = sub.add_parser('witness', help='LP defect floor at one radius')
    p.add_argument('group')
    p.add_argument('--radius', type=int, required=True)
    _add_kind_options(p)
    p.add_argument('--out', type=Path, default=None)
    p.set_defaults(handler=cmd_witness)

    p = sub.add_parser('selftest', help='Run the invariant suite')
    p.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    logger.info("="*80)
    logger.info(f"DAYFLOW {__version__} - {args.command}")
    logger.info("="*80)

    try:
        Config.validate()
        if args.jobs < 1:
            raise InvalidArgument(f"--jobs must be at least 1 (got {args.jobs})")
        return args.handler(args)
    except DayflowError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"❌ Invalid configuration: {e}")
        return 2
    except KeyboardInterrupt:
        logger.info("\n⚠️  Stopped by user")
        return 130
    except Exception as e:
        logger.error(f"\n❌ Unexpected error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
