"""
Command-line front door: verify, simulate and lifespan runs with CSV output,
a digest and a JSON manifest.

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 numeric abort.
"""

import argparse
import csv
import datetime
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import config
from digest_generator import DigestGenerator
from energy_certificates import SUMMARY_COLUMNS, all_certificates, write_certificates_csv
from exceptions import (
    AdmissibilityError, ConfigError, ContractionError, CutoffError, LatticeError, PaddingError,
    UnknownInequalityError
)
from inequality_registry import run_suite, suite_passed, write_reports_csv
from lab import (
    PRESETS, estimate_equivalence_constant, estimate_tame_constant, gen_initial_data, load_config,
    norm_set, resolve_threshold, t_good
)
from lifespan import lifespan_scan
from nls_solver import integrate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3

CONFIG_ERRORS = (ConfigError, AdmissibilityError, UnknownInequalityError, LatticeError,
                 CutoffError, PaddingError)


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def canonical_hash(command, cfg_dict, seed):
    """SHA-256 of the canonical JSON of (command, resolved config, seed)."""
    payload = {'command': command, 'config': cfg_dict, 'seed': seed}
    raw = json.dumps(payload, separators=(",", ":"), sort_keys=True).encode("utf-8")
    return hashlib.sha256(raw).hexdigest()


@dataclass
class RunManifest:
    """Record of one command run; every written file is listed in outputs."""

    command: str
    config_path: Optional[str]
    preset: Optional[str]
    config: dict
    seed: int
    run_id: str
    started: str = field(default_factory=_now)
    finished: Optional[str] = None
    exit_code: Optional[int] = None
    outputs: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    def add(self, *paths):
        self.outputs.extend(str(p) for p in paths)

    def write(self, out_dir):
        path = os.path.join(out_dir, 'manifest.json')
        self.finished = _now()
        with open(path, 'w') as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
        return path


def parse_args(argv=None):
    """Parse command-line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON config file.")
    common.add_argument("--preset", choices=sorted(PRESETS), default=None,
                        help="Preset merged under the config file.")
    common.add_argument("--seed", type=int, default=None, help="Master seed (overrides config).")
    common.add_argument("--out", type=str, default=config.OUTPUT_DIR, help="Output directory.")
    common.add_argument("--threads", type=int, default=config.DEFAULT_THREADS,
                        help="Worker threads for registry ids and scan cells.")

    parser = argparse.ArgumentParser(
        description="Resonant NLS laboratory: inequality checks, simulations and lifespan scans.")
    sub = parser.add_subparsers(dest='command', required=True)
    verify = sub.add_parser('verify', parents=[common], help="Run the inequality registry.")
    verify.add_argument("--only", type=str, default=None,
                        help="Comma-separated registry ids (default: all).")
    verify.add_argument("--samples", type=int, default=None, help="Samples per ladder rung.")
    sub.add_parser('simulate', parents=[common], help="Integrate one run and certify it.")
    sub.add_parser('lifespan', parents=[common], help="Scan escape times over (eps, s1).")
    return parser.parse_args(argv)


def resolve_config(args):
    overrides = {'seed': args.seed} if args.seed is not None else {}
    return load_config(path=args.config, preset=args.preset, overrides=overrides)


def command_verify(cfg, args, manifest):
    """Check registry inequalities; nonzero exit iff any report fails."""
    ids = [i.strip() for i in args.only.split(',') if i.strip()] if args.only else None
    reports = run_suite(cfg, ids, threads=args.threads, samples=args.samples)
    manifest.add(write_reports_csv(reports, os.path.join(args.out, 'verify_reports.csv')))
    manifest.add(*DigestGenerator().write_digest(
        args.out, 'verify_digest', title="Inequality verification", run_id=manifest.run_id,
        seed=cfg.seed, reports=reports))
    passed = suite_passed(reports)
    logger.info("verify: %d/%d reports passed", sum(r.passed for r in reports), len(reports))
    return EXIT_OK if passed else EXIT_FAILED


def _write_summary(series, path):
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(SUMMARY_COLUMNS))
        writer.writeheader()
        for item in series:
            writer.writerow(item.summary())
    return path


def command_simulate(cfg, args, manifest):
    """Integrate admissible data, write telemetry and energy certificates."""
    m_hat = estimate_tame_constant(cfg)
    # the weighted norms and T_good run on the measured M, with R = 2M
    cfg = cfg.with_overrides(M=m_hat, R=2.0 * m_hat)
    c_hat = estimate_equivalence_constant(cfg)
    c_pinned = max(cfg.C, c_hat)
    threshold = resolve_threshold(cfg, c_hat)
    manifest.constants.update({'M_hat': m_hat, 'C_hat': c_hat, 'C_pinned': c_pinned,
                               'N': threshold, 'R': cfg.R, 't_good': t_good(cfg)})

    u0, report = gen_initial_data(cfg.data, cfg)
    traj = integrate(u0, cfg.solver, norm_set(cfg, threshold))
    manifest.add(*traj.to_csv(os.path.join(args.out, 'trajectory.csv'),
                              extra_metadata={'admissibility': report.to_dict(),
                                              'constants': manifest.constants}))

    series = all_certificates(traj, cfg, M=m_hat, C=c_pinned)
    manifest.add(write_certificates_csv(series, os.path.join(args.out, 'certificates.csv')))
    manifest.add(_write_summary(series, os.path.join(args.out, 'certificate_summary.csv')))
    notes = [f"status {traj.status}", f"relative mass drift {traj.mass_drift():.3e}"]
    manifest.add(*DigestGenerator().write_digest(
        args.out, 'simulate_digest', title="Simulation", run_id=manifest.run_id, seed=cfg.seed,
        certificates=series, notes=notes))
    if traj.status == 'numeric_abort':
        return EXIT_ABORT
    return EXIT_OK


def command_lifespan(cfg, args, manifest):
    """Scan (eps, s1) cells; nonzero exit iff a feasible cell escapes before T_good."""
    table = lifespan_scan(cfg, threads=args.threads)
    manifest.add(table.to_csv(os.path.join(args.out, 'lifespan.csv')))
    notes = [f"escape time nondecreasing in s1: {table.monotone_in_s1()}"]
    manifest.add(*DigestGenerator().write_digest(
        args.out, 'lifespan_digest', title="Lifespan scan", run_id=manifest.run_id,
        seed=cfg.seed, table=table, notes=notes))
    if table.aborted:
        return EXIT_ABORT
    return EXIT_OK if table.passed else EXIT_FAILED


COMMANDS = {
    'verify': command_verify,
    'simulate': command_simulate,
    'lifespan': command_lifespan,
}


def main(argv=None):
    """Run one command and return its exit code."""
    args = parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(config.LOG_LEVEL).upper(), logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    cfg_dict = cfg.to_dict()
    manifest = RunManifest(command=args.command, config_path=args.config, preset=args.preset,
                           config=cfg_dict, seed=cfg.seed,
                           run_id=canonical_hash(args.command, cfg_dict, cfg.seed))
    try:
        code = COMMANDS[args.command](cfg, args, manifest)
    except CONFIG_ERRORS as exc:
        logger.error("%s failed: %s", args.command, exc)
        code = EXIT_CONFIG
    except ContractionError as exc:
        logger.error("%s aborted: %s (factor %.4f)", args.command, exc, exc.factor)
        code = EXIT_ABORT
    manifest.exit_code = code
    path = manifest.write(args.out)
    logger.info("%s finished with exit code %d; manifest at %s", args.command, code, path)
    return code


if __name__ == '__main__':
    sys.exit(main())
