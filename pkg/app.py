"""
Radial Wave Lab - Command Line Application
Batch entry point: simulate, verify-flux, verify-morawetz, scattering, convergence
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root directory to Python path
project_root = Path(__file__).parent
if str(project_root) not in sys.path:
    sys.path.append(str(project_root))

from loguru import logger

from constants import APP_NAME, APP_VERSION, APP_DESCRIPTION, EXIT_USAGE
from config.settings import config, configure_logging
from core.experiment_cli import COMMANDS, execute
from core.scenario_manager import scenario_manager
from utils.error_handlers import LabError
from utils.validators import input_validator


class RadialWaveLabApp:
    """
    Radial Wave Lab command line application
    Parses arguments, validates command-line inputs and dispatches one command
    """

    def __init__(self):
        self.parser = self._build_parser()

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog="radial-wave-lab", description=f"{APP_NAME}: {APP_DESCRIPTION}")
        parser.add_argument('--version', action='version', version=f"{APP_NAME} {APP_VERSION}")
        subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
        subparsers.required = True

        helps = {
            'simulate': "run the scenario and write snapshots, origin series and the report",
            'verify-flux': "flux identities on the configured regions and global bookkeeping",
            'verify-morawetz': "Morawetz sums and identity defects per radius",
            'scattering': "radiation fields, exterior differences and the retarded-energy ledger",
            'convergence': "observed orders under dr halving",
        }
        for name in COMMANDS:
            sub = subparsers.add_parser(name, help=helps[name])
            sub.add_argument('--config', required=True,
                             help="scenario YAML file or the name of a bundled scenario")
            sub.add_argument('--out', default=None, help="output directory")
            sub.add_argument('--threads', default=None,
                             help="worker threads for independent runs (default: RWL_THREADS or 1)")
            sub.add_argument('--seed-metadata-off', action='store_true',
                             help="omit the timestamp/version block for bit-exact outputs")
            sub.add_argument('--log-level', default=None,
                             choices=['TRACE', 'DEBUG', 'INFO', 'SUCCESS', 'WARNING', 'ERROR', 'CRITICAL'])
        return parser

    def _usage_error(self, message: str) -> int:
        input_validator.log_rejection("arguments", message)
        return EXIT_USAGE

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Parse argv and run one command; returns the process exit code"""
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            # argparse exits 2 on usage errors; 2 is reserved for verdict failures
            return EXIT_USAGE if e.code not in (0, None) else 0

        configure_logging(args.log_level)

        threads = None
        if args.threads is not None:
            ok, message = input_validator.validate_threads(args.threads)
            if not ok:
                return self._usage_error(message)
            threads = int(args.threads)

        try:
            path = scenario_manager.resolve(args.config)
        except LabError as e:
            return self._usage_error(e.message)
        ok, message = input_validator.validate_config_path(str(path))
        if not ok:
            return self._usage_error(message)
        if args.out:
            ok, message = input_validator.validate_output_dir(args.out)
            if not ok:
                return self._usage_error(message)

        include_metadata = False if args.seed_metadata_off else config.run.include_metadata
        outcome = execute(args.command, str(path), out=args.out, threads=threads,
                          include_metadata=include_metadata)
        logger.debug(f"{args.command} finished with exit code {outcome.exit_code}")
        return outcome.exit_code


# Application entry point
def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    app = RadialWaveLabApp()
    return app.run(argv)


if __name__ == "__main__":
    sys.exit(main())
