#!/usr/bin/env python3
"""
Dayflow Runner
Runs the dayflow command line with signal handling and exit codes
"""

import sys
import signal
import logging
from src.cli import main

logger = logging.getLogger(__name__)


def signal_handler(signum, frame):
    """Turn SIGTERM into a KeyboardInterrupt so the command stops without writing outputs"""
    signal_name = signal.Signals(signum).name
    logger.info(f"\n⚠️  Received {signal_name}, stopping")
    raise KeyboardInterrupt


def setup_signal_handlers():
    signal.signal(signal.SIGTERM, signal_handler)
    logger.debug("Signal handler registered for SIGTERM")


if __name__ == "__main__":
    setup_signal_handlers()

    try:
        exit_code = main()
        sys.exit(exit_code if exit_code is not None else 0)
    except KeyboardInterrupt:
        logger.info("\n⚠️  Keyboard interrupt received")
        sys.exit(130)  # Standard exit code for Ctrl+C
    except Exception as e:
        logger.error(f"❌ Unexpected error in main: {e}", exc_info=True)
        sys.exit(1)
