"""Main entry point for raman-memory.

Running this module runs one raman-memory subcommand.
"""

import logging
import signal
import sys

from raman_memory.config import LOG_LEVEL

# Configure logging before importing the numerical modules
logging.basicConfig(
    level=LOG_LEVEL,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stderr)],
)
logger = logging.getLogger("raman-memory")

EXIT_INTERRUPTED = 130


def handle_interrupt(signum, frame):
    """Handle keyboard interrupt (Ctrl+C) and SIGTERM; atomic writes leave no partial files."""
    logger.info(f"Received signal {signum}, shutting down...")
    sys.exit(EXIT_INTERRUPTED)


def main(argv: list[str] | None = None) -> None:
    """Run the raman-memory command line."""
    signal.signal(signal.SIGINT, handle_interrupt)
    signal.signal(signal.SIGTERM, handle_interrupt)
    try:
        # Import here so logging is configured first
        from raman_memory.cli import run_cli

        sys.exit(run_cli(argv))
    except KeyboardInterrupt:
        logger.info("Keyboard interrupt received. Shutting down...")
        sys.exit(EXIT_INTERRUPTED)


if __name__ == "__main__":
    main()
