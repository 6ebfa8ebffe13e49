"""
Diversifying Regularization Experiments - Entry Point
Runs one experiment per invocation: python main.py <subcommand> [flags]
"""
import os
import sys

from dotenv import load_dotenv

from src.experiments.cli import main as cli_main
from src.utils.logging import logger


def main() -> int:
    """Main entry point"""
    # Load environment variables (DR_DATA_ROOT, DR_OUTPUT_DIR, LOG_LEVEL)
    load_dotenv()
    logger.set_level(os.getenv("LOG_LEVEL", "INFO"))

    try:
        return cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        print("\n[Shutdown] Experiment stopped by user")
        logger.info("Experiment interrupted by user")
        return 130


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
