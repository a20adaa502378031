#!/usr/bin/env python3
"""
blplab Runner
Main entry point for the blplab command line.
"""

import logging
import sys

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# Load environment variables
load_dotenv()

from blplab.config import settings
from blplab.main import main

handlers = [RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)]
if settings.log_file:
    handlers.append(logging.FileHandler(settings.log_file))

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(name)s - %(message)s",
    handlers=handlers,
)

logger = logging.getLogger(__name__)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(2)
