"""Allow ``python -m magtorus``."""
import sys

from .cli import main

sys.exit(main())
