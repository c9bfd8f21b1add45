"""Allow `python -m epipomp <command>`."""

import sys

from .cli import main

sys.exit(main())
