import sys

from bps.cli import main

sys.exit(main())
