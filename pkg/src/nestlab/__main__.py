import sys

from nestlab.cli import main

sys.exit(main())
