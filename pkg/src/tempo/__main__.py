import sys

from tempo.runner.cli import main

sys.exit(main())
