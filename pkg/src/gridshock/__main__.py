import sys

from gridshock.cli import main

sys.exit(main())
