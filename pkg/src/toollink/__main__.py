import sys

from toollink.cli import main

sys.exit(main())
