import sys

from svtv.cli import main

sys.exit(main())
