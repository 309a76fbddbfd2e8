import sys

from skewbm.cli import main

sys.exit(main())
