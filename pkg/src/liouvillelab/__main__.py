import sys

from liouvillelab.cli import main

sys.exit(main())
