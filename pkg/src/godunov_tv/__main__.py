import sys

from godunov_tv.cli import main

sys.exit(main())
