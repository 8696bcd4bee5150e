import sys

from cag.cli import main

sys.exit(main())
