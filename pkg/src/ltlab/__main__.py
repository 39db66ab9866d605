import sys

from ltlab.cli import main

sys.exit(main())
