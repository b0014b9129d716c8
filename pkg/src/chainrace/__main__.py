import sys

from chainrace.cli import main

sys.exit(main())
