import sys

from acsafe.cli import main

sys.exit(main())
