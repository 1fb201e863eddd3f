import sys

from vifidepth.cli.main import main

sys.exit(main())
