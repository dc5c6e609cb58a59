import sys

from ultragap.main import main

sys.exit(main())
