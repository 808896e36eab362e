import sys

from spanoid_lab.main import main

sys.exit(main())
