import sys

from reluam.harness.cli import main

sys.exit(main())
