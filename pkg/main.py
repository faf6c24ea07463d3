import sys

from tamd_mix.cli import main

if __name__ == '__main__':
    sys.exit(main())
