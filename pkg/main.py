import sys

from dppfactor.dppfactor import main

if __name__ == "__main__":
    sys.exit(main())
