import sys

from core.py.pipeline import main

if __name__ == "__main__":
    # e.g. python main.py pipeline --out ./out
    sys.exit(main())
