"""
命令行入口
"""
import sys

from app.jobs.run_bell import main

if __name__ == "__main__":
    sys.exit(main())
