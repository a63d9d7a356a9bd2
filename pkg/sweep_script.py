import os
import sys

from dotenv import load_dotenv

from cp_geodesics.cli import run

load_dotenv()


# Examples of the vars from the .env file
#CPG_GRID=alpha=0.5:1.5:3;beta=0.5:1.5:3;x=-1:1:4;y=-1:1:4
#CPG_HORIZON=10
#CPG_OUT=sweep.csv
#CPG_WORKERS=4

GRID = os.getenv("CPG_GRID")
HORIZON = os.getenv("CPG_HORIZON")
OUT = os.getenv("CPG_OUT")

assert type(GRID) == str and len(GRID) != 0
assert type(HORIZON) == str and len(HORIZON) != 0
assert type(OUT) == str and len(OUT) != 0

argv = ["sweep", "--t-end", HORIZON, "--out", OUT, "--validate"]
for item in GRID.split(";"):
    argv += ["--grid", item.strip()]

sys.exit(run(argv))
