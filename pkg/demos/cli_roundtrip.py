"""
Command line round trip
=======================

Write a config, run it, sweep a small grid and re-verify every artifact,
all through the same entry point the ``cantor-games`` script uses.
"""

import tempfile
from pathlib import Path

from cantor_games.cli import main

work = Path(tempfile.mkdtemp(prefix="cantor_games_"))
(work / "star.cfg").write_text(
    "mode = pair-prefix-free\nd = 1/2\nallowed_sizes = 1/2^6, 1/2^4, 1/2^2\n"
    "alice = star\nbob = greedy_pairs\npromise = none\n")
(work / "planes.cfg").write_text("task = plane\ngrid.q = 2;3;5\n")

print("run   ->", main(["run", "--config", str(work / "star.cfg"), "--out", str(work / "star")]))
print((work / "star" / "report.csv").read_text())
print("sweep ->", main(["sweep", "--config", str(work / "planes.cfg"), "--out", str(work / "planes")]))
print("verify->", main(["verify", str(work)]))
