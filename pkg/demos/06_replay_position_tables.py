"""
Replaying published position tables
===================================

The consistency pipeline needs only rank positions, not the raw network, so
any externally produced ranking table can be replayed through it. The package
bundles two 30-URL position tables (a popular cohort and a random cohort,
each with PRSN, HSN, and four per-person max-flow columns); dropping them
into an output directory as rankings_*.csv puts `analyze` into its
positions-only mode.
"""

import shutil
import tempfile
from pathlib import Path

from socrank import consistency, pairwise_consistency
from socrank.analysis import format_avg
from socrank.cli import bundled_positions_path, main, read_rankings_csv

out = Path(tempfile.mkdtemp(prefix="socrank_demo_")) / "replay"
out.mkdir()
shutil.copy(bundled_positions_path("buzz_popular"), out / "rankings_popular.csv")
shutil.copy(bundled_positions_path("buzz_random"), out / "rankings_random.csv")

for name in ("popular", "random"):
    table = read_rankings_csv(out / f"rankings_{name}.csv")
    stats = consistency(table.prsn, table.hsn)
    print(f"{name:8} cohort: PRSN and HSN positions differ by "
          f"{stats.sum_diff} in total, {stats.avg_display} on average")

print("\nThe popular cohort is far more consistent across the two rankers")
print("than the random one; widely shared pages look important from both")
print("the graph side and the share side.\n")

table = read_rankings_csv(out / "rankings_random.csv")
matrix = pairwise_consistency(table.mf)
print("Pairwise average differences between the four persons (random cohort):")
print("      " + "".join(f"p{j + 1:<5}" for j in range(4)))
for i in range(4):
    cells = ["  -  " if i == j else
             format_avg(matrix[i][j].numerator, matrix[i][j].denominator).rjust(5)
             for j in range(4)]
    print(f"  p{i + 1} " + "".join(cells))

print("\n$ socrank analyze --out", out)
assert main(["analyze", "--out", str(out)]) == 0
print("\nconsistency.csv:")
print((out / "consistency.csv").read_text())
