"""Component counts of the degree-3 tautological elamination.

Prints N3(n, m), the number of components of length 2^m / 3^n, then checks
the first column against the recursion and the generating function.
"""
import sys

from shiftlocus.tautological import beta_series, count_table, n30_recursion

n_max = int(sys.argv[1]) if len(sys.argv) > 1 else 12
table = count_table(n_max)
width = len(str(max(max(r) for r in table.rows)))
for n, row in enumerate(table.rows):
    print(f"{n:2d} | " + " ".join(f"{x:>{width}}" for x in row))

rec = n30_recursion(30)
ser = beta_series(31).reduced
print("column m=0 agrees with the recursion:", [r[0] for r in table.rows] == rec[: n_max + 1])
print("recursion agrees with the series to n=30:", rec == list(ser[:31]))
