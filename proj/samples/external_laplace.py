#!/usr/bin/env python3
# Example external mechanism for `dpcore audit --command`.
# Usage: external_laplace.py CSV EPS N. Prints N noisy counts of CSV rows.
import csv
import random
import sys

path, eps, n = sys.argv[1], float(sys.argv[2]), int(sys.argv[3])
with open(path) as f:
    count = sum(1 for _ in csv.reader(f)) - 1
rng = random.SystemRandom()
scale = 1.0 / eps
for _ in range(n):
    print(count + rng.expovariate(1 / scale) - rng.expovariate(1 / scale))
