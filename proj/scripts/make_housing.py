"""Writes housing_synthetic.txt: 506 rows shaped like the classic housing
table (same column names), with a handful of planted outliers in the
rm / lstat plane. Deterministic for a fixed seed."""

import numpy as np

rng = np.random.default_rng(1978)
n = 506
rm = np.clip(rng.normal(6.28, 0.65, n), 4.9, 8.7)
lstat = np.clip(12.6 - 7.0 * (rm - 6.28) + rng.normal(0, 3.0, n), 1.7, 28.0)
crim = np.round(rng.exponential(3.6, n), 5)
zn = np.where(rng.random(n) < 0.25, rng.choice([12.5, 20, 25, 40, 80], n), 0.0)
indus = np.round(rng.uniform(0.5, 27.7, n), 2)
chas = (rng.random(n) < 0.07).astype(float)
nox = np.round(rng.uniform(0.385, 0.871, n), 3)
age = np.round(rng.uniform(2.9, 100, n), 1)
dis = np.round(rng.uniform(1.13, 12.1, n), 4)
rad = rng.choice([1, 2, 3, 4, 5, 6, 7, 8, 24], n).astype(float)
tax = np.round(rng.uniform(187, 711, n))
ptratio = np.round(rng.uniform(12.6, 22, n), 1)
b = np.round(rng.uniform(0.32, 396.9, n), 2)
medv = np.clip(np.round(22.5 + 9.0 * (rm - 6.28) - 0.6 * (lstat - 12.6) + rng.normal(0, 3, n), 1), 5, 50)

# Planted outliers: large homes with a poor neighbourhood, tiny homes with a rich one.
big = [0, 1, 2, 3, 4, 5]
small = [6, 7, 8, 9, 10]
rm[big] = rng.uniform(8.3, 8.8, len(big))
lstat[big] = rng.uniform(30.0, 34.0, len(big))
rm[small] = rng.uniform(3.6, 4.0, len(small))
lstat[small] = rng.uniform(1.8, 3.4, len(small))

cols = dict(crim=crim, zn=zn, indus=indus, chas=chas, nox=nox, rm=np.round(rm, 3), age=age, dis=dis,
            rad=rad, tax=tax, ptratio=ptratio, b=b, lstat=np.round(lstat, 2), medv=medv)
order = rng.permutation(n)
with open("housing_synthetic.txt", "w") as f:
    f.write(" ".join(cols) + "\n")
    for i in order:
        f.write(" ".join(f"{cols[c][i]:g}" for c in cols) + "\n")
