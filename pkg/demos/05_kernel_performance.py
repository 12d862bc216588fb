"""The O(N) exponential-kernel convolution against direct summation.

Run with ``python3 demos/05_kernel_performance.py``.
"""

# %%
import time

import numpy as np

from m2ch.kernel import kernel_convolve, kernel_direct

rng = np.random.default_rng(0)

# %% [markdown]
# Agreement with the O(N^2) sum on a random monotone point set.

# %%
y = np.cumsum(rng.exponential(0.05, 512))
w = rng.normal(size=512)
fast, slow = kernel_convolve(y, w, 0.05), kernel_direct(y, w, 0.05)
for name, a, b in zip(("sym", "asym"), fast, slow):
    print(f"{name:4s} max rel difference {np.abs(a - b).max() / np.abs(b).max():.1e}")

# %% [markdown]
# Timing. The first call compiles the scan, so it is excluded.

# %%
kernel_convolve(y, w, 0.05)
for k in (14, 17, 20, 22):
    n = 2**k
    y = np.linspace(-50, 50, n)
    w = rng.normal(size=n)
    tic = time.perf_counter()
    kernel_convolve(y, w, y[1] - y[0])
    print(f"N = 2^{k}: {1e3 * (time.perf_counter() - tic):7.2f} ms")
