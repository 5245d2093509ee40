"""Compare the numba and pure-numpy kernel paths.

Each backend runs in its own subprocess because the backend is chosen at
import time from ``ISARDIP_DISABLE_NUMBA``.

    python3 benchmarks/bench_kernels.py [--size 64] [--repeats 5]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_CHILD = r"""
import json, sys, time
import numpy as np
from isardip.neural import _kernels as K
from isardip.neural import NetworkConfig, SkipNet

size, repeats = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)

def best(fn):
    fn()  # warm-up (includes JIT compile)
    times = []
    for _ in range(repeats):
        t = time.perf_counter(); fn(); times.append(time.perf_counter() - t)
    return min(times)

x = rng.standard_normal((32, size, size))
rmap = cmap = K.pad_index(size, 2, "reflect")
oh = ow = size
cols = K.im2col(x, rmap, cmap, 1, oh, ow, 5)
net = SkipNet(NetworkConfig(channels=(32, 16, 16, 16, 16, 32)), 16)
z = rng.normal(0, 0.1, (16, size, size))

def step():
    out = net.forward(z)
    net.backward(np.ones_like(out))

res = {
    "backend": K.BACKEND,
    "im2col_s": best(lambda: K.im2col(x, rmap, cmap, 1, oh, ow, 5)),
    "col2im_s": best(lambda: K.col2im(cols, rmap, cmap, 1, size, size, 5)),
    "train_step_s": best(step),
}
print(json.dumps(res))
"""


def run_backend(disable_numba: bool, size: int, repeats: int) -> dict:
    env = dict(os.environ, ISARDIP_DISABLE_NUMBA="1" if disable_numba else "0")
    out = subprocess.run([sys.executable, "-c", _CHILD, str(size), str(repeats)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=5)
    a = ap.parse_args(argv)
    rows = [run_backend(False, a.size, a.repeats), run_backend(True, a.size, a.repeats)]
    print(f"{'backend':<8} {'im2col ms':>10} {'col2im ms':>10} {'step ms':>10}")
    for r in rows:
        print(f"{r['backend']:<8} {r['im2col_s'] * 1e3:>10.2f} {r['col2im_s'] * 1e3:>10.2f} "
              f"{r['train_step_s'] * 1e3:>10.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
