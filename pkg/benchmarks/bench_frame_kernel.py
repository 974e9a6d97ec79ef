"""Wall time of frame integration with the compiled and numpy sweeps.

    python3 benchmarks/bench_frame_kernel.py [--res 64,128,256] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from slaglab import kernels
from slaglab.frames import integrate_frame, traveling_wave_triple


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--res", default="64,128,256")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{'res':>5} " + " ".join(f"{b:>12}" for b in backends) + "   speedup   max |dF|")
    for n in (int(r) for r in args.res.split(",")):
        t = traveling_wave_triple(n)
        times, frames = [], []
        for b in backends:
            frames.append(integrate_frame(t, backend=b).frames)
            times.append(min(timeit.repeat(lambda: integrate_frame(t, backend=b),
                                           number=1, repeat=args.repeat)))
        speed = times[0] / times[-1]
        diff = float(np.max(np.abs(frames[0] - frames[-1])))
        print(f"{n:>5} " + " ".join(f"{x:>11.3f}s" for x in times) + f"   {speed:>6.1f}x   {diff:.1e}")


if __name__ == "__main__":
    main()
