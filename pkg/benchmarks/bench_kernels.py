"""Compare the compiled Q+ kernel with the numpy fallback.

    python benchmarks/bench_kernels.py [--nx 33] [--threads 1] [--repeat 3]
"""
import argparse
import json

from rbe_slab.bench import bench_table

SIZES = [
    [8, 4, 8, 6, 12],
    [16, 8, 16, 12, 24],
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nx", type=int, default=33)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rows = bench_table(SIZES, args.nx, threads=args.threads, repeat=args.repeat)
    print(f"{'grid':>22} {'cython s':>10} {'python s':>10} {'speedup':>8} {'rel diff':>9}")
    for r in rows:
        print(f"{str(r['size']):>22} {r['seconds_cython']:10.3f} {r['seconds_python']:10.3f} "
              f"{r['speedup']:8.1f} {r['max_rel_diff']:9.1e}")
    print(json.dumps(rows))


if __name__ == "__main__":
    main()
