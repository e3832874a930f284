#!/usr/bin/env python3
"""Generate synthetic Matpower-format transmission cases for parser and
pipeline tests. Deterministic given the seed: a 230 kV ring backbone with
138 kV sub-rings hung off transformer branches, loads on the low-voltage
buses and generators every few backbone buses.

Usage: gen_synth_case.py N_HV SEED OUTFILE NAME
"""
import sys
import random


def main():
    n_hv = int(sys.argv[1])
    seed = int(sys.argv[2])
    out = sys.argv[3]
    name = sys.argv[4]
    rng = random.Random(seed)

    buses = []   # (id, type, pd, qd, gs, bs, basekv)
    branches = []  # (f, t, r, x, b, rate, ratio, angle, status, angmin, angmax)
    gens = []    # (bus, pmax, pmin, qmax, qmin, c2, c1, c0, status)

    # 230 kV ring
    for i in range(1, n_hv + 1):
        buses.append([i, 1, 0.0, 0.0, 0.0, 0.0, 230.0])
    for i in range(1, n_hv + 1):
        j = i % n_hv + 1
        x = rng.uniform(0.02, 0.06)
        r = x / rng.uniform(6.0, 10.0)
        b = x * rng.uniform(1.2, 1.8)
        rate = rng.choice([0.0, 400.0, 500.0])
        amin, amax = rng.choice([(-360.0, 360.0), (-30.0, 30.0)])
        branches.append([i, j, r, x, b, rate, 0.0, 0.0, 1, amin, amax])
    # a couple of chords
    for _ in range(max(1, n_hv // 6)):
        i = rng.randrange(1, n_hv + 1)
        j = (i + n_hv // 3 - 1) % n_hv + 1
        if i == j:
            continue
        x = rng.uniform(0.03, 0.08)
        branches.append([i, j, x / 8.0, x, x * 1.5, 500.0, 0.0, 0.0, 1,
                         -360.0, 360.0])

    # 138 kV feeders: two LV buses per tap point
    next_id = n_hv + 1
    total_load = 0.0
    for i in range(1, n_hv + 1, 3):
        lv1, lv2 = next_id, next_id + 1
        next_id += 2
        pd1 = rng.uniform(20.0, 60.0)
        pd2 = rng.uniform(10.0, 40.0)
        total_load += pd1 + pd2
        buses.append([lv1, 1, pd1, pd1 * 0.33, 0.0, 0.0, 138.0])
        buses.append([lv2, 1, pd2, pd2 * 0.33, 0.0, 0.0, 138.0])
        # transformer HV-LV (r = 0 exercises the zero-conductance path)
        branches.append([i, lv1, 0.0, rng.uniform(0.06, 0.12), 0.0, 250.0,
                         rng.choice([1.0, 1.02, 0.98]), 0.0, 1, -360.0, 360.0])
        branches.append([lv1, lv2, rng.uniform(0.01, 0.03),
                         rng.uniform(0.05, 0.1), rng.uniform(0.0, 0.04),
                         0.0, 0.0, 0.0, 1, -360.0, 360.0])

    # one negative load and one out-of-service branch for edge coverage
    buses[n_hv][2] = -5.0
    f, t = n_hv + 1, n_hv + 2
    branches.append([f, t, 0.02, 0.08, 0.02, 100.0, 0.0, 0.0, 0,
                     -360.0, 360.0])

    # generators on the backbone, capacity ~ 2x load
    gen_buses = list(range(1, n_hv + 1, 4))
    cap = 2.0 * total_load / len(gen_buses)
    for k, gb in enumerate(gen_buses):
        pmax = cap * rng.uniform(0.7, 1.3)
        c2 = rng.uniform(0.002, 0.05)
        c1 = rng.uniform(5.0, 40.0)
        gens.append([gb, pmax, 0.0, 0.6 * pmax, -0.4 * pmax, c2, c1,
                     rng.uniform(0.0, 500.0), 1])
        buses[gb - 1][1] = 2
    # an out-of-service generator
    gens.append([1, 100.0, 0.0, 50.0, -50.0, 0.01, 20.0, 0.0, 0])
    buses[0][1] = 3  # slack

    with open(out, "w") as fh:
        fh.write(f"function mpc = {name}\n")
        fh.write("%% Synthetic transmission case generated by "
                 "gen_synth_case.py (seed %d).\n\n" % seed)
        fh.write("%% MATPOWER Case Format : Version 2\n")
        fh.write("mpc.version = '2';\n\n")
        fh.write("mpc.baseMVA = 100;\n\n")
        fh.write("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n")
        fh.write("mpc.bus = [\n")
        for b in buses:
            fh.write("\t%d\t%d\t%.4f\t%.4f\t%.1f\t%.1f\t1\t1\t0\t%.0f\t1\t1.06\t0.94;\n"
                     % (b[0], b[1], b[2], b[3], b[4], b[5], b[6]))
        fh.write("];\n\nmpc.gen = [\n")
        for g in gens:
            fh.write("\t%d\t%.4f\t0\t%.4f\t%.4f\t1\t100\t%d\t%.4f\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0;\n"
                     % (g[0], g[1] * 0.6, g[3], g[4], g[8], g[1]))
        fh.write("];\n\nmpc.branch = [\n")
        for br in branches:
            fh.write("\t%d\t%d\t%.6f\t%.6f\t%.6f\t%.1f\t%.1f\t%.1f\t%g\t%g\t%d\t%g\t%g;\n"
                     % (br[0], br[1], br[2], br[3], br[4], br[5], br[5],
                        br[5], br[6], br[7], br[8], br[9], br[10]))
        fh.write("];\n\nmpc.gencost = [\n")
        for g in gens:
            fh.write("\t2\t0\t0\t3\t%.6f\t%.4f\t%.4f;\n" % (g[5], g[6], g[7]))
        fh.write("];\n")


if __name__ == "__main__":
    main()
