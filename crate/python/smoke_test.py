#!/usr/bin/env python3
"""Smoke test for the soficount_py extension module.

Builds the cdylib with cargo, copies it next to this script under the
importable name, and exercises the main types and operations end to end.
Run from anywhere: `python3 python/smoke_test.py`.
"""

import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_import():
    subprocess.run(
        ["cargo", "build", "-p", "soficount-py"], cwd=REPO, check=True
    )
    built = REPO / "target" / "debug" / "libsoficount_py.so"
    dest = Path(__file__).resolve().parent / "soficount_py.so"
    shutil.copyfile(built, dest)
    sys.path.insert(0, str(dest.parent))
    import soficount_py

    return soficount_py


def main():
    sc = build_and_import()

    z = sc.Group.integers()
    assert z.ball_size(2) == 5

    sigmas = sc.build_quotient(z, [8, 12, 16])
    assert [s.degree for s in sigmas] == [8, 12, 16]
    assert sigmas[0].epsilon(2) == 0.0

    alpha = sc.Partition.canonical(z, [0.5, 0.5])
    assert abs(alpha.entropy() - math.log(2)) < 1e-12

    # exact count matches the binomial oracle at m=8, eps=0.25
    count, log_count = sc.count_ap(sigmas[0], alpha, 0, 0.25)
    assert count == 182.0, count
    assert abs(log_count - math.log(182)) < 1e-12

    # sampled estimate agrees with the exact count within 3 stderr
    est, log_est, stderr = sc.estimate_ap(sigmas[0], alpha, 0, 0.25, 4000, 7)
    assert abs(log_est - log_count) <= 3 * stderr, (log_est, log_count, stderr)

    # partition algebra: chain rule through the bindings
    shifted = alpha.translate_int(1)
    joined = alpha.join(shifted)
    chain = alpha.entropy() + shifted.conditional_entropy(alpha)
    assert abs(joined.entropy() - chain) < 1e-12
    assert alpha.rohlin_distance(alpha) == 0.0

    csv = sc.rate_curve_csv(sigmas, alpha, 0, 0.1)
    rows = csv.strip().splitlines()
    assert rows[0].startswith("i,m,epsilon") and len(rows) == 4

    folner = sc.build_folner(z, [8, 16, 32])
    eps = [s.epsilon(2) for s in folner]
    assert eps == sorted(eps, reverse=True) and eps[0] > eps[-1]

    assert abs(sc.shannon_entropy([0.5, 0.5]) - math.log(2)) < 1e-12

    report = json.loads(sc.ow_pushforward(1, [0.5, 0.5]))
    assert report["verdict"] == "pass" and report["statistic"] == 0.0

    results = sc.run_suite("quality")
    assert results and all(passed for (_, _, passed, _) in results)

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
