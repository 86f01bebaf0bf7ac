#!/usr/bin/env python3
"""Smoke test for the rigsim_py extension module.

Builds nothing itself: run `cargo build -p rigsim-py` first, then
`python3 python/smoke_test.py`. The script copies the compiled cdylib
next to a temporary import root and exercises the published anchors.
"""

import glob
import importlib
import json
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_cdylib():
    candidates = []
    for profile in ("release", "debug"):
        candidates.extend(glob.glob(os.path.join(ROOT, "target", profile, "librigsim_py.so")))
        candidates.extend(glob.glob(os.path.join(ROOT, "target", profile, "librigsim_py.dylib")))
        candidates.extend(glob.glob(os.path.join(ROOT, "target", profile, "rigsim_py.dll")))
    if not candidates:
        sys.exit("librigsim_py not found; run `cargo build -p rigsim-py` first")
    return candidates[0]


def import_module():
    lib = locate_cdylib()
    stage = tempfile.mkdtemp(prefix="rigsim_py_")
    suffix = ".pyd" if lib.endswith(".dll") else ".so"
    shutil.copy(lib, os.path.join(stage, "rigsim_py" + suffix))
    sys.path.insert(0, stage)
    return importlib.import_module("rigsim_py")


def approx(value, want, tol, what):
    if abs(value - want) > tol:
        sys.exit(f"FAIL {what}: {value} != {want} +/- {tol}")
    print(f"ok {what} = {value}")


def main():
    rig = import_module()

    # descriptive standard errors
    approx(rig.se_skewness(1095), 0.074, 1e-3, "se_skewness(1095)")
    approx(rig.se_kurtosis(1095), 0.148, 1e-3, "se_kurtosis(1095)")
    approx(rig.se_skewness(6557), 0.030, 1e-3, "se_skewness(6557)")
    approx(rig.se_kurtosis(6557), 0.060, 1e-3, "se_kurtosis(6557)")

    # unit conversion endpoints
    approx(rig.to_deflection_degrees(32767), 90.0, 1e-9, "to_deflection(+32767)")
    approx(rig.to_deflection_degrees(-32767), -90.0, 1e-9, "to_deflection(-32767)")

    # distribution anchors
    approx(rig.t_quantile(0.975, 47), 2.01174, 1e-4, "t_quantile(0.975, 47)")
    approx(rig.chi2_sf(29.82, 2), 3.34e-7, 1e-9, "chi2_sf(29.82, 2)")
    approx(rig.f_sf(1.0, 5, 5), 0.5, 1e-10, "f_sf(1, 5, 5)")

    # parameter estimates from the published summaries
    est = rig.estimate_from_summary(54.3347, 44.81194, 48)
    approx(est["mean"], 54.335, 5e-3, "estimate mean")
    approx(est["se"], 6.468, 5e-3, "estimate se")
    approx(est["t"], 8.400, 5e-3, "estimate t")
    approx(est["ci_low"], 41.323, 5e-3, "estimate ci_low")
    approx(est["ci_high"], 67.347, 5e-3, "estimate ci_high")
    approx(est["partial_eta2"], 0.600, 5e-3, "estimate eta2")

    # the reconstructed matrix reproduces the appendix ANOVA
    m = rig.reconstruct_matrix(
        means=[54.3347, 59.9299, 66.6863],
        sds=[44.81194, 50.30706, 55.13150],
        diff_vars=[(0, 1, 54.662), (1, 2, 224.155), (0, 2, 245.42)],
        n=48,
        seed=2024,
    )
    w = rig.within_subjects(m)
    approx(w["ss_effect"], 3672.252, 0.005 * 3672.252, "ss_effect")
    approx(w["ss_error"], 8211.475, 0.005 * 8211.475, "ss_error")
    approx(w["f"], 21.019, 0.02 * 21.019, "F")
    approx(w["partial_eta2"], 0.309, 0.01, "partial_eta2")

    s = rig.sphericity(m)
    approx(s["w"], 0.523, 0.01, "Mauchly W")
    approx(s["chi2"], 29.82, 0.3, "Mauchly chi2")
    approx(s["eps_gg"], 0.677, 0.01, "eps_gg")

    mv = rig.multivariate(m)
    approx(mv["pillai"], 0.479, 5e-3, "pillai")
    approx(mv["hotelling"], 0.919, 5e-3, "hotelling")
    approx(mv["f"], 21.148, 0.01 * 21.148, "multivariate F")

    pw = {(i, j): (d, se) for i, j, d, se, *_ in rig.pairwise(m)}
    approx(pw[(1, 2)][0], -5.595, 0.01, "pairwise diff 1-2")
    approx(pw[(1, 2)][1], 1.067, 0.01, "pairwise se 1-2")
    approx(pw[(1, 3)][0], -12.352, 0.02, "pairwise diff 1-3")

    # mini end-to-end: flight -> schedule -> campaign -> analysis
    units = rig.synthetic_flight_units(7)
    assert len(units) == 7854, f"unexpected flight length {len(units)}"
    degrees = [rig.to_deflection_degrees(u) for u in units]
    schedule = rig.build_schedule(degrees, 119, 7)
    log = rig.run_campaign(schedule, total_cycles=600, alpha=5e-5, campaign_seed=11)
    assert len(log) == 600
    matrix = rig.build_subject_matrix(log, 200, 3, 150, 11)
    bundle = json.loads(rig.analyze_json(matrix))
    means = [c["mean"] for c in bundle["column_summaries"]]
    assert means[0] < means[1] < means[2], f"period means not increasing: {means}"
    print(f"ok end-to-end period means increase: {[round(v, 2) for v in means]}")

    print("smoke test passed")


if __name__ == "__main__":
    main()
