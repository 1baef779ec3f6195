"""Smoke test for the compiled `sfas` extension.

    pip install -e crates/py --no-build-isolation
    python python/smoke_test.py
"""

import json
import math
import tempfile
from pathlib import Path

import sfas


def main():
    cfg = sfas.ArrayConfig(32, scale=2.0)
    print(cfg, "aperture", cfg.aperture)
    a = sfas.esg_steering(-40.0, 30.0, cfg)
    assert len(a) == 32 and a[0] == 1

    exp = sfas.Experiment([(-40.0, 30.0), (-20.0, 300.0), (10.0, 1000.0), (30.0, 5000.0)], seed=2024)
    for s in sfas.localize(exp):
        print("  coarse {coarse_angle_deg:8.3f}  refined ({angle_deg:8.4f} deg, {range:9.2f})".format(**s))

    bounds = sfas.crb(exp)
    assert all(math.isfinite(x) for x, _ in bounds)
    print("  angle CRB (deg):", ["%.2e" % x for x, _ in bounds])

    with tempfile.TemporaryDirectory() as tmp:
        report = json.loads(sfas.single_shot(exp, tmp))
        assert not report["errors"], report["errors"]
        files = sorted(p.name for p in Path(tmp).iterdir())
        assert "stage1_spectrum.csv" in files and "manifest.json" in files
        print("  single-shot bundle:", len(files), "files")

    small = sfas.Experiment([(-20.66, 30.0), (10.77, 200.0)], seed=5)
    small.trials = 3
    pooled = [r for r in sfas.run_campaign(small, threads=1) if r["source"] is None][0]
    assert pooled["successes"] + pooled["failures"] == 3
    print("  pooled AAR RMSE (deg): %.3e" % pooled["angle_rmse_deg"])

    try:
        sfas.Experiment([(95.0, 30.0)]).validate()
    except sfas.SfasError as e:
        print("  rejected invalid scenario:", str(e).splitlines()[-1].strip())
    else:
        raise AssertionError("invalid scenario accepted")
    print("ok")


if __name__ == "__main__":
    main()
