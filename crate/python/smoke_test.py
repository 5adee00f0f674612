#!/usr/bin/env python3
"""Smoke test for the ddgf_py extension module.

Builds the extension with cargo, loads it, and runs the pipeline end to end
on a tiny synthetic dataset: ingest -> train -> predict -> evaluate, plus
hand-checked numerics for the normalization and metric helpers.

Usage: python3 python/smoke_test.py [--profile release|dev]
"""

import argparse
import math
import shutil
import subprocess
import sys
import sysconfig
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def build_extension(profile: str) -> Path:
    cmd = ["cargo", "build", "-p", "ddgf-python"]
    if profile == "release":
        cmd.append("--release")
    subprocess.run(cmd, cwd=REPO_ROOT, check=True)
    target_dir = REPO_ROOT / "target" / ("release" if profile == "release" else "debug")
    lib = target_dir / "libddgf_py.so"
    if not lib.exists():  # macOS fallback
        lib = target_dir / "libddgf_py.dylib"
    if not lib.exists():
        raise SystemExit(f"built library not found under {target_dir}")
    return lib


def stage_module(lib: Path, stage_dir: Path) -> None:
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(lib, stage_dir / f"ddgf_py{suffix}")
    sys.path.insert(0, str(stage_dir))


def synthetic_csv(path: Path, hours: int = 60) -> None:
    header = (
        "tripduration,starttime,stoptime,start station id,start station name,"
        "start station latitude,start station longitude,end station id,"
        "end station name,end station latitude,end station longitude,"
        "bikeid,usertype,birth year,gender\n"
    )
    rows = [header]
    bike = 0
    for h in range(hours):
        day = 1 + h // 24
        hod = h % 24
        for station, other, count in (("72", "79", 1 + h % 3), ("79", "72", 1 + (h + 2) % 3)):
            for t in range(count):
                bike += 1
                m = 5 + 2 * t
                rows.append(
                    f"300,2013-07-{day:02d} {hod:02d}:{m:02d}:00,"
                    f"2013-07-{day:02d} {hod:02d}:{m + 5:02d}:00,"
                    f"{station},S{station},40.75,-73.99,{other},S{other},40.76,-74.00,"
                    f"{bike},Subscriber,1985,1\n"
                )
    path.write_text("".join(rows))


def approx(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--profile", choices=("release", "dev"), default="release")
    args = parser.parse_args()

    lib = build_extension(args.profile)
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        stage_module(lib, tmp_path)
        import ddgf_py  # noqa: E402

        # Hand-checked normalization: one edge between two nodes.
        filt = ddgf_py.normalize_adjacency([[0.0, 1.0], [1.0, 0.0]])
        assert all(approx(filt[i][j], 0.5, 1e-12) for i in range(2) for j in range(2)), filt

        # Hand-checked metrics.
        metrics = ddgf_py.compute_metrics(
            [[1.0, 2.0], [3.0, 4.0]], [[1.0, 2.0], [3.0, 6.0]], [8, 9]
        )
        assert approx(metrics["rmse"], 1.0, 1e-12), metrics
        assert approx(metrics["mae"], 0.5, 1e-12), metrics
        assert approx(metrics["r2"], 0.2, 1e-12), metrics

        # Pearson sanity.
        assert approx(ddgf_py.pearson([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]), 1.0, 1e-12)

        # Ingest a synthetic CSV.
        csv_path = tmp_path / "trips.csv"
        synthetic_csv(csv_path)
        demand = ddgf_py.DemandMatrix.from_csv([str(csv_path)])
        assert demand.n_stations == 2, demand
        assert demand.n_hours == 60, demand
        counts = demand.counts()
        assert counts[0][0] == 1 and counts[1][0] == 3, counts[0][:4]

        # Round-trip through the .dmx container.
        dmx = tmp_path / "demand.dmx"
        demand.save(str(dmx))
        reloaded = ddgf_py.DemandMatrix.load(str(dmx))
        assert reloaded.counts() == counts
        assert reloaded.stations == ["72", "79"]

        # Train a small learnable-filter net and forecast.
        model, history = ddgf_py.train(
            demand,
            "gcnn-reg-ddgf",
            c0=4,
            hidden_widths=[6],
            epochs=15,
            batch_size=8,
            learning_rate=5e-3,
            patience=15,
            seed=3,
        )
        assert history, "training history is empty"
        assert all(math.isfinite(t) and math.isfinite(v) for _, t, v in history)
        assert model.architecture == "gcnn-reg-ddgf"
        assert model.window_len == 4

        window = [row[-4:] for row in counts]
        forecast = model.predict([list(map(float, row)) for row in window], hour=12)
        assert len(forecast) == 2 and all(math.isfinite(v) for v in forecast), forecast

        # The learned filter is symmetric by construction.
        learned = model.filter_matrix(0)
        for i in range(2):
            for j in range(2):
                assert learned[i][j] == learned[j][i]

        # Evaluate on the chronological test split.
        report = ddgf_py.evaluate(model, demand, c0=4)
        assert report["hours"] > 0 and math.isfinite(report["rmse"]), report

        # Checkpoint round trip preserves predictions exactly.
        mdl = tmp_path / "model.mdl"
        model.save(str(mdl))
        restored = ddgf_py.TrainedModel.load(str(mdl))
        again = restored.predict([list(map(float, row)) for row in window], hour=12)
        assert forecast == again, (forecast, again)

        # Historical average trains through the same entry point.
        ha, ha_history = ddgf_py.train(demand, "ha", c0=4)
        assert ha_history == []
        ha_pred = ha.predict([list(map(float, row)) for row in window], hour=12)
        assert len(ha_pred) == 2

    print("smoke test passed")


if __name__ == "__main__":
    main()
