import json

import numpy as np
import pytest


def write_synthetic_panel(directory, T=120, n_signal=8, n_noise=32, seed=0, nuisance=0.0):
    """Monthly CSV plus series spec: ``n_signal`` series load on one factor that
    drives the target one month ahead; the other ``n_noise`` series carry a
    non-predictive common factor with loading ``nuisance`` plus unit noise."""
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(T)
    g = rng.standard_normal(T)
    signal = np.outer(rng.uniform(0.8, 1.2, n_signal), f) + 0.3 * rng.standard_normal((n_signal, T))
    noise = nuisance * np.outer(rng.uniform(0.8, 1.2, n_noise), g) + rng.standard_normal((n_noise, T))
    target = np.r_[0.0, f[:-1]] + 0.3 * rng.standard_normal(T)
    panel = np.vstack([target, signal, noise])
    names = ["TARGET"] + [f"S{i}" for i in range(n_signal)] + [f"N{i}" for i in range(n_noise)]
    groups = ["OUT"] + ["PR"] * n_signal + ["SM"] * n_noise
    dates = [f"{2000 + m // 12:04d}-{m % 12 + 1:02d}" for m in range(T)]
    data = directory / "panel.csv"
    with open(data, "w", encoding="utf-8") as fh:
        fh.write(",".join(["date"] + names) + "\n")
        for t, d in enumerate(dates):
            fh.write(",".join([d] + [repr(float(v)) for v in panel[:, t]]) + "\n")
    series = directory / "series.json"
    series.write_text(json.dumps([{"id": i + 1, "name": n, "tcode": 1, "group": g}
                                  for i, (n, g) in enumerate(zip(names, groups))]))
    return data, series, dates


@pytest.fixture
def synthetic_panel(tmp_path):
    return write_synthetic_panel(tmp_path)
