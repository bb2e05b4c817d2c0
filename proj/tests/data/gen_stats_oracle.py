#!/usr/bin/env python3
"""Regenerates stats_oracle.json.

Reference values come from independent implementations:
  - ICC (two-way, absolute agreement, average of k raters) from a
    statsmodels two-way ANOVA decomposition,
  - Kendall tau-b from scipy.stats.kendalltau.

Run from this directory:  python3 gen_stats_oracle.py
"""

import json

import numpy as np
import pandas as pd
import scipy.stats
import statsmodels.api as sm
from statsmodels.formula.api import ols


def icc_a_k(matrix: np.ndarray) -> float:
    """ICC, two-way model, absolute agreement, average of k raters.

    matrix: raters x subjects. Mean squares are taken from a statsmodels
    two-way ANOVA rather than computed by hand.
    """
    k, n = matrix.shape
    rows = []
    for rater in range(k):
        for subject in range(n):
            rows.append((f"r{rater}", f"s{subject}", matrix[rater, subject]))
    df = pd.DataFrame(rows, columns=["rater", "subject", "score"])
    model = ols("score ~ C(subject) + C(rater)", data=df).fit()
    table = sm.stats.anova_lm(model, typ=2)
    ms_subject = table.loc["C(subject)", "sum_sq"] / table.loc["C(subject)", "df"]
    ms_rater = table.loc["C(rater)", "sum_sq"] / table.loc["C(rater)", "df"]
    ms_error = table.loc["Residual", "sum_sq"] / table.loc["Residual", "df"]
    return (ms_subject - ms_error) / (ms_subject + (ms_rater - ms_error) / n)


def main() -> None:
    rng = np.random.default_rng(20240817)
    icc_cases = []
    for case in range(50):
        k = int(rng.integers(3, 6))
        n = int(rng.integers(5, 31))
        subject_effect = rng.normal(0.0, 1.5, size=n)
        rater_bias = rng.normal(0.0, 0.3, size=k)
        noise_scale = float(rng.uniform(0.05, 0.8))
        m = (
            subject_effect[None, :]
            + rater_bias[:, None]
            + rng.normal(0.0, noise_scale, size=(k, n))
        )
        icc_cases.append(
            {
                "raters": k,
                "subjects": n,
                "matrix": [[float(x) for x in row] for row in m],
                "icc": float(icc_a_k(m)),
            }
        )

    tau_cases = []
    for case in range(50):
        n = int(rng.integers(4, 40))
        if case % 2 == 0:
            x = rng.integers(0, max(2, n // 2), size=n).astype(float)  # forces ties
            y = x + rng.integers(-2, 3, size=n)
        else:
            x = rng.normal(size=n)
            y = 0.6 * x + rng.normal(scale=0.8, size=n)
        tau = scipy.stats.kendalltau(x, y, variant="b").statistic
        tau_cases.append(
            {
                "x": [float(v) for v in x],
                "y": [float(v) for v in y],
                "tau_b": float(tau),
            }
        )

    with open("stats_oracle.json", "w") as fh:
        json.dump({"icc": icc_cases, "kendall_tau_b": tau_cases}, fh, indent=1)
    print(f"wrote {len(icc_cases)} icc cases, {len(tau_cases)} tau cases")


if __name__ == "__main__":
    main()
