#!/usr/bin/env python3
"""Regenerate samples/pima.csv, a synthetic stand-in for the UCI Pima
diabetes file: 768 rows, 9 columns, zeros as missing-value sentinels in
Gluc/BP/Thick/Insul/BMI. Deterministic; run from the repo root."""

from pathlib import Path

import numpy as np

N = 768
N_DIABETIC = 268
ZERO_COUNTS = {"Gluc": 5, "BP": 35, "Thick": 227, "Insul": 374, "BMI": 11}


def main() -> None:
    rng = np.random.default_rng(20260809)

    diab = np.zeros(N, dtype=int)
    diab[:N_DIABETIC] = 1
    rng.shuffle(diab)

    npreg = np.clip(rng.poisson(3.2 + 0.9 * diab), 0, 17)
    gluc = np.clip(rng.normal(110 + 31 * diab, 26), 44, 199).round().astype(int)
    bp = np.clip(rng.normal(70 + 5 * diab, 12), 24, 122).round().astype(int)
    thick = np.clip(rng.normal(27 + 5 * diab, 9), 7, 99).round().astype(int)
    insul = np.clip(rng.lognormal(4.55 + 0.45 * diab, 0.62), 14, 846).round().astype(int)
    bmi = np.clip(rng.normal(31.0 + 4.0 * diab, 6.5), 18.2, 67.1).round(1)
    genet = np.clip(rng.gamma(2.3, 0.21, N), 0.078, 2.42).round(3)
    age = np.clip((21 + 60 * rng.beta(1.4, 4.8, N)).round(), 21, 81).astype(int)

    cols = {
        "NPreg": npreg,
        "Gluc": gluc,
        "BP": bp,
        "Thick": thick,
        "Insul": insul,
        "BMI": bmi,
        "Genet": genet,
        "Age": age,
        "Diab": diab,
    }

    # plant the sentinel zeros that motivate the cleaning walkthrough
    for name, count in ZERO_COUNTS.items():
        idx = rng.choice(N, size=count, replace=False)
        cols[name] = cols[name].astype(float)
        cols[name][idx] = 0

    out = Path(__file__).resolve().parents[1] / "samples" / "pima.csv"
    out.parent.mkdir(exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(N):
            cells = []
            for name, arr in cols.items():
                v = arr[i]
                if name == "BMI":
                    cells.append("%.1f" % v if v else "0")
                elif name == "Genet":
                    cells.append("%.3f" % v)
                else:
                    cells.append("%d" % v)
            fh.write(",".join(cells) + "\n")
    print(f"wrote {out} ({N} rows)")

    for name, count in ZERO_COUNTS.items():
        assert int((cols[name] == 0).sum()) == count, name
        nz = cols[name][cols[name] != 0]
        assert nz.min() > 0, name


if __name__ == "__main__":
    main()
