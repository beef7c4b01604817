#!/usr/bin/env python3
"""Regenerates stmf_bel_sample.csv, the bundled weekly-deaths extract.

The file is a synthetic stand-in for an archival STMF-layout export of
Belgian weekly deaths, 2015-W01 .. 2020-W20: seasonal baseline mortality
with Poisson noise, mild flu winters in 2015/2017/2018, a mild 2020
winter, and a first COVID-19 wave shaped like the real Belgian one
(surge building in week 13, peaking week 15, fading after week 18,
strongest in the oldest groups, absent in children).

Counts are drawn with a fixed seed, so the file is reproducible:

    python3 make_sample_dataset.py > stmf_bel_sample.csv
"""

import math

import numpy as np

SEED = 21

YEARS = [2015, 2016, 2017, 2018, 2019, 2020]
AGE_COLS = ["D0_14", "D15_64", "D65_74", "D75_84", "D85p"]

# weekly baseline means, (female, male) per age band
BASE = {
    0: (4.5, 5.5),      # 0-14
    1: (110.0, 185.0),  # 15-64
    2: (110.0, 180.0),  # 65-74
    3: (240.0, 260.0),  # 75-84
    4: (560.0, 330.0),  # 85+
}
SEASON_AMP = [0.02, 0.045, 0.075, 0.10, 0.13]

# excess-rate profile of the 2020 wave for the 85+ band, weeks 13..20;
# younger elderly bands scale it down, 15-64 has its own later bump
WAVE_85P = [0.15, 1.05, 1.60, 1.30, 1.00, 0.78, 0.0, -0.03]
WAVE_15_64 = [0.0, 0.02, 0.65, 0.45, 0.12, 0.03, 0.0, 0.0]
WAVE_SCALE = {4: 1.0, 3: 0.75, 2: 0.45}
SEX_TILT = {"f": 0.9, "m": 1.1}  # males run a higher excess rate


def iso_weeks(year):
    import datetime

    first = datetime.date(year, 1, 1).isoweekday()  # 1 = Monday .. 7 = Sunday
    leap = year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
    return 53 if first == 4 or (leap and first == 3) else 52


def season(week, age):
    return 1.0 + SEASON_AMP[age] * math.cos(2.0 * math.pi * (week - 2) / 52.18)


def bump(week, start, end, peak_height):
    """Triangular multiplier bump over [start, end]."""
    if week < start or week > end:
        return 0.0
    mid = (start + end) / 2.0
    half = (end - start) / 2.0 or 1.0
    return peak_height * max(0.0, 1.0 - abs(week - mid) / half)


def year_factor(year, week, age):
    f = 1.0
    if age >= 2:  # flu winters hit the elderly
        if year == 2015:
            f += bump(week, 1, 9, 0.09)
        elif year == 2017:
            f += bump(week, 1, 6, 0.06)
        elif year == 2018:
            f += bump(week, 1, 10, 0.11) + bump(week, 9, 12, 0.05)
    elif age == 1:
        if year == 2018:
            f += bump(week, 1, 10, 0.04)
    return f


def covid_factor(week, age, sex):
    if age == 0:
        return 0.85 if week >= 5 else 1.0
    f = 1.0
    if age >= 2:
        if week <= 10:
            f = 0.94  # mild winter: negative excess before the wave
        elif week <= 12:
            f = 0.97
    elif age == 1 and week <= 10:
        f = 0.98
    if week >= 13:
        if age == 1:
            rate = WAVE_15_64[week - 13]
        elif age in WAVE_SCALE:
            rate = WAVE_85P[week - 13] * WAVE_SCALE[age]
        else:
            rate = 0.0
        f = 1.0 + rate * SEX_TILT[sex]
    return f


def mean_deaths(year, week, age, sex):
    base = BASE[age][0 if sex == "f" else 1]
    mean = base * season(week, age) * year_factor(year, week, age)
    if year == 2020:
        mean *= covid_factor(week, age, sex)
    return mean


def main():
    rng = np.random.default_rng(SEED)
    print("CountryCode,Year,Week,Sex,D0_14,D15_64,D65_74,D75_84,D85p,DTotal")
    for year in YEARS:
        last_week = 20 if year == 2020 else iso_weeks(year)
        for week in range(1, last_week + 1):
            counts = {}
            for sex in ("f", "m"):
                counts[sex] = [
                    int(rng.poisson(mean_deaths(year, week, age, sex)))
                    for age in range(5)
                ]
            counts["b"] = [f + m for f, m in zip(counts["f"], counts["m"])]
            for sex in ("f", "m", "b"):
                row = counts[sex]
                print(
                    f"BEL,{year},{week},{sex},"
                    + ",".join(str(v) for v in row)
                    + f",{sum(row)}"
                )


if __name__ == "__main__":
    main()
