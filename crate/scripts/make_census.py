"""Generate the packaged synthetic Wayne County census table.

Category totals are the 2010 census totals (Black 732,801; Hispanic/Latino
95,260; Other 90,343; White 902,180). The split across 13 PUMAs and 18
age-sex strata is synthetic: a product of per-category geographic shares,
per-category age profiles with a mild per-PUMA tilt, and age-dependent sex
ratios. Counts are rounded with the largest-remainder rule so every category
total is exact.

Usage: python3 scripts/make_census.py > crates/core/data/wayne_census.csv
"""

import math

TOTALS = {
    "Black": 732801,
    "Hispanic": 95260,
    "Other": 90343,
    "White": 902180,
}

AGES = ["00-09", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70-79", "80+"]
SEXES = ["F", "M"]
PUMAS = [f"P{n:02d}" for n in range(1, 14)]

AGE_PROFILE = {
    "Black": [0.14, 0.16, 0.14, 0.12, 0.13, 0.14, 0.09, 0.05, 0.03],
    "Hispanic": [0.21, 0.19, 0.18, 0.16, 0.12, 0.08, 0.035, 0.015, 0.01],
    "Other": [0.19, 0.17, 0.18, 0.15, 0.13, 0.09, 0.05, 0.025, 0.015],
    "White": [0.10, 0.12, 0.11, 0.11, 0.14, 0.16, 0.12, 0.08, 0.06],
}

GEO_SHARE = {
    "Black": [0.14, 0.15, 0.13, 0.12, 0.12, 0.10, 0.06, 0.05, 0.04, 0.03, 0.03, 0.02, 0.01],
    "Hispanic": [0.05, 0.35, 0.10, 0.05, 0.04, 0.04, 0.10, 0.06, 0.05, 0.05, 0.04, 0.04, 0.03],
    "Other": [0.06, 0.07, 0.06, 0.05, 0.05, 0.05, 0.12, 0.10, 0.10, 0.09, 0.09, 0.08, 0.08],
    "White": [0.01, 0.015, 0.02, 0.02, 0.025, 0.03, 0.10, 0.11, 0.12, 0.13, 0.13, 0.14, 0.15],
}

# Female share by age bin; older bins skew female.
FEMALE_SHARE = [0.49, 0.49, 0.50, 0.51, 0.51, 0.52, 0.54, 0.58, 0.65]
FEMALE_OFFSET = {"Black": 0.02, "Hispanic": -0.02, "Other": 0.0, "White": 0.0}


def weights(cat):
    w = {}
    for g, puma in enumerate(PUMAS):
        tilt = [1.0 + 0.12 * math.sin(1.7 * g + 0.9 * a) for a in range(len(AGES))]
        prof = [p * t for p, t in zip(AGE_PROFILE[cat], tilt)]
        s = sum(prof)
        prof = [p / s for p in prof]
        for a, age in enumerate(AGES):
            f = min(0.8, FEMALE_SHARE[a] + FEMALE_OFFSET[cat])
            for sex in SEXES:
                share = f if sex == "F" else 1.0 - f
                w[(f"{sex}:{age}", puma)] = GEO_SHARE[cat][g] * prof[a] * share
    return w


def largest_remainder(total, w):
    s = sum(w.values())
    raw = {k: total * v / s for k, v in w.items()}
    floor = {k: int(math.floor(v)) for k, v in raw.items()}
    left = total - sum(floor.values())
    order = sorted(raw, key=lambda k: (raw[k] - floor[k], k), reverse=True)
    for k in order[:left]:
        floor[k] += 1
    return floor


def main():
    counts = {cat: largest_remainder(tot, weights(cat)) for cat, tot in TOTALS.items()}
    print("stratum,geo,category,count")
    for puma in PUMAS:
        for sex in SEXES:
            for age in AGES:
                stratum = f"{sex}:{age}"
                for cat in TOTALS:
                    print(f"{stratum},{puma},{cat},{counts[cat][(stratum, puma)]}")


if __name__ == "__main__":
    main()
