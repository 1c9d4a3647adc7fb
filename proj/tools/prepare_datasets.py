#!/usr/bin/env python3
"""Regenerate the benchmark CSVs under data/ from offline sources.

Wine comes from the copy bundled with scikit-learn. Heart Disease
(Cleveland) is read from the ``heart_disease.tab`` file that ships inside
the orange3 wheel; pass its path with ``--heart-tab``. Breast Cancer
Coimbra (``dataR2.csv`` from the UCI repository) is not redistributed by
any offline source we know of; pass ``--coimbra`` to copy a downloaded
file into place.
"""
import argparse
import csv
import pathlib
import shutil

WINE_COLUMNS = [
    "Alcohol", "Malic acid", "Ash", "Alcalinity of ash", "Magnesium",
    "Total phenols", "Flavanoids", "Nonflavanoid phenols", "Proanthocyanins",
    "Color intensity", "Hue", "OD280/OD315 of diluted wines", "Proline",
]

HEART_COLUMNS = [
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach",
    "exang", "oldpeak", "slope", "ca", "thal", "num",
]

# Orange stores the categorical Cleveland attributes as strings; map them
# back to the integer codes of the UCI processed.cleveland.data file.
HEART_CODES = {
    "gender": {"male": "1", "female": "0"},
    "chest pain": {"typical ang": "1", "atypical ang": "2",
                   "non-anginal": "3", "asymptomatic": "4"},
    "rest ECG": {"normal": "0", "ST-T abnormal": "1",
                 "left vent hypertrophy": "2"},
    "slope peak exc ST": {"upsloping": "1", "flat": "2", "downsloping": "3"},
    "thal": {"normal": "3", "fixed defect": "6", "reversable defect": "7"},
}


def write_wine(out: pathlib.Path) -> None:
    from sklearn.datasets import load_wine

    wine = load_wine()
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WINE_COLUMNS + ["class"])
        for row, target in zip(wine.data, wine.target):
            # cultivar 1 (sklearn target 0) against the other two cultivars
            w.writerow([repr(float(v)) if float(v) != int(v) else str(int(v))
                        for v in row] + ["1" if target == 0 else "0"])


def write_heart(tab: pathlib.Path, out: pathlib.Path) -> None:
    lines = tab.read_text().splitlines()
    header = lines[0].split("\t")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEART_COLUMNS)
        for line in lines[3:]:
            if not line.strip():
                continue
            cells = line.split("\t")
            row = []
            for name, value in zip(header, cells):
                value = value.strip()
                if value in ("?", ""):
                    row.append("")
                elif name in HEART_CODES:
                    row.append(HEART_CODES[name][value])
                else:
                    row.append(value)
            w.writerow(row)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--heart-tab", help="path to Orange/datasets/heart_disease.tab")
    ap.add_argument("--coimbra", help="path to the UCI dataR2.csv file")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_wine(out / "wine.csv")
    if args.heart_tab:
        write_heart(pathlib.Path(args.heart_tab), out / "heart_disease.csv")
    if args.coimbra:
        shutil.copyfile(args.coimbra, out / "breast_cancer_coimbra.csv")


if __name__ == "__main__":
    main()
