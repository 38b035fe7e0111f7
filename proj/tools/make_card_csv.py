#!/usr/bin/env python3
"""Build data/card.csv (lwage, college, nearc4) from the NLSYM extract.

The extract is not shipped with this repository. By default it is read through the
`wooldridge` Python package; pass --source to use a local card.csv(.bz2) instead.
"""
import argparse
import sys

import pandas as pd


def load(source):
    if source:
        return pd.read_csv(source)
    try:
        import wooldridge
    except ImportError:
        sys.exit("install the `wooldridge` package or pass --source")
    return wooldridge.data("card")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--source", help="local card.csv or card.csv.bz2")
    ap.add_argument("--out", default="data/card.csv")
    args = ap.parse_args()
    df = load(args.source)
    out = pd.DataFrame({
        "lwage": df["lwage"],
        "college": (df["educ"] >= 16).astype(int),
        "nearc4": df["nearc4"].astype(int),
    })
    if out.isna().any().any():
        sys.exit("extract has missing values in lwage/educ/nearc4")
    out.to_csv(args.out, index=False, float_format="%.17g")
    print(f"wrote {len(out)} rows to {args.out}")


if __name__ == "__main__":
    main()
