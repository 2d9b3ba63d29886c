"""Observed married-share series by birth cohort."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DataError, ParseError, RangeError

HEADER = ("cohort", "age_years", "share_married")


@dataclass(frozen=True)
class RealSeries:
    """Married share against age for one cohort."""

    cohort: str
    points: tuple  # ((age, share), ...) with strictly increasing ages

    @property
    def ages(self):
        return np.array([p[0] for p in self.points], dtype=np.float64)

    @property
    def shares(self):
        return np.array([p[1] for p in self.points], dtype=np.float64)

    def __len__(self):
        return len(self.points)


def _number(text, what, line):
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"{what} is not a number: {text!r}", line) from None
    if not math.isfinite(x):
        raise ParseError(f"{what} is not finite: {text!r}", line)
    return x


def parse_marriage_series(lines):
    """Parse ``cohort,age_years,share_married`` rows (comments ``#`` and
    blank lines skipped); cohorts keep their order of first appearance."""
    series = {}
    last_line = {}
    header_seen = False
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        row = [f.strip() for f in row]
        if not header_seen:
            if tuple(row) != HEADER:
                raise ParseError(f"expected header {','.join(HEADER)}, got {','.join(row)}", lineno)
            header_seen = True
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
        cohort, age_s, share_s = row
        if not cohort:
            raise ParseError("empty cohort label", lineno)
        age = _number(age_s, "age_years", lineno)
        share = _number(share_s, "share_married", lineno)
        if not 0.0 <= share <= 1.0:
            raise RangeError(f"share_married {share} outside [0, 1]", lineno)
        pts = series.setdefault(cohort, [])
        if pts and age <= pts[-1][0]:
            raise ParseError(
                f"ages of cohort {cohort} must increase: {age:g} after {pts[-1][0]:g}"
                f" (line {last_line[cohort]})", lineno)
        pts.append((age, share))
        last_line[cohort] = lineno
    if not header_seen:
        raise ParseError("missing header", None)
    if not series:
        raise DataError("no data rows")
    return [RealSeries(c, tuple(p)) for c, p in series.items()]


def ingest_marriage_series(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return parse_marriage_series(fh.read().splitlines())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def bundled_series_path():
    """Illustrative England and Wales series shipped with the package."""
    return resources.files("matchmarket") / "data" / "ew_men_ever_married.csv"


def load_bundled_series():
    return parse_marriage_series(bundled_series_path().read_text(encoding="utf-8").splitlines())
