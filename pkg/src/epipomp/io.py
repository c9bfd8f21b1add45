"""CSV ingestion and persistence for observed data, covariates, geography,
efficacy curves, and vaccination scenarios.

All inputs are plain CSV with headers. Case and rainfall files are long
format (`date,department,value`) on a uniform weekly date grid; matrices are
square with department names as header row and first column. Times map to
model years as week-counts from a series origin (one week = 1/52.14 yr).
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError
from .haiti.efficacy import EfficacyCurve
from .haiti.geography import GeographyData
from .haiti.scenarios import CampaignRow, ScenarioSpec
from .series import ObservationSeries
from .units import WEEK

MISSING_TOKENS = {"NA", "NaN", "nan", ""}


def parse_date(text: str, path: str = "", row: int = 0) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataFormatError(f"{path}: row {row}: bad ISO-8601 date {text!r}") from exc


def weeks_between(d0: dt.date, d1: dt.date) -> float:
    return (d1 - d0).days / 7.0


def week_time(d0: dt.date, d1: dt.date) -> float:
    """Model time (years) of date d1 relative to origin date d0."""
    return weeks_between(d0, d1) * WEEK


def _read_rows(path: str | Path, expected_header: Sequence[str]) -> list[dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: file does not exist")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header != list(expected_header):
            raise DataFormatError(
                f"{path}: expected header {','.join(expected_header)!r}, got {','.join(header)!r}"
            )
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}: row {i}: expected {len(header)} fields, got {len(row)}")
            rows.append({h: c.strip() for h, c in zip(header, row)})
    return rows


def _long_table(path: str | Path, value_col: str, integer: bool):
    """Read a long (date, department, value) table into a dense matrix."""
    rows = _read_rows(path, ["date", "department", value_col])
    seen: dict[tuple[str, str], int] = {}
    dates: dict[dt.date, None] = {}
    depts: dict[str, None] = {}
    parsed = []
    for i, r in enumerate(rows, start=2):
        d = parse_date(r["date"], str(path), i)
        dep = r["department"]
        key = (r["date"], dep)
        if key in seen:
            raise DataFormatError(
                f"{path}: duplicate (date, department) = {key} at rows {seen[key]} and {i}"
            )
        seen[key] = i
        dates[d] = None
        depts[dep] = None
        raw = r[value_col]
        if raw in MISSING_TOKENS:
            val = np.nan
        else:
            try:
                val = float(raw)
            except ValueError:
                raise DataFormatError(f"{path}: row {i}: bad value {raw!r}") from None
            if val < 0:
                raise DataFormatError(f"{path}: row {i}: negative value {val}")
            if integer and val != round(val):
                raise DataFormatError(f"{path}: row {i}: non-integer count {val}")
        parsed.append((d, dep, val, i))
    date_list = sorted(dates)
    gaps = [
        f"{a} -> {b}"
        for a, b in zip(date_list[:-1], date_list[1:])
        if (b - a).days != 7
    ]
    if gaps:
        raise DataFormatError(f"{path}: dates are not a uniform weekly grid; gaps at: {'; '.join(gaps)}")
    dept_list = sorted(depts)
    index_d = {d: j for j, d in enumerate(date_list)}
    index_u = {u: j for j, u in enumerate(dept_list)}
    mat = np.full((len(dept_list), len(date_list)), np.nan)
    filled = np.zeros(mat.shape, dtype=bool)
    for d, dep, val, i in parsed:
        mat[index_u[dep], index_d[d]] = val
        filled[index_u[dep], index_d[d]] = True
    if not filled.all():
        missing = [
            f"({dept_list[u]}, {date_list[n]})"
            for u, n in zip(*np.where(~filled))
        ][:5]
        raise DataFormatError(f"{path}: incomplete department x date grid; missing {missing}")
    return dept_list, date_list, mat


def load_cases(path: str | Path, expected_units: int | None = None) -> ObservationSeries:
    """Weekly reported cases: CSV `date,department,cases` with NA for missing."""
    depts, dates, mat = _long_table(path, "cases", integer=True)
    if expected_units is not None and len(depts) != expected_units:
        raise DataFormatError(
            f"{path}: expected {expected_units} departments, found {len(depts)}: {depts}"
        )
    return ObservationSeries(tuple(depts), mat, tuple(d.isoformat() for d in dates))


def save_cases(series: ObservationSeries, path: str | Path) -> None:
    """Inverse of load_cases (round-trip identity on the data values)."""
    if series.dates is None:
        raise DataFormatError("series has no dates; cannot write a date-indexed CSV")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "department", "cases"])
        for n, d in enumerate(series.dates):
            for u, dep in enumerate(series.units):
                v = series.values[u, n]
                w.writerow([d, dep, "NA" if np.isnan(v) else int(v)])


def load_rainfall(path: str | Path):
    """Weekly rainfall (mm): returns (departments, dates, raw U x T matrix)."""
    depts, dates, mat = _long_table(path, "mm", integer=False)
    if np.any(np.isnan(mat)):
        raise DataFormatError(f"{path}: rainfall must not contain missing values")
    return depts, dates, mat


def load_geography(
    geo_path: str | Path, distance_path: str | Path, river_path: str | Path
) -> GeographyData:
    rows = _read_rows(geo_path, ["department", "population", "density"])
    depts, pops, dens = [], [], []
    for i, r in enumerate(rows, start=2):
        depts.append(r["department"])
        try:
            pops.append(float(r["population"]))
            dens.append(float(r["density"]))
        except ValueError:
            raise DataFormatError(f"{geo_path}: row {i}: bad numeric value") from None
    order = np.argsort(depts)
    depts = [depts[i] for i in order]
    pops = np.array(pops)[order]
    dens = np.array(dens)[order]
    dist = load_matrix(distance_path, depts)
    river = load_matrix(river_path, depts)
    return GeographyData(tuple(depts), pops, dens, dist, river)


def load_matrix(path: str | Path, units: Sequence[str]) -> np.ndarray:
    """Square matrix CSV with department names as header row and first column."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: file does not exist")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    header = [c.strip() for c in rows[0][1:]]
    if sorted(header) != sorted(units):
        raise DataFormatError(f"{path}: header departments {header} do not match {list(units)}")
    U = len(units)
    mat = np.zeros((U, U))
    seen = []
    for r in rows[1:]:
        name = r[0].strip()
        if name not in units:
            raise DataFormatError(f"{path}: unknown department {name!r}")
        seen.append(name)
        i = list(units).index(name)
        for h, c in zip(header, r[1:]):
            mat[i, list(units).index(h)] = float(c)
    if sorted(seen) != sorted(units):
        raise DataFormatError(f"{path}: missing rows for {sorted(set(units) - set(seen))}")
    return mat


def load_efficacy(path: str | Path) -> EfficacyCurve:
    rows = _read_rows(path, ["weeks_since", "efficacy_1dose", "efficacy_2dose"])
    weeks, e1, e2 = [], [], []
    for i, r in enumerate(rows, start=2):
        try:
            weeks.append(float(r["weeks_since"]))
            e1.append(float(r["efficacy_1dose"]))
            e2.append(float(r["efficacy_2dose"]))
        except ValueError:
            raise DataFormatError(f"{path}: row {i}: bad numeric value") from None
    return EfficacyCurve(np.array(weeks), np.array(e1), np.array(e2))


def load_scenario(
    path: str | Path,
    scenario_id: str,
    origin_date: dt.date,
    horizon_weeks: int = 520,
) -> ScenarioSpec:
    """One scenario's campaign rows; starts are relative to ``origin_date``."""
    rows = _read_rows(
        path, ["scenario", "department", "start_date", "duration_weeks", "doses_1", "doses_2"]
    )
    campaign_rows = []
    for i, r in enumerate(rows, start=2):
        if r["scenario"] != scenario_id:
            continue
        start = week_time(origin_date, parse_date(r["start_date"], str(path), i))
        try:
            campaign_rows.append(
                CampaignRow(
                    department=r["department"],
                    start=start,
                    duration_weeks=float(r["duration_weeks"]),
                    doses_1=float(r["doses_1"]),
                    doses_2=float(r["doses_2"]),
                )
            )
        except ValueError:
            raise DataFormatError(f"{path}: row {i}: bad numeric value") from None
    return ScenarioSpec(scenario_id, tuple(campaign_rows), horizon_weeks)


def write_table(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
