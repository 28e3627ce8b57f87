"""Censored-sample containers, patient CSV ingestion, and follow-up time derivation.

The observed data for subject i is the pair (T_i, delta_i) where
T_i = min(Y_i, C_i) is the recorded follow-up time and delta_i indicates
whether the event was observed (delta_i = 1) or the subject was censored
(delta_i = 0).  Covariates ride along as named float columns.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Input records or samples violate the data contract."""


# Logical field -> default CSV column name.  Callers may remap any subset.
DEFAULT_SCHEMA = {
    "id": "id",
    "age": "age",
    "sex": "sex",
    "diagnosis_date": "diagnosis_date",
    "admission_date": "admission_date",
}


@dataclass(frozen=True)
class PatientRecord:
    """One subject of the cohort, as ingested from a registry export."""

    id: str
    age: int
    sex: int
    diagnosis_date: dt.date
    admission_date: dt.date | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("patient id must be non-empty")
        if self.age < 0:
            raise DataError(f"patient {self.id}: negative age {self.age}")
        if self.sex not in (0, 1):
            raise DataError(f"patient {self.id}: sex must be 0 or 1, got {self.sex}")
        if self.admission_date is not None and self.admission_date < self.diagnosis_date:
            raise DataError(f"patient {self.id}: admission before diagnosis")


@dataclass(frozen=True)
class StudyWindow:
    """Observation window; subjects without an event are censored at ``end``."""

    start: dt.date
    end: dt.date

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise DataError(f"study window ends ({self.end}) before it starts ({self.start})")


@dataclass(frozen=True)
class SurvivalSample:
    """Right-censored sample: times, event indicators, named covariate columns.

    Invariants enforced at construction: all times strictly positive, all
    indicators in {0, 1}, every covariate column the same length as ``times``.
    Arrays are owned by the sample and must not be mutated afterwards.
    """

    times: np.ndarray
    deltas: np.ndarray
    covariates: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        raw_deltas = np.asarray(self.deltas, dtype=float)
        if times.ndim != 1 or raw_deltas.ndim != 1:
            raise DataError("times and deltas must be one-dimensional")
        if times.shape != raw_deltas.shape:
            raise DataError(
                f"times ({times.size}) and deltas ({raw_deltas.size}) differ in length"
            )
        if times.size == 0:
            raise DataError("sample must contain at least one subject")
        if not np.all(np.isfinite(times)) or np.any(times <= 0):
            raise DataError("all times must be finite and strictly positive")
        if not np.all((raw_deltas == 0) | (raw_deltas == 1)):
            raise DataError("all event indicators must be 0 or 1")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "deltas", raw_deltas.astype(int))
        cov = {}
        for name, col in self.covariates.items():
            arr = np.asarray(col, dtype=float)
            if arr.shape != times.shape:
                raise DataError(f"covariate {name!r} has length {arr.size}, expected {times.size}")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"covariate {name!r} contains non-finite values")
            cov[name] = arr
        object.__setattr__(self, "covariates", cov)

    @property
    def n(self) -> int:
        return int(self.times.size)

    def covariate(self, name: str) -> np.ndarray:
        try:
            return self.covariates[name]
        except KeyError:
            raise DataError(
                f"unknown covariate {name!r}; sample has {sorted(self.covariates)}"
            ) from None


@dataclass(frozen=True)
class SummaryStats:
    """Cohort description used in reports."""

    n: int
    n_uncensored: int
    censoring_proportion: float
    min_uncensored_time: float | None
    max_uncensored_time: float | None
    sex_counts: dict[int, int] | None
    sex_percentages: dict[int, float] | None
    mean_age: float | None
    mean_age_by_sex: dict[int, float] | None

    def as_dict(self) -> dict:
        out: dict = {
            "n": self.n,
            "n_uncensored": self.n_uncensored,
            "censoring_proportion": self.censoring_proportion,
            "min_uncensored_time": self.min_uncensored_time,
            "max_uncensored_time": self.max_uncensored_time,
        }
        if self.sex_counts is not None:
            out["sex_counts"] = {str(k): v for k, v in self.sex_counts.items()}
            out["sex_percentages"] = {str(k): v for k, v in self.sex_percentages.items()}
        if self.mean_age is not None:
            out["mean_age"] = self.mean_age
        if self.mean_age_by_sex is not None:
            out["mean_age_by_sex"] = {str(k): v for k, v in self.mean_age_by_sex.items()}
        return out


def _parse_date(raw: str, what: str, row: int) -> dt.date:
    try:
        return dt.date.fromisoformat(raw)
    except ValueError:
        raise DataError(f"row {row}: malformed {what} {raw!r}") from None


def load_csv(path, schema: dict[str, str] | None = None) -> list[PatientRecord]:
    """Read patient records from a UTF-8 CSV with a header row.

    ``schema`` remaps logical field names (the keys of ``DEFAULT_SCHEMA``)
    to the column names actually present in the file.  Dates are ISO-8601;
    an empty admission field means the subject was never admitted.  Row
    numbers in error messages count data rows from 1.
    """
    cols = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(cols)
        if unknown:
            raise DataError(f"unknown schema fields: {sorted(unknown)}")
        cols.update(schema)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in cols.values() if c not in header]
        if missing:
            raise DataError(f"missing columns in {path}: {missing}")
        records: list[PatientRecord] = []
        seen: set[str] = set()
        for row_no, row in enumerate(reader, start=1):
            pid = (row[cols["id"]] or "").strip()
            if pid in seen:
                raise DataError(f"row {row_no}: duplicate id {pid!r}")
            seen.add(pid)
            try:
                age = int(row[cols["age"]])
                sex = int(row[cols["sex"]])
            except (TypeError, ValueError):
                raise DataError(f"row {row_no}: malformed age or sex") from None
            diagnosis = _parse_date(row[cols["diagnosis_date"]], "diagnosis date", row_no)
            raw_adm = (row[cols["admission_date"]] or "").strip()
            admission = _parse_date(raw_adm, "admission date", row_no) if raw_adm else None
            try:
                records.append(
                    PatientRecord(
                        id=pid,
                        age=age,
                        sex=sex,
                        diagnosis_date=diagnosis,
                        admission_date=admission,
                    )
                )
            except DataError as exc:
                raise DataError(f"row {row_no}: {exc}") from None
    return records


def save_csv(records: list[PatientRecord], path, schema: dict[str, str] | None = None) -> None:
    """Write records back to CSV so that ``load_csv`` round-trips them exactly."""
    cols = dict(DEFAULT_SCHEMA)
    if schema:
        cols.update(schema)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([cols[k] for k in DEFAULT_SCHEMA])
        for rec in records:
            writer.writerow(
                [
                    rec.id,
                    rec.age,
                    rec.sex,
                    rec.diagnosis_date.isoformat(),
                    rec.admission_date.isoformat() if rec.admission_date else "",
                ]
            )


def derive_survival_times(records: list[PatientRecord], window: StudyWindow) -> SurvivalSample:
    """Turn dated records into (T, delta) pairs relative to the study window.

    Admitted subjects get T = admission - diagnosis in days with delta = 1;
    the rest are censored at the window end, T = end - diagnosis, delta = 0.
    Same-day differences would produce T = 0, which the estimators cannot
    hold, so those subjects are kept in-sample at half a day.
    """
    times = np.empty(len(records))
    deltas = np.empty(len(records), dtype=int)
    age = np.empty(len(records))
    sex = np.empty(len(records))
    if not records:
        raise DataError("no records to derive from")
    for i, rec in enumerate(records):
        if rec.diagnosis_date > window.end:
            raise DataError(f"patient {rec.id}: diagnosis after window end")
        if rec.diagnosis_date < window.start:
            raise DataError(f"patient {rec.id}: diagnosis before window start")
        if rec.admission_date is not None:
            if rec.admission_date > window.end:
                raise DataError(f"patient {rec.id}: admission after window end")
            t = float((rec.admission_date - rec.diagnosis_date).days)
            d = 1
        else:
            t = float((window.end - rec.diagnosis_date).days)
            d = 0
        times[i] = t if t > 0 else 0.5
        deltas[i] = d
        age[i] = float(rec.age)
        sex[i] = float(rec.sex)
    return SurvivalSample(times=times, deltas=deltas, covariates={"age": age, "sex": sex})


def summary_stats(sample: SurvivalSample) -> SummaryStats:
    """Describe a sample: size, censoring, uncensored time range, sex and age mix."""
    unc = sample.times[sample.deltas == 1]
    sex_counts = sex_pcts = mean_age_by_sex = None
    mean_age = None
    if "sex" in sample.covariates:
        sex_col = sample.covariates["sex"].astype(int)
        sex_counts = {v: int(np.sum(sex_col == v)) for v in (0, 1)}
        sex_pcts = {v: 100.0 * c / sample.n for v, c in sex_counts.items()}
    if "age" in sample.covariates:
        ages = sample.covariates["age"]
        mean_age = float(np.mean(ages))
        if sex_counts is not None:
            mean_age_by_sex = {
                v: float(np.mean(ages[sex_col == v])) if sex_counts[v] else None
                for v in (0, 1)
            }
    return SummaryStats(
        n=sample.n,
        n_uncensored=int(unc.size),
        censoring_proportion=float(np.mean(sample.deltas == 0)),
        min_uncensored_time=float(unc.min()) if unc.size else None,
        max_uncensored_time=float(unc.max()) if unc.size else None,
        sex_counts=sex_counts,
        sex_percentages=sex_pcts,
        mean_age=mean_age,
        mean_age_by_sex=mean_age_by_sex,
    )


def jitter_times(sample: SurvivalSample, seed: int) -> SurvivalSample:
    """Break day-grid ties by adding independent U(-1, 1) noise to every time.

    Requires all times >= 1 so the perturbed times stay strictly positive.
    Event indicators and covariates are untouched.  Deterministic per seed.
    """
    if np.any(sample.times < 1):
        raise DataError("jitter requires all times >= 1")
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=sample.n)
    # uniform() draws from the half-open interval; reject the exact endpoint
    # so the perturbation stays inside the open interval (-1, 1).
    while True:
        at_edge = u == -1.0
        if not at_edge.any():
            break
        u[at_edge] = rng.uniform(-1.0, 1.0, size=int(at_edge.sum()))
    return SurvivalSample(
        times=sample.times + u,
        deltas=sample.deltas.copy(),
        covariates={k: v.copy() for k, v in sample.covariates.items()},
    )


def write_sample_csv(sample: SurvivalSample, path) -> None:
    """Serialize a sample as CSV with columns time, delta, then covariates."""
    names = list(sample.covariates)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "delta", *names])
        for i in range(sample.n):
            row = [f"{sample.times[i]:.10g}", str(int(sample.deltas[i]))]
            row += [f"{sample.covariates[name][i]:.10g}" for name in names]
            writer.writerow(row)


def read_sample_csv(path) -> SurvivalSample:
    """Read a sample written by ``write_sample_csv``; extra columns become covariates."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["time", "delta"]:
            raise DataError(f"{path}: expected header starting with time,delta")
        names = header[2:]
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError:
        raise DataError(f"{path}: non-numeric value in data rows") from None
    if data.shape[1] != len(header):
        raise DataError(f"{path}: ragged rows")
    return SurvivalSample(
        times=data[:, 0],
        deltas=data[:, 1].astype(int),
        covariates={name: data[:, 2 + j] for j, name in enumerate(names)},
    )
