"""CSV ingestion and writing.

Two files describe a dataset:

``sequences.csv``  one row per (dyad, interval): ``dyad_id,t,maut,cdef``
``dyads.csv``      one row per dyad: ``dyad_id,gender,ext_t1,ext_t2,inhibitory_control``

Empty cells are missing values and ``t`` counts from 1.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Optional

from ..errors import IngestionError
from .records import GENDER_CODES, RawDyadObservation

SEQUENCE_COLUMNS = ["dyad_id", "t", "maut", "cdef"]
DYAD_COLUMNS = ["dyad_id", "gender", "ext_t1", "ext_t2", "inhibitory_control"]
SEQUENCES_FILE = "sequences.csv"
DYADS_FILE = "dyads.csv"


def format_number(x: Optional[float]) -> str:
    if x is None:
        return ""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _parse_optional(cell: str, what: str, where: str) -> Optional[float]:
    cell = cell.strip()
    if cell == "":
        return None
    try:
        v = float(cell)
    except ValueError:
        raise IngestionError(f"{where}: {what}={cell!r} is not a number") from None
    if not math.isfinite(v):
        raise IngestionError(f"{where}: {what} is not finite")
    return v


def _open_rows(path: Path, columns: list[str]):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != columns:
            raise IngestionError(f"{path}: header must be {','.join(columns)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise IngestionError(f"{path}, row {lineno}: expected {len(columns)} cells, got {len(row)}")
            yield lineno, row


def resolve_paths(sequences, dyads=None) -> tuple[Path, Path]:
    sequences = Path(sequences)
    if dyads is None:
        if not sequences.is_dir():
            raise IngestionError(f"{sequences} is not a directory; pass both CSV paths")
        return sequences / SEQUENCES_FILE, sequences / DYADS_FILE
    return sequences, Path(dyads)


def load_dataset(sequences, dyads=None) -> list[RawDyadObservation]:
    """Read a dataset from a directory holding both CSVs, or from two paths.

    Records come back in ``dyads.csv`` order. Errors name the file and row.
    """
    seq_path, dyad_path = resolve_paths(sequences, dyads)

    intervals: dict[str, dict[int, tuple]] = {}
    first_row: dict[str, int] = {}
    for lineno, row in _open_rows(seq_path, SEQUENCE_COLUMNS):
        where = f"{seq_path}, row {lineno}"
        did = row[0].strip()
        if not did:
            raise IngestionError(f"{where}: empty dyad_id")
        try:
            t = int(row[1])
        except ValueError:
            raise IngestionError(f"{where}: t={row[1]!r} is not an integer") from None
        maut = _parse_optional(row[2], "maut", where)
        cdef = _parse_optional(row[3], "cdef", where)
        for name, v in (("maut", maut), ("cdef", cdef)):
            if v is not None and not 0.0 <= v <= 3.0:
                raise IngestionError(f"{where}: {name}={v} outside [0, 3]")
        slots = intervals.setdefault(did, {})
        first_row.setdefault(did, lineno)
        if t in slots:
            raise IngestionError(f"{where}: duplicate interval t={t} for dyad {did!r}")
        slots[t] = (maut, cdef)

    records = []
    seen = set()
    for lineno, row in _open_rows(dyad_path, DYAD_COLUMNS):
        where = f"{dyad_path}, row {lineno}"
        did = row[0].strip()
        if did in seen:
            raise IngestionError(f"{where}: duplicate dyad_id {did!r}")
        seen.add(did)
        g = row[1].strip().lower()
        if g not in GENDER_CODES:
            raise IngestionError(f"{where}: gender {row[1]!r} not one of boy/girl/0/1")
        t1 = _parse_optional(row[2], "ext_t1", where)
        if t1 is None:
            raise IngestionError(f"{where}: ext_t1 is required")
        slots = intervals.get(did)
        if not slots:
            raise IngestionError(f"{where}: dyad {did!r} has no rows in {seq_path.name}")
        n = len(slots)
        if sorted(slots) != list(range(1, n + 1)):
            raise IngestionError(
                f"{seq_path}, row {first_row[did]}: intervals of dyad {did!r} must be t=1..{n} without gaps"
            )
        try:
            records.append(
                RawDyadObservation(
                    dyad_id=did,
                    gender=GENDER_CODES[g],
                    maut=tuple(slots[t][0] for t in range(1, n + 1)),
                    cdef=tuple(slots[t][1] for t in range(1, n + 1)),
                    ext_t1=t1,
                    ext_t2=_parse_optional(row[3], "ext_t2", where),
                    inhibitory_control=_parse_optional(row[4], "inhibitory_control", where),
                )
            )
        except IngestionError as exc:
            raise IngestionError(f"{where}: {exc}") from None
    orphans = sorted(set(intervals) - seen)
    if orphans:
        raise IngestionError(
            f"{seq_path}, row {first_row[orphans[0]]}: dyad {orphans[0]!r} missing from {dyad_path.name}"
        )
    return records


def write_dataset(records: Iterable[RawDyadObservation], directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    seq_path, dyad_path = directory / SEQUENCES_FILE, directory / DYADS_FILE
    records = list(records)
    with open(seq_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SEQUENCE_COLUMNS)
        for r in records:
            for t, (m, c) in enumerate(zip(r.maut, r.cdef), start=1):
                w.writerow([r.dyad_id, t, format_number(m), format_number(c)])
    with open(dyad_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DYAD_COLUMNS)
        for r in records:
            w.writerow([
                r.dyad_id, r.gender, format_number(r.ext_t1),
                format_number(r.ext_t2), format_number(r.inhibitory_control),
            ])
    return seq_path, dyad_path
