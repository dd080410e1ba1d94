import csv
import json
import sys
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional

logger = logging.getLogger("kacsim")

HISTOGRAM_FIELDS = ['bin_lo', 'bin_hi', 'count', 'empirical_prob', 'target_prob']
TAIL_FIELDS = HISTOGRAM_FIELDS + ['relative_error']


class OutputPaths:
    """
    File names derived from the ``--out`` path: ``runs/x`` or ``runs/x.csv``
    give ``runs/x.csv``, ``runs/x.json`` and ``runs/x_<part>.csv``.
    """

    def __init__(self, out: Path):
        out = Path(out)
        self.stem = out.with_suffix('') if out.suffix in ('.csv', '.json') else out
        self.stem.parent.mkdir(parents=True, exist_ok=True)

    @property
    def csv(self) -> Path:
        return self.stem.with_name(self.stem.name + '.csv')

    @property
    def json(self) -> Path:
        return self.stem.with_name(self.stem.name + '.json')

    def part(self, name: str) -> Path:
        return self.stem.with_name(f"{self.stem.name}_{name}.csv")


def _format(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return value


def write_rows(rows: Iterable[Dict], fieldnames: List[str], csv_file: Optional[Path] = None) -> None:
    """
    Write dict rows as CSV to ``csv_file``, or to stdout when no file is given.
    Floats are written with ``repr`` so files round-trip exactly.
    """
    rows = [{k: _format(row.get(k)) for k in fieldnames} for row in rows]
    if csv_file is None:
        w = csv.DictWriter(sys.stdout, fieldnames, lineterminator='\n')
        w.writeheader()
        w.writerows(rows)
        return
    with open(csv_file, 'w', newline='', encoding='utf-8') as f:
        w = csv.DictWriter(f, fieldnames, lineterminator='\n')
        w.writeheader()
        w.writerows(rows)
    logger.info(f"Wrote {len(rows)} rows to {csv_file}")


def write_histogram(rows, csv_file: Optional[Path] = None, tail: bool = False) -> None:
    write_rows((asdict(r) for r in rows), TAIL_FIELDS if tail else HISTOGRAM_FIELDS, csv_file)


def write_summary(summary: dict, json_file: Optional[Path] = None) -> None:
    """Write the summary JSON to ``json_file``, or to stderr when no file is given."""
    text = json.dumps(summary, indent=2, sort_keys=True, allow_nan=False, default=str)
    if json_file is None:
        print(text, file=sys.stderr)
        return
    with open(json_file, 'w', encoding='utf-8') as f:
        f.write(text + '\n')
    logger.info(f"Wrote summary to {json_file}")
