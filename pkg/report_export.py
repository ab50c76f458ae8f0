"""
Result Export Module

Serializes command results as JSON documents or CSV tables. Every document
carries the schema version, the command, its parameters and the tolerances
and grid sizes used; runtimes are included only on request so repeated runs
produce identical bytes.

Version: 1.0.0
"""

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from errors import UsageError

SCHEMA_VERSION = 1
OUTPUT_FORMATS = ('json', 'csv')
SPECTRUM_COLUMNS = ('index', 'lambda', 'ell', 'multiplicity', 'residual')
SWEEP_COLUMNS = ('r', 'lambda1')


@dataclass
class RunResult:
    """
    Output of one CLI command.

    Attributes:
        command: Subcommand name
        params: Parsed flags that define the computation
        outputs: Structured results
        meta: Tolerances, grid sizes and optionally runtime seconds
        rows: Tabular view used for CSV output, one dict per row
        columns: Fixed CSV header
    """

    command: str
    params: Dict[str, Any]
    outputs: Dict[str, Any]
    meta: Dict[str, Any] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    columns: Sequence[str] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema': SCHEMA_VERSION,
            'command': self.command,
            'params': self.params,
            'outputs': self.outputs,
            'meta': self.meta,
        }


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return 'inf' if value > 0 else ('-inf' if value < 0 else 'nan')
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class ReportExporter:
    """
    Writes RunResults to a stream or a file.

    Attributes:
        output_format: 'json' or 'csv'
    """

    def __init__(self, output_format: str = 'json') -> None:
        if output_format not in OUTPUT_FORMATS:
            raise UsageError(f"unknown output format '{output_format}', use one of {OUTPUT_FORMATS}")
        self.output_format = output_format

    def render(self, result: RunResult) -> str:
        """Serialize a result in the configured format."""
        if self.output_format == 'json':
            return self.render_json(result)
        return self.render_csv(result)

    def render_json(self, result: RunResult) -> str:
        return json.dumps(_plain(result.to_dict()), indent=2, sort_keys=True) + '\n'

    def render_csv(self, result: RunResult) -> str:
        """
        Rows under a fixed header; commands without a table emit key/value pairs.

        Raises:
            UsageError: If a row carries a column outside the header
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        if result.rows:
            columns = list(result.columns) or list(result.rows[0].keys())
            writer.writerow(columns)
            for row in result.rows:
                extra = set(row) - set(columns)
                if extra:
                    raise UsageError(f"row has columns outside the header: {sorted(extra)}")
                writer.writerow([_cell(row.get(c)) for c in columns])
        else:
            writer.writerow(['key', 'value'])
            for key, value in sorted(_flatten(_plain(result.outputs)).items()):
                writer.writerow([key, _cell(value)])
        return buffer.getvalue()

    def write(self, result: RunResult, output_path: Optional[str] = None) -> str:
        """
        Render and write to output_path, or return the text for stdout.

        Raises:
            OSError: If the file cannot be written
        """
        text = self.render(result)
        if output_path:
            try:
                directory = os.path.dirname(output_path)
                if directory:
                    os.makedirs(directory, exist_ok=True)
                with open(output_path, 'w', encoding='utf-8', newline='') as f:
                    f.write(text)
            except OSError as e:
                logging.error(f"Could not write {output_path}: {e}")
                raise
            logging.info(f"Wrote {result.command} result to {output_path}")
        return text


def _flatten(value: Any, prefix: str = '') -> Dict[str, Any]:
    """Dotted-key view of nested dicts and lists."""
    if isinstance(value, dict):
        flat: Dict[str, Any] = {}
        for key, item in value.items():
            flat.update(_flatten(item, f"{prefix}.{key}" if prefix else str(key)))
        return flat
    if isinstance(value, list):
        flat = {}
        for i, item in enumerate(value):
            flat.update(_flatten(item, f"{prefix}.{i}" if prefix else str(i)))
        return flat
    return {prefix: value}


def spectrum_rows(spectrum_dict: Dict[str, Any]) -> List[Dict[str, Any]]:
    """CSV rows (index, lambda, ell, multiplicity, residual) of a Spectrum.to_dict()."""
    rows = []
    for i, entry in enumerate(spectrum_dict['entries'], start=1):
        rows.append({'index': i, 'lambda': entry['lambda'], 'ell': entry.get('ell'),
                     'multiplicity': entry['multiplicity'], 'residual': entry['residual']})
    return rows
