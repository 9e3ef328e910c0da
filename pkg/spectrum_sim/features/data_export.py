"""
Data Export Functionality
Write experiment results as CSV tables and a JSON summary.
"""
import json
import logging
import os
from typing import Any, Dict, List

import pandas as pd

from config import Config
from spectrum_sim.errors import SimulationError, UsageError

logger = logging.getLogger(__name__)

EXPORT_FORMATS = ('csv', 'json')


class ResultExporter:
    """Handles writing experiment tables to disk"""

    def __init__(self, out_dir: str, fmt: str = 'csv', float_format: str = Config.FLOAT_FORMAT):
        if fmt not in EXPORT_FORMATS:
            raise UsageError(f"unknown export format {fmt!r}; use one of {EXPORT_FORMATS}")
        self.out_dir = out_dir
        self.fmt = fmt
        self.float_format = float_format

    @staticmethod
    def table_to_csv(df: pd.DataFrame, float_format: str = Config.FLOAT_FORMAT) -> str:
        """
        Render a table as CSV text

        Args:
            df: Table to render
            float_format: printf-style float format

        Returns:
            Header line plus one comma-separated record per row ('\\n' endings)
        """
        return df.to_csv(index=False, float_format=float_format, lineterminator='\n')

    @staticmethod
    def table_to_json(df: pd.DataFrame) -> str:
        return df.to_json(orient='records', indent=2, double_precision=9) + '\n'

    def _path(self, filename: str) -> str:
        stem, _ = os.path.splitext(filename)
        return os.path.join(self.out_dir, filename if self.fmt == 'csv' else f"{stem}.json")

    def _write(self, path: str, text: str) -> str:
        try:
            with open(path, 'w', encoding='utf-8', newline='') as handle:
                handle.write(text)
        except OSError as e:
            raise SimulationError(f"cannot write {path}: {e.strerror or e}") from e
        logger.debug(f"wrote {path}")
        return path

    def write_table(self, df: pd.DataFrame, filename: str) -> str:
        text = (self.table_to_csv(df, self.float_format) if self.fmt == 'csv'
                else self.table_to_json(df))
        return self._write(self._path(filename), text)

    def write_summary(self, summary: Dict[str, Any], filename: str = Config.SUMMARY_FILE) -> str:
        text = json.dumps(summary, indent=2, sort_keys=True) + '\n'
        return self._write(os.path.join(self.out_dir, filename), text)

    def ensure_dir(self) -> None:
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as e:
            raise SimulationError(f"cannot create output directory {self.out_dir}: {e.strerror or e}") from e


def emit_results(result, fmt: str = 'csv', path: str = Config.DEFAULT_OUTPUT_DIR, summary: bool = True) -> List[str]:
    """
    Write the per-sample, CDF, trace and power tables (and the summary).

    Args:
        result: ExperimentResult
        fmt: 'csv' or 'json'
        path: Output directory (created if missing)
        summary: Also write the JSON summary with the config echo

    Returns:
        Paths written
    """
    exporter = ResultExporter(path, fmt)
    exporter.ensure_dir()
    written = [
        exporter.write_table(result.samples_frame(), Config.SAMPLES_FILE),
        exporter.write_table(result.cdf, Config.CDF_FILE),
        exporter.write_table(result.trace_frame(), Config.TRACE_FILE),
        exporter.write_table(result.power_frame(), Config.POWER_FILE),
    ]
    if summary:
        written.append(exporter.write_summary(result.summary()))
    logger.info(f"Wrote {len(written)} result files to {path}")
    return written
