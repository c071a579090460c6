import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import List

import pandas as pd

from ..errors import ReportIOError
from ..models.experiment import ExperimentReport, OutputFormat, ReportMetadata

logger = logging.getLogger(__name__)


class ReportService:
    """Writes experiment reports to disk

    The payload files depend only on the report; the wall-clock timestamp goes to a
    separate <name>.meta.json so reruns with the same seed give identical payloads.
    """

    def report_name(self, report: ExperimentReport) -> str:
        return f"{report.experiment.value}_seed{report.seed}"

    def summary(self, report: ExperimentReport, include_tables: bool) -> dict:
        payload = report.model_dump(mode="json")
        if not include_tables:
            payload["tables"] = sorted(report.tables)
        return payload

    def table_frame(self, rows: List[dict]) -> pd.DataFrame:
        return pd.DataFrame.from_records(rows)

    def write(self, report: ExperimentReport, out_dir: Path, fmt: OutputFormat = OutputFormat.CSV) -> List[Path]:
        """Write the report and its metadata, returning the payload paths"""
        name = self.report_name(report)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            written: List[Path] = []

            summary_path = out_dir / f"{name}.json"
            summary = self.summary(report, include_tables=fmt == OutputFormat.JSON)
            summary_path.write_text(json.dumps(summary, indent=2, allow_nan=False) + "\n")
            written.append(summary_path)

            if fmt == OutputFormat.CSV:
                for table_name, rows in report.tables.items():
                    path = out_dir / f"{name}_{table_name}.csv"
                    self.table_frame(rows).to_csv(path, index=False, float_format="%.12g")
                    written.append(path)

            meta = ReportMetadata(
                experiment=report.experiment,
                created_at=datetime.now(timezone.utc),
                files=[p.name for p in written],
            )
            (out_dir / f"{name}.meta.json").write_text(meta.model_dump_json(indent=2) + "\n")
        except (OSError, ValueError) as e:
            raise ReportIOError(f'Could not write report {name} to {out_dir}: {e}') from e

        logger.info("Wrote %d report files for %s to %s", len(written), name, out_dir)
        return written
