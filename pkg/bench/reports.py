import json
import os
import pandas as pd

from loguru import logger
from typing import (
	Optional,
	Sequence
)

from schemas.output_schemas import RunReport


def _ensure_folder(path: str):
	folder = os.path.dirname(os.path.abspath(path))
	os.makedirs(folder, exist_ok=True)


def write_json(reports: Sequence[RunReport], path: str):
	"""
	Write the reports as a JSON array, one object per case.
	"""
	_ensure_folder(path)
	with open(path, 'w') as handle:
		json.dump([r.model_dump(mode='json') for r in reports], handle, indent=2)
	logger.info(f'Wrote {len(reports)} reports to {path}.')


def read_json(path: str) -> list[RunReport]:
	with open(path) as handle:
		return [RunReport.model_validate(r) for r in json.load(handle)]


def reports_frame(reports: Sequence[RunReport]) -> pd.DataFrame:
	"""
	One row per report, nested fields flattened into dotted columns. Energy histories are left out.
	"""
	rows = []
	for report in reports:
		row = report.model_dump(mode='json')
		if row.get('wave'):
			row['wave'] = {k: v for k, v in row['wave'].items() if k not in ('energy_times', 'energies')}
		rows.append(row)
	return pd.json_normalize(rows)


def write_csv(reports: Sequence[RunReport], path: str):
	_ensure_folder(path)
	reports_frame(reports).to_csv(path, index=False)
	logger.info(f'Wrote {len(reports)} report rows to {path}.')


def summary(reports: Sequence[RunReport], columns: Optional[Sequence[str]] = None) -> str:
	"""
	Plain-text table of the main report fields, for the console.
	"""
	frame = reports_frame(reports)
	columns = [c for c in (columns or ('case', 'dim', 'degree', 'n', 'dofs', 'l2_error', 'rate', 'iterations',
									   'times.total', 'accepted')) if c in frame.columns]
	return frame[columns].to_string(index=False)
