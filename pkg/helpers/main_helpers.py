import json
import pandas as pd
import secrets
import sqlite3

from helpers.database_interactions import DB_LOCK
from schemas.output_schemas import RunReport


def generate_order_id() -> str:
	"""
	Return an unequivocal ID that identifies the request and can be used
	to retrieve the results later on
	:return: a token in string format
	"""
	return secrets.token_urlsafe(45)


def register_order(conn: sqlite3.Connection, order_id: str, request_type: str):
	"""
	Create the registry of a new, unprocessed order.
	"""
	with DB_LOCK:
		conn.execute('''
			INSERT INTO Orders (order_id, processed, error, message, request_type)
			VALUES (?, ?, ?, ?, ?)
		''', (order_id, False, '', '', request_type))
		conn.commit()


def fetch_order(conn: sqlite3.Connection, order_id: str):
	"""
	The Orders row of an order ID, or None.
	"""
	with DB_LOCK:
		return conn.execute('''
			SELECT order_id, processed, error, message, request_type FROM Orders WHERE order_id = ?
		''', (order_id,)).fetchone()


def store_reports(conn: sqlite3.Connection, order_id: str, reports: list[RunReport]):
	"""
	Store the reports of a finished order and flag it as processed.
	:param conn: connection to the database
	:param order_id: order id of the run
	:param reports: reports produced by the run, in order
	"""
	with DB_LOCK:
		for position, report in enumerate(reports):
			conn.execute('''
				INSERT INTO Reports (order_id, position, accepted, report)
				VALUES (?, ?, ?, ?)
			''', (order_id, position, report.accepted, json.dumps(report.model_dump(mode='json'))))

		conn.execute('''
			UPDATE Orders
			SET processed = ?
			WHERE order_id = ?
		''', (True, order_id))
		conn.commit()


def store_failure(conn: sqlite3.Connection, order_id: str, error: Exception):
	"""
	Flag an order as processed with the name and message of the error that ended it.
	"""
	with DB_LOCK:
		conn.execute('''
			UPDATE Orders
			SET processed = ?, error = ?, message = ?
			WHERE order_id = ?
		''', (True, type(error).__name__, str(error), order_id))
		conn.commit()


def reports_return_structure(conn: sqlite3.Connection, order_id: str) -> list[dict]:
	"""
	Prepare the structure to be returned with the run reports, in the format of the API outputs
	:param conn: connection to the database
	:param order_id: order id provided by the user
	:return: list of reports in the API specified outputs' format
	"""
	# Retrieve the reports stored for the order ID
	with DB_LOCK:
		reports = conn.execute('''
			SELECT position, report FROM Reports WHERE order_id = ?
		''', (order_id,)).fetchall()

	# Convert to dataframe for easy manipulation
	reports_df = pd.DataFrame(reports, columns=['position', 'report']).sort_values('position')

	return [json.loads(report) for report in reports_df['report']]
