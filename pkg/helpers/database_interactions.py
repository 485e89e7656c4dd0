import os
import sqlite3
import threading

from typing import Optional

from helpers.settings import get_settings


# serializes every statement made through the shared connection
DB_LOCK = threading.Lock()


def connect_to_sqlite_db(db_path: Optional[str] = None) -> (sqlite3.Connection, sqlite3.Cursor):
    """
    Function to return the connection and cursor to the SQLite database.
    :param db_path: database file, BENCH_DB_PATH when omitted
    :return: connection and cursor
    """
    # Define the path to the database file
    db_path = db_path or get_settings().db_path
    folder = os.path.dirname(db_path)
    if folder:
        os.makedirs(folder, exist_ok=True)

    # Connect to the SQLIte database
    # If the database doesn't exist, it will be created
    conn = sqlite3.connect(db_path, check_same_thread=False)
    curs = conn.cursor()

    # TO STORE ORDERS ##################################################################################################
    # Create the Orders table
    curs.execute('''
    CREATE TABLE IF NOT EXISTS Orders (
    order_id TEXT PRIMARY KEY,
    processed BOOLEAN,
    error TEXT,
    message TEXT,
    request_type TEXT
    )
    ''')

    # TO STORE RUN REPORTS #############################################################################################
    # Create the Reports table, one row per RunReport, kept as its JSON dump
    curs.execute('''
    CREATE TABLE IF NOT EXISTS Reports (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    order_id TEXT,
    position INTEGER,
    accepted BOOLEAN,
    report TEXT,
    FOREIGN KEY(order_id) REFERENCES Orders(order_id)
    )
    ''')
    conn.commit()

    return conn, curs
