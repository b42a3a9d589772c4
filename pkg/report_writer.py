"""
This module turns results into text and files:

* value tables and policies as printed tables
* policy, value-table and model JSON files
* schedule files (whitespace-separated states)
* trace and update-report JSON lines
* error CSV files

Numbers are printed with ``TABLE_DIGITS`` significant digits.
"""

import csv
import json
import logging

import numpy as np

from .constants import *
from .mdp_core import (PreconditionError, ModelFormatError,
                       model_from_document, model_to_document)
from .finite_horizon import FiniteHorizonPolicy, ValueTable

__all__ = ["format_number",
           "format_row",
           "value_table_lines",
           "policy_lines",
           "policy_to_document",
           "policy_from_document",
           "value_table_to_document",
           "value_table_from_document",
           "read_json",
           "write_json",
           "read_model",
           "write_model",
           "read_policy",
           "write_policy",
           "read_value_table",
           "write_value_table",
           "read_vector",
           "read_schedule",
           "write_trace",
           "write_reports",
           "write_error_csv",
           ]

logger = logging.getLogger(__name__)


def format_number(value):
    """ ``value`` with ``TABLE_DIGITS`` significant digits. """

    return f"{float(value):.{TABLE_DIGITS}g}"


def format_row(values):
    """ ``(2, 3)`` style tuple of numbers. """

    return "(" + ", ".join(format_number(v) for v in values) + ")"


def value_table_lines(table, label="V"):
    """
    One line per level, ``V_0`` first.

    Parameters
    ----------
    table : ValueTable
    label : str, optional

    Returns
    -------
    list of str
    """

    return [f"{label}_{h} = {format_row(table.row(h))}"
            for h in range(table.horizon + 1)]


def policy_lines(policy, label="sigma"):
    """ One line per remaining-horizon level, ``σ[1]`` first. """

    return [f"{label}[{j}] = ({', '.join(str(int(a)) for a in policy.level(j))})"
            for j in range(1, policy.horizon + 1)]


def policy_to_document(policy):
    return {
        "indexing": INDEXING_TAG,
        "horizon": policy.horizon,
        "actions": policy.actions.tolist(),
    }


def policy_from_document(doc):
    """
    Parse a policy document.

    Raises
    ------
    ModelFormatError
        On a missing key, a foreign indexing tag or a ragged table.
    """

    if not isinstance(doc, dict) or "actions" not in doc:
        raise ModelFormatError("policy document needs an 'actions' table")
    indexing = doc.get("indexing", INDEXING_TAG)
    if indexing != INDEXING_TAG:
        raise ModelFormatError(
            f"policy indexing {indexing!r} is not {INDEXING_TAG!r}")
    try:
        table = np.array(doc["actions"], dtype=np.int64)
    except (TypeError, ValueError) as e:
        raise ModelFormatError(f"bad policy table: {e}") from e
    if table.ndim != 2:
        raise ModelFormatError("policy table must be H rows of |X| actions")
    if "horizon" in doc and int(doc["horizon"]) != table.shape[0]:
        raise ModelFormatError(
            f"horizon {doc['horizon']} but {table.shape[0]} rows given")
    return FiniteHorizonPolicy(table)


def value_table_to_document(table):
    return {
        "indexing": INDEXING_TAG,
        "horizon": table.horizon,
        "values": table.values.tolist(),
    }


def value_table_from_document(doc):
    """
    Parse a value-table document (``values[h][x]``, ``h = 0..H``).

    Raises
    ------
    ModelFormatError
        On a missing key, a foreign indexing tag or a ragged table.
    """

    if not isinstance(doc, dict) or "values" not in doc:
        raise ModelFormatError("value document needs a 'values' table")
    indexing = doc.get("indexing", INDEXING_TAG)
    if indexing != INDEXING_TAG:
        raise ModelFormatError(
            f"value indexing {indexing!r} is not {INDEXING_TAG!r}")
    try:
        table = np.array(doc["values"], dtype=float)
    except (TypeError, ValueError) as e:
        raise ModelFormatError(f"bad value table: {e}") from e
    if table.ndim != 2:
        raise ModelFormatError("value table must be H+1 rows of |X| numbers")
    if "horizon" in doc and int(doc["horizon"]) != table.shape[0] - 1:
        raise ModelFormatError(
            f"horizon {doc['horizon']} but {table.shape[0]} rows given")
    return ValueTable(table)


def read_json(path):
    """
    Load a JSON file.

    Raises
    ------
    OSError
        When the file cannot be read.
    ModelFormatError
        When it is not JSON.
    """

    with open(path, encoding="utf-8") as file:
        try:
            return json.load(file)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ModelFormatError(f"{path}: {e}") from e


def write_json(doc, path):
    with open(path, "w", encoding="utf-8") as file:
        json.dump(doc, file, indent=1)
        file.write("\n")
    logger.debug("wrote %s", path)


def read_model(path):
    """ Parse a model file (no validation). """

    return model_from_document(read_json(path))


def write_model(model, path):
    write_json(model_to_document(model), path)


def read_policy(path):
    return policy_from_document(read_json(path))


def write_policy(policy, path):
    write_json(policy_to_document(policy), path)


def read_value_table(path):
    return value_table_from_document(read_json(path))


def write_value_table(table, path):
    write_json(value_table_to_document(table), path)


def read_vector(path, length):
    """
    A JSON list of ``length`` numbers, e.g. a terminal value row.
    """

    doc = read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("values")
    try:
        row = np.array(doc, dtype=float)
    except (TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: {e}") from e
    if row.shape != (length,):
        raise ModelFormatError(f"{path}: expected {length} numbers")
    return row


def read_schedule(path):
    """ Whitespace-separated state ids. """

    try:
        with open(path, encoding="utf-8") as file:
            states = [int(token) for token in file.read().split()]
    except (ValueError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"{path}: {e}") from e
    if not states:
        raise PreconditionError(f"{path}: empty schedule")
    return states


def write_trace(trace, path):
    """
    One JSON object per step, then the summary object.

    Parameters
    ----------
    trace : OnlineTrace
    path : str
    """

    with open(path, "w", encoding="utf-8") as file:
        for record in trace.records:
            file.write(json.dumps(record.to_json()) + "\n")
        file.write(json.dumps(trace.summary()) + "\n")
    logger.info("trace of %d steps written to %s", len(trace.records), path)


def write_reports(reports, path):
    """ One JSON object per single-state update. """

    with open(path, "w", encoding="utf-8") as file:
        for report in reports:
            file.write(json.dumps(report.to_json()) + "\n")
    logger.info("%d update reports written to %s", len(reports), path)


def write_error_csv(rows, path):
    """ ``H,error`` rows. """

    with open(path, "w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(["H", "error"])
        for h, error in rows:
            writer.writerow([int(h), format_number(error)])
