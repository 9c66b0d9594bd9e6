"""Shared helpers for the experiment runners."""

import json
import pathlib

from gadkit.polycore import parse_poly

DATA = pathlib.Path(__file__).resolve().parent / "data"
RESULTS = pathlib.Path(__file__).resolve().parent / "results"


def load(name, n=None):
    return parse_poly((DATA / f"{name}.txt").read_text().strip(), n)


def save_json(name, payload):
    RESULTS.mkdir(exist_ok=True)
    path = RESULTS / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return path
