"""JSON report schemas and validation."""

import json
from pathlib import Path

import jsonschema

METRICS_REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "fid", "kid", "kid_se", "diversity", "precision", "recall",
        "within_class_cov_real", "within_class_cov_union",
    ],
    "properties": {
        "fid": {"type": "number", "minimum": 0},
        "kid": {"type": "number"},
        "kid_se": {"type": "number", "minimum": 0},
        "diversity": {"type": "number", "minimum": 0},
        "precision": {"type": "number", "minimum": 0, "maximum": 1},
        "recall": {"type": "number", "minimum": 0, "maximum": 1},
        "within_class_cov_real": {"type": "number", "minimum": 0},
        "within_class_cov_union": {"type": "number", "minimum": 0},
    },
    "additionalProperties": True,
}

GENERATION_REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "label", "requested", "retained", "rejection_rate", "shortfall",
        "distance_histogram", "provenance",
    ],
    "properties": {
        "label": {"type": "integer", "minimum": 0},
        "requested": {"type": "integer", "minimum": 1},
        "retained": {"type": "integer", "minimum": 0},
        "rejection_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "shortfall": {"type": "boolean"},
        "distance_histogram": {
            "type": "object",
            "required": ["edges", "counts"],
            "properties": {
                "edges": {"type": "array", "items": {"type": "number"}},
                "counts": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "provenance": {"type": "object"},
    },
    "additionalProperties": True,
}

RUN_MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "config", "seeds", "inputs", "outputs", "status"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "seeds": {"type": "array", "items": {"type": "integer"}},
        "inputs": {"type": "object"},
        "outputs": {"type": "array", "items": {"type": "string"}},
        "status": {"enum": ["running", "ok", "failed"]},
    },
    "additionalProperties": True,
}


def validate_report(report: dict, schema: dict) -> None:
    jsonschema.validate(report, schema)


def write_report(path: str | Path, report: dict, schema: dict | None = None) -> None:
    if schema is not None:
        validate_report(report, schema)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
