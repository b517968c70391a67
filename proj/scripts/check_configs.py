#!/usr/bin/env python3
"""Validates every JSON file under configs/ against configs/schema.json."""
import json
import pathlib
import sys

import jsonschema


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    schema = json.loads((root / "configs" / "schema.json").read_text())
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    files = sorted(p for p in (root / "configs").rglob("*.json") if p.name != "schema.json")
    for p in files:
        errors = list(validator.iter_errors(json.loads(p.read_text())))
        if errors:
            bad += 1
            print(f"{p}: {errors[0].message}")
    print(f"{len(files) - bad}/{len(files)} configs valid")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
