#!/usr/bin/env python3
"""Validate trajectory JSONL files against docs/trajectory.schema.json.

Each line is checked against the schema; the file as a whole must start with
a header, end with a footer, and carry step/plan counts that match.
Exit status: 0 valid, 1 invalid, 2 usage or I/O error.
"""
import argparse
import json
import pathlib
import sys

import jsonschema


def problems_in(path, validator):
    problems = []
    try:
        lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]
    except OSError as exc:
        raise SystemExit(f"{path}: {exc}")
    records = []
    for number, text in enumerate(lines, 1):
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            problems.append(f"line {number}: not JSON ({exc})")
            continue
        for error in validator.iter_errors(record):
            problems.append(f"line {number}: {error.message}")
        records.append(record)
    if not records:
        return problems + ["empty trajectory"]
    types = [r.get("type") for r in records]
    if types[0] != "header":
        problems.append("first line is not the header")
    if types[-1] != "footer":
        problems.append("truncated: no footer")
    footer = records[-1]
    if types[-1] == "footer":
        if footer.get("step_count") != types.count("step"):
            problems.append("footer step_count does not match the step lines")
        if footer.get("plan_count") != types.count("plan"):
            problems.append("footer plan_count does not match the plan lines")
    return problems


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--schema", type=pathlib.Path,
                        default=pathlib.Path(__file__).resolve().parent.parent / "docs" / "trajectory.schema.json")
    parser.add_argument("files", nargs="+", type=pathlib.Path)
    args = parser.parse_args()
    try:
        schema = json.loads(args.schema.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot load schema: {exc}", file=sys.stderr)
        return 2
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for path in args.files:
        problems = problems_in(path, validator)
        for p in problems:
            print(f"{path}: {p}", file=sys.stderr)
        bad += bool(problems)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
