"""Validates scenario files against docs/scenario.schema.json."""

import json
import sys

import jsonschema


def main(argv):
    with open(argv[1]) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for path in argv[2:]:
        with open(path) as f:
            errors = sorted(validator.iter_errors(json.load(f)), key=lambda e: e.json_path)
        for e in errors:
            print(f"{path}: {e.json_path}: {e.message}")
        bad += bool(errors)
        print(f"{'ok  ' if not errors else 'FAIL'} {path}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
