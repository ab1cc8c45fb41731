"""Validate every fixture manifest against the JSON schema.

Usage: check_schema.py SCHEMA FIXTURE_DIR
"""

import json
import pathlib
import sys

import jsonschema


def main(argv):
    if len(argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    schema = json.loads(pathlib.Path(argv[1]).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    files = sorted(pathlib.Path(argv[2]).glob("*.json"))
    if not files:
        print(f"no fixtures in {argv[2]}", file=sys.stderr)
        return 1
    bad = 0
    for path in files:
        errors = sorted(validator.iter_errors(json.loads(path.read_text())), key=lambda e: list(e.path))
        for e in errors:
            where = "/" + "/".join(str(p) for p in e.path)
            print(f"{path.name}: {where}: {e.message}")
        bad += bool(errors)
        print(f"{'ok  ' if not errors else 'FAIL'} {path.name}")

    # A few manifests the parser rejects must be rejected here too.
    base = json.loads(files[0].read_text())
    broken = []
    missing_lee = json.loads(json.dumps(base))
    del missing_lee["structure"]["omega"]
    broken.append(("missing Lee form", missing_lee))
    bad_key = json.loads(json.dumps(base))
    bad_key["jobs"] = [{"type": "validate", "colour": 1}]
    broken.append(("unknown job key", bad_key))
    bad_version = json.loads(json.dumps(base))
    bad_version["schema_version"] = 2
    broken.append(("wrong version", bad_version))
    for label, doc in broken:
        if validator.is_valid(doc):
            print(f"FAIL schema accepts a manifest with a {label}")
            bad += 1

    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
