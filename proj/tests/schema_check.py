# Copyright 2026 The Shiftguard Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Runs every shiftguard command on the smoke config and validates each JSON
record it emits, on stdout and in result files, against the schemas."""

import glob
import json
import os
import random
import shutil
import subprocess
import sys
import tempfile

try:
    import jsonschema
    from referencing import Registry, Resource
except ImportError:
    print("jsonschema is not installed; skipping")
    sys.exit(77)


def load_schemas(schema_dir):
    schemas = {}
    for path in glob.glob(os.path.join(schema_dir, "*.schema.json")):
        with open(path) as f:
            s = json.load(f)
        schemas["shiftguard." + os.path.basename(path)[: -len(".schema.json")]] = s
    registry = Registry().with_resources((s["$id"], Resource.from_contents(s)) for s in schemas.values())
    return schemas, registry


class Checker:
    def __init__(self, schemas, registry):
        self.schemas = schemas
        self.registry = registry
        self.checked = {}

    def validate(self, record, where):
        fmt = record.get("format")
        if fmt not in self.schemas:
            raise SystemExit(f"{where}: no schema for format {fmt!r}")
        validator = jsonschema.Draft202012Validator(self.schemas[fmt], registry=self.registry)
        errors = sorted(validator.iter_errors(record), key=lambda e: e.path)
        if errors:
            raise SystemExit(f"{where}: {fmt}: {errors[0].message}")
        self.checked[fmt] = self.checked.get(fmt, 0) + 1

    def lines(self, text, where):
        for n, line in enumerate(text.splitlines(), 1):
            if line.strip():
                self.validate(json.loads(line), f"{where}:{n}")


def run(binary, args, cwd, expect):
    p = subprocess.run([binary] + args, cwd=cwd, capture_output=True, text=True)
    if p.returncode not in expect:
        raise SystemExit(f"{' '.join(args)} exited {p.returncode}:\n{p.stderr}")
    return p.stdout


def main():
    binary, schema_dir, config_dir = (os.path.abspath(a) for a in sys.argv[1:4])
    checker = Checker(*load_schemas(schema_dir))
    work = tempfile.mkdtemp(prefix="shiftguard_schema_")
    try:
        shutil.copy(os.path.join(config_dir, "smoke.ini"), work)
        out = run(binary, ["calibrate", "smoke.ini"], work, {0})
        checker.lines(out, "calibrate")
        calib_file = json.loads(out)["calibration_file"]
        with open(os.path.join(work, calib_file)) as f:
            checker.validate(json.load(f), calib_file)

        rng = random.Random(0)
        with open(os.path.join(work, "q.csv"), "w") as f:
            f.write("x0,x1,x2,x3\n")
            for _ in range(20):
                f.write(",".join(str(rng.gauss(6.0, 1.0)) for _ in range(4)) + "\n")
        checker.lines(run(binary, ["test", "smoke.ini", "--q", "q.csv", "--strict-exit"], work, {0, 2}), "test")
        checker.lines(run(binary, ["benchmark", "smoke.ini"], work, {0}), "benchmark")
        checker.lines(run(binary, ["report", "smoke-results"], work, {0}), "report")
        for path in sorted(glob.glob(os.path.join(work, "smoke-results", "*.jsonl"))):
            with open(path) as f:
                checker.lines(f.read(), os.path.basename(path))
    finally:
        shutil.rmtree(work)

    missing = sorted(set(checker.schemas) - set(checker.checked))
    for fmt, n in sorted(checker.checked.items()):
        print(f"{fmt}: {n} records valid")
    if missing:
        raise SystemExit(f"schemas never exercised: {missing}")


if __name__ == "__main__":
    main()
