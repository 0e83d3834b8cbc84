#!/usr/bin/env python3
"""Run the acceptance suite outside pytest and write a JSON report.

Equivalent to ``pytest -m acceptance`` but collects every criterion verdict
into a single report file (default acceptance_report.json).
"""

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="acceptance_report.json")
    parser.add_argument("--pytest-args", default="", help="extra pytest flags")
    args = parser.parse_args()

    start = time.time()
    cmd = [sys.executable, "-m", "pytest", "-m", "acceptance", "-v", "-s",
           "--no-header", "-p", "no:cacheprovider"]
    if args.pytest_args:
        cmd += args.pytest_args.split()
    proc = subprocess.run(cmd, capture_output=True, text=True,
                          cwd=Path(__file__).resolve().parent.parent)
    lines = [ln for ln in proc.stdout.splitlines()
             if ln.startswith(("PASS", "FAIL"))]
    report = {
        "criteria": [
            {"line": ln, "verdict": "pass" if ln.startswith("PASS") else "fail"}
            for ln in lines
        ],
        "pytest_exit_code": proc.returncode,
        "runtime_seconds": time.time() - start,
    }
    Path(args.out).write_text(json.dumps(report, indent=2))
    print(proc.stdout[-4000:])
    print(f"wrote {args.out}")
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
