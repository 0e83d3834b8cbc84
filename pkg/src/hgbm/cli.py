"""Command line interface.

Subcommands: ``simulate``, ``verify-laplace``, ``verify-limits``, ``kernel``,
``identities``.  Exit codes: 0 when every verdict passes, 1 when any fails,
2 on configuration errors.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

from hgbm.montecarlo import ConfigError, RunConfig
from hgbm.scenarios import SCENARIOS


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="hgbm", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify-laplace", "verify-limits", "kernel", "identities"):
        p = sub.add_parser(name)
        p.add_argument("--n", type=int, default=4)
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--t", type=float, default=1.0, help="time horizon")
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--paths", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--alpha", type=float, default=0.25)
        p.add_argument("--chart", choices=("lambda", "zeta", "matrix"), default="matrix")
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    return top


def _rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0].keys())
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(format(row[c], ".17g") if isinstance(row[c], float)
                           else str(row[c]) for c in cols) + "\n")
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = RunConfig(n=args.n, k=args.k, horizon=args.t, dt=args.dt,
                        paths=args.paths, seed=args.seed, alpha=args.alpha,
                        chart=args.chart, scenario=args.command,
                        out=args.out, fmt=args.fmt)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        payload, report = SCENARIOS[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    for line in report.summary_lines():
        print(line)

    if cfg.out:
        if args.command in ("simulate", "verify-laplace", "verify-limits") and payload is not None:
            body = payload.to_csv() if cfg.fmt == "csv" else payload.to_json()
        elif args.command == "kernel":
            body = (_rows_to_csv(payload) if cfg.fmt == "csv"
                    else json.dumps(payload, sort_keys=True))
        else:
            body = report.to_json()
        with open(cfg.out, "w") as fh:
            fh.write(body)
        print(f"wrote {cfg.out}")
    else:
        print(report.to_json())
    return 0 if report.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
