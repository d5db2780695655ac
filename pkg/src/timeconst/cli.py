"""Command-line runner.

    timeconst <experiment> [--config PATH] [--seed U64] [--workers INT] [--out DIR]
    timeconst replay MANIFEST [--workers INT] [--out DIR]

Exit codes: 0 pass, 1 usage, 2 assertion failure, 3 capacity.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, UsageError, resolve
from .errors import CapacityError, ConsistencyError
from .experiments import DRIVERS, Outcome

EXIT_OK, EXIT_USAGE, EXIT_ASSERT, EXIT_CAPACITY = 0, 1, 2, 3
log = logging.getLogger("timeconst")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def csv_bytes(table, header: dict) -> bytes:
    buf = io.StringIO()
    for k in sorted(header):
        buf.write(f"# {k}={_fmt(header[k])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(row[c]) for c in table.columns])
    return buf.getvalue().encode()


def _flat_params(resolved: dict) -> dict:
    out = dict(version=__version__, experiment=resolved["experiment"], seed=resolved["seed"])
    for k, v in resolved["params"].items():
        out[k] = json.dumps(v) if isinstance(v, (list, dict)) else v
    return out


def write_artifacts(resolved: dict, outcome: Outcome, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    header = _flat_params(resolved)
    for k, v in outcome.summary.items():
        if isinstance(v, (int, float, str, bool)):
            header[k] = v
    hashes = {}
    for table in outcome.tables:
        data = csv_bytes(table, header)
        name = f"{table.name}.csv"
        (out / name).write_bytes(data)
        hashes[name] = hashlib.sha256(data).hexdigest()
    for name, doc in outcome.documents.items():
        data = json.dumps(doc, indent=2, sort_keys=True, default=str).encode()
        (out / name).write_bytes(data)
        hashes[name] = hashlib.sha256(data).hexdigest()
    summary = json.dumps(dict(params=header, summary=outcome.summary, failures=outcome.failures),
                         indent=2, sort_keys=True, default=str).encode()
    (out / "summary.json").write_bytes(summary)
    hashes["summary.json"] = hashlib.sha256(summary).hexdigest()
    derived = []
    for name, render in outcome.svg.items():
        render(out / name)
        derived.append(name)
    manifest = dict(version=__version__, experiment=resolved["experiment"], seed=resolved["seed"],
                    workers=resolved["workers"], config=resolved["params"], outputs=hashes,
                    derived=derived)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def execute(resolved: dict, out: Path) -> tuple[int, dict]:
    driver = DRIVERS[resolved["experiment"]]
    outcome = driver(resolved["params"], resolved["seed"], resolved["workers"])
    manifest = write_artifacts(resolved, outcome, out)
    if outcome.failures:
        print(f"assertion failure: {outcome.failures[0]}", file=sys.stderr)
        return EXIT_ASSERT, manifest
    return EXIT_OK, manifest


def replay(manifest_path: Path, out: Path | None, workers: int | None) -> int:
    m = json.loads(Path(manifest_path).read_text())
    if m.get("version") != __version__:
        print(f"refusing replay: manifest written by version {m.get('version')}, "
              f"this is {__version__}", file=sys.stderr)
        return EXIT_USAGE
    resolved = dict(experiment=m["experiment"], params=m["config"], seed=int(m["seed"]),
                    workers=int(workers if workers is not None else m.get("workers", 1)))
    out = out or Path(manifest_path).parent / "replay"
    code, new = execute(resolved, out)
    diff = sorted(k for k in m["outputs"] if new["outputs"].get(k) != m["outputs"][k])
    if diff:
        print(f"non-replay: outputs differ from the manifest ({', '.join(diff)})", file=sys.stderr)
        return EXIT_ASSERT
    print(f"replay identical: {len(m['outputs'])} outputs match")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="timeconst", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", type=Path, default=Path("runs") / name)
    rp = sub.add_parser("replay")
    rp.add_argument("manifest", type=Path)
    rp.add_argument("--workers", type=int)
    rp.add_argument("--out", type=Path)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "replay":
            return replay(args.manifest, args.out, args.workers)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        resolved = resolve(args.command, args.config, dict(seed=args.seed, workers=args.workers))
        code, _ = execute(resolved, args.out)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, MemoryError) as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConsistencyError, AssertionError) as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERT


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
