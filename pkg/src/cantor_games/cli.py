"""``cantor-games run|sweep|verify``.

Exit codes: 0 completed / clean, 2 bad config, 3 rule violation,
4 falsification, 5 verification failure.
"""

import argparse
import csv
import itertools
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from .designs import (
    DesignError, DesignList, check_incidence, design_length, gen_index_list,
    projective_plane, read_plane_csv, verify_item1, verify_item2_small,
)
from .dyadic import parse_dyadic
from .game import (
    ConfigError, config_from_pairs, parse_config_pairs, run_match,
    verify_transcript,
)
from .registry import make_alice, make_bob

log = logging.getLogger("cantor_games")

EXIT_OK, EXIT_CONFIG, EXIT_RULE, EXIT_FALSIFIED, EXIT_VERIFY = 0, 2, 3, 4, 5

REPORT_FIELDS = [
    "row", "stage", "zoneA", "zoneB", "growth", "substages", "star_size",
    "active", "blames", "regions", "friends", "leaders", "N_k",
    "outcome", "wall_time",
]


def exit_code(outcome):
    if outcome.startswith("rule-violation"):
        return EXIT_RULE
    if outcome.startswith("falsification"):
        return EXIT_FALSIFIED
    return EXIT_OK


def report_rows(final, wall_time=""):
    """Per-stage rows plus one summary row, from a transcript's final record."""
    m = final.get("metrics", {})
    a, b = m.get("alice", {}) or {}, m.get("bob", {}) or {}
    outcome = final.get("outcome", "")
    rows = []
    for st in a.get("stages", []):
        rows.append({
            "row": "stage", "stage": st["stage"], "zoneA": st["zoneA"],
            "zoneB": st["zoneB"], "growth": st["growth"],
            "substages": st["substages"], "star_size": st["star_size"],
            "active": st.get("active", ""), "outcome": outcome,
        })
    rows.append({
        "row": "summary", "stage": "", "blames": b.get("blames", ""),
        "regions": b.get("regions_assigned", ""),
        "friends": b.get("friend_pairs", b.get("friends", "")),
        "leaders": b.get("leaders", ""), "N_k": a.get("N_k", ""),
        "outcome": outcome, "wall_time": wall_time,
    })
    return rows


def write_report(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, REPORT_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in REPORT_FIELDS})


def _override(cfg_pairs, seed):
    pairs = dict(cfg_pairs)
    if seed is not None:
        pairs["seed"] = str(seed)
    return pairs


# ------------------------------------------------------------------ run

def run_task(pairs, out, max_moves=None):
    """Run one config; returns (exit code, summary dict)."""
    task = pairs.get("task", "match")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if task == "match":
        pairs = {k: v for k, v in pairs.items() if k != "task"}
        cfg = config_from_pairs(pairs)
        bob = make_bob(cfg)
        alice = make_alice(cfg, bob)
        (out / "config.txt").write_text(cfg.to_text())
        t0 = time.time()
        with open(out / "transcript.ndjson", "w") as sink:
            tr = run_match(cfg, alice, bob, max_moves=max_moves, sink=sink, keep=False)
        wall = f"{time.time() - t0:.3f}"
        write_report(out / "report.csv", report_rows(tr.final, wall))
        return exit_code(tr.outcome), {"outcome": tr.outcome, **_summary(tr.metrics)}
    if task == "design":
        r, N = int(pairs.get("r", 4)), int(pairs.get("N", 32))
        ell = int(pairs.get("ell", 0)) or design_length(r, N, e=int(pairs.get("e", 16)))
        xi = _rational(pairs.get("xi", "9/20"))
        dl = gen_index_list(ell, r, N, seed=int(pairs.get("seed", 0)), s=int(pairs.get("s", 2)), xi=xi)
        dl.write(out / "design.txt")
        bad = verify_item1(dl, depth=min(3, N), xi=xi)
        return EXIT_OK, {"outcome": "pass" if bad is None else "fail", "ell": ell}
    if task == "plane":
        p = projective_plane(int(pairs.get("q", 3)))
        p.write_csv(out / "plane.csv")
        return EXIT_OK, {"outcome": "pass", "q": p.q}
    raise ConfigError(f"unknown task {task!r}")


def _rational(text):
    return parse_dyadic(text) if "^" in text else Fraction(text)


def _summary(metrics):
    a = metrics.get("alice", {}) or {}
    b = metrics.get("bob", {}) or {}
    return {
        "moves": metrics.get("moves"),
        "ball_check": metrics.get("ball_check"),
        "stages_completed": a.get("stages_completed", ""),
        "zone_growth_ok": a.get("zone_growth_ok", ""),
        "N_k": a.get("N_k", ""),
        "blames": b.get("blames", ""),
        "max_blames": b.get("max_blames", ""),
    }


def cmd_run(args):
    try:
        pairs = _override(parse_config_pairs(Path(args.config).read_text()), args.seed)
        code, summary = run_task(pairs, args.out, args.max_moves)
    except (ConfigError, DesignError, OSError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(summary))
    if code == EXIT_RULE:
        who = "alice" if "by-alice" in summary["outcome"] else "bob"
        print(f"rule violation by {who}: {summary['outcome']}", file=sys.stderr)
    return code


# ------------------------------------------------------------------ sweep

def grid_cells(pairs):
    """Split ``grid.KEY = v1;v2`` entries off a config and expand them."""
    base = {k: v for k, v in pairs.items() if not k.startswith("grid.")}
    axes = sorted((k[5:], [x.strip() for x in v.split(";") if x.strip()])
                  for k, v in pairs.items() if k.startswith("grid."))
    if not axes or any(not vals for _, vals in axes):
        return base, [], []
    names = [k for k, _ in axes]
    cells = [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in axes))]
    return base, names, cells


def _run_cell(job):
    i, base, cell, out, max_moves = job
    pairs = dict(base, **cell)
    row = dict(cell, cell=i)
    try:
        code, summary = run_task(pairs, Path(out) / f"cell{i:04d}", max_moves)
        row.update(summary, exit=code)
    except (ConfigError, DesignError, ValueError, KeyError) as exc:
        row.update(outcome=f"config-error: {exc}", exit=EXIT_CONFIG)
    return row


def cmd_sweep(args):
    try:
        pairs = parse_config_pairs(Path(args.config).read_text())
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    base, names, cells = grid_cells(pairs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(i, base, c, str(out), args.max_moves) for i, c in enumerate(cells)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_run_cell, jobs))
    else:
        rows = [_run_cell(j) for j in jobs]
    passes = [r for r in rows if r.get("outcome") == "pass"]
    rate = f"{len(passes)}/{len(rows)}" if rows else ""
    fields = ["cell"] + names + ["outcome", "exit", "moves", "ball_check",
                                 "stages_completed", "zone_growth_ok", "N_k",
                                 "blames", "max_blames", "pass_rate"]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({**{k: r.get(k, "") for k in fields}, "pass_rate": rate})
    print(f"{len(rows)} cells -> {out / 'sweep.csv'}")
    return EXIT_OK


# ------------------------------------------------------------------ verify

def sniff(path):
    with open(path) as fh:
        head = fh.readline().strip()
    if head.startswith("{"):
        return "transcript"
    if head.replace(" ", "") == "line,point":
        return "plane"
    return "design"


def verify_artifact(path):
    """Return None when the artifact re-checks clean, else the first problem."""
    kind = sniff(path)
    if kind == "transcript":
        return verify_transcript(path)
    try:
        if kind == "plane":
            q, npts, lines = read_plane_csv(path)
            bad = check_incidence(q, npts, lines)
            return None if bad is None else f"plane property failed: {bad}"
        dl = DesignList.read(path)
    except (DesignError, ValueError) as exc:
        return f"malformed {kind}: {exc}"
    bad = verify_item1(dl, depth=min(3, dl.N))
    if bad is not None:
        return f"item1 failed at {bad[0]}: {bad[1]} vs {bad[2]}"
    if dl.ell <= 20 and dl.N <= 12:
        bad = verify_item2_small(dl)
        if bad is not None:
            return f"item2 failed at item {bad[0]}"
    return None


def cmd_verify(args):
    paths = []
    for p in args.paths:
        p = Path(p)
        if p.is_dir():
            paths += sorted(x for x in p.rglob("*") if x.suffix in (".ndjson", ".csv", ".txt")
                            and x.name not in ("report.csv", "sweep.csv", "config.txt"))
        else:
            paths.append(p)
    if not paths:
        print("nothing to verify", file=sys.stderr)
        return EXIT_VERIFY
    for p in paths:
        try:
            bad = verify_artifact(p)
        except OSError as exc:
            bad = str(exc)
        if bad is not None:
            print(f"{p}: {bad}", file=sys.stderr)
            return EXIT_VERIFY
        log.info("%s: ok", p)
    print(f"verified {len(paths)} artifact(s)")
    return EXIT_OK


# ------------------------------------------------------------------ main

def build_parser():
    ap = argparse.ArgumentParser(prog="cantor-games")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("run", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-moves", type=int)
        p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("verify")
    p.add_argument("paths", nargs="+")
    return ap


def main(argv=None):
    logging.basicConfig(level=os.environ.get("CANTOR_GAMES_LOG", "WARNING").upper(),
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify}[args.cmd](args)


if __name__ == "__main__":
    sys.exit(main())
