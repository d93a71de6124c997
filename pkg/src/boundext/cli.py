"""Command-line front end: build domains, analyse connectivity, run the conformal pipeline.

Exit codes: 0 ok, 1 validation failure, 2 solver failure, 3 usage error.
Errors are reported on stderr as one line ``boundext: <kind>: <reason>``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from gmpy2 import mpq

from .connectivity import (
    ConnectivityError,
    default_k_max,
    load_bcf,
    mlc_table,
    tent_feet_arc_sq,
    turing_reduce,
    validate_bcf,
)
from .domain import DomainError, DomainModel, Kind, build_domain, load_domain, pow2, square_domain
from .figures import domain_svg
from .geometry import GeometryError, QRect, dist2, qpair
from .staged import StageTableError, load_stage_table

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 3


class CliFailure(Exception):
    def __init__(self, code: int, kind: str, reason: str):
        super().__init__(reason)
        self.code, self.kind, self.reason = code, kind, reason


def usage(reason: str) -> CliFailure:
    return CliFailure(EXIT_USAGE, "usage", reason)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would print a multi-line usage block and exit 2
        raise usage(message)


@dataclass
class RunConfig:
    subcommand: str
    table: Optional[Path]
    domain: Optional[Path]
    square: bool
    depth: Optional[int]
    k_max: Optional[int]
    eps: float
    out: Path
    seed: int
    extra: argparse.Namespace


# -- helpers -------------------------------------------------------------------------------------


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / name
    path.write_text(text, encoding="utf-8")
    return path


def _read(path: Path) -> str:
    if not path.is_file():
        raise usage(f"no such file: {path}")
    return path.read_text(encoding="utf-8")


def _domain(cfg: RunConfig) -> DomainModel:
    given = (cfg.table is not None) + (cfg.domain is not None) + bool(cfg.square)
    if given != 1:
        raise usage("give exactly one of --table (with --depth), --domain, --square")
    if cfg.square:
        return square_domain()
    if cfg.domain is not None:
        return load_domain(_read(cfg.domain))
    if cfg.depth is None:
        raise usage("--table needs --depth")
    if cfg.depth < 1:
        raise usage(f"--depth must be at least 1, got {cfg.depth}")
    return build_domain(load_stage_table(_read(cfg.table)), cfg.depth)


def _ground_truth(dm: DomainModel) -> dict[int, bool]:
    return {n: n in dm.staged.entries for n in range(dm.depth)}


# -- gen -----------------------------------------------------------------------------------------------


def cmd_gen(cfg: RunConfig) -> dict:
    dm = _domain(cfg)
    _write(cfg, "domain.json", dm.dumps() + "\n")
    _write(cfg, "domain.svg", domain_svg(dm))
    kinds = [c.kind.value for c in dm.constituents]
    return {
        "depth": dm.depth,
        "constituents": len(kinds),
        "tents": kinds.count(Kind.TENT.value),
        "spikes": kinds.count(Kind.SPIKE.value),
        "files": ["domain.json", "domain.svg"],
    }


# -- analyze -----------------------------------------------------------------------------------------------


def cmd_analyze(cfg: RunConfig) -> dict:
    dm = _domain(cfg)
    if dm.staged is None:
        raise usage("analyze needs a domain built from a stage table")
    k_max = default_k_max(dm) if cfg.k_max is None else cfg.k_max
    if k_max < dm.depth + 1:
        raise usage(f"--kmax must be at least depth+1 = {dm.depth + 1} for the reduction")
    g = mlc_table(dm, k_max)
    report = {"depth": dm.depth, "k_max": k_max, "mlc_table": g.to_document()["g"]}
    report["mlc_valid"] = validate_bcf(dm, g) is None
    truth = _ground_truth(dm)
    answers = turing_reduce(dm, g, check=False)
    report["reduction"] = {str(n): answers[n] for n in sorted(answers)}
    report["ground_truth"] = {str(n): truth[n] for n in sorted(truth)}
    report["agrees"] = answers == truth

    failure = None
    if cfg.extra.bcf is not None:
        user = load_bcf(_read(Path(cfg.extra.bcf)))
        if user.k_max < k_max:
            raise CliFailure(EXIT_VALIDATION, "validation", f"user table stops at k={user.k_max} < {k_max}")
        bad = validate_bcf(dm, user, k_max)
        entry = {"g": user.to_document()["g"], "valid": bad is None}
        if bad is None:
            ans = turing_reduce(dm, user, check=False)
            entry["reduction"] = {str(n): ans[n] for n in sorted(ans)}
            entry["agrees"] = ans == truth
        else:
            entry["counterexample"] = {
                "k": bad.k,
                "p": [qpair(bad.p.re), qpair(bad.p.im)],
                "q": [qpair(bad.q.re), qpair(bad.q.im)],
                "distance": bad.distance,
                "exact": bad.exact,
            }
            failure = f"user table fails at k={bad.k}: |p-q|={bad.distance:.6g} with no short arc"
        report["user_bcf"] = entry
    _write(cfg, "analysis.json", _dump(report))
    if not report["mlc_valid"] or not report["agrees"]:
        raise CliFailure(EXIT_VALIDATION, "validation", "computed table did not reproduce the stage table")
    if failure is not None:
        raise CliFailure(EXIT_VALIDATION, "validation", failure)
    return {"agrees": report["agrees"], "files": ["analysis.json"]}


# -- conformal -----------------------------------------------------------------------------------------------


def random_probe_rects(count: int, seed: int, min_exp: int = 3, max_exp: int = 12) -> list[QRect]:
    """Small open squares centred near the unit circle, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        turn = rng.random()
        m = int(rng.integers(min_exp, max_exp + 1))
        h = mpq(1, 2**m)
        c = complex(math.cos(2 * math.pi * turn), math.sin(2 * math.pi * turn))
        cx, cy = mpq(round(c.real * 2**20), 2**20), mpq(round(c.imag * 2**20), 2**20)
        out.append(QRect.open(cx - h, cx + h, cy - h, cy + h))
    return out


def _rect_doc(R: QRect) -> list:
    return [qpair(v) for v in R.to_list()]


def cmd_conformal(cfg: RunConfig) -> dict:
    from .conformal import (
        ConformalError,
        check_recognizably_bounds,
        oscillation_cover,
        rho_lower_bound,
        solve_map,
        strong_eval,
        witness_bound_check,
    )

    dm = _domain(cfg)
    k_max = 2 if cfg.k_max is None else cfg.k_max
    if not 1 <= k_max <= 6:
        raise usage(f"--kmax must be in 1..6, got {k_max}")
    if not 0 < cfg.eps < 1:
        raise usage(f"--eps must be in (0, 1), got {cfg.eps}")
    started = time.perf_counter()
    try:
        cm = solve_map(dm, eps=cfg.eps)
    except ConformalError as exc:
        raise CliFailure(EXIT_SOLVER, "solver", str(exc)) from None
    files = ["map.json"]
    _write(cfg, "map.json", cm.dumps() + "\n")
    covers = []
    try:
        for k in range(1, k_max + 1):
            cover = oscillation_cover(cm, k)
            covers.append(cover)
            name = f"cover-{k}.json"
            _write(cfg, name, cover.dumps() + "\n")
            files.append(name)
    except ConformalError as exc:
        raise CliFailure(EXIT_SOLVER, "solver", str(exc)) from None

    ev = strong_eval(cm, covers, check=True)
    transcript = []
    for R in random_probe_rects(cfg.extra.probes, cfg.seed):
        res = ev(R)
        transcript.append(
            {
                "input": _rect_doc(R),
                "level": res.level,
                "output": None if res.declined else _rect_doc(res.rect),
            }
        )
    _write(cfg, "strong_eval.json", _dump({"seed": cfg.seed, "calls": transcript}))
    files.append("strong_eval.json")

    rho = rho_lower_bound(cm)
    checks = []
    finest = covers[-1]
    certified = [e for e in finest.elements if e.crosscut is not None]
    rng = np.random.default_rng(cfg.seed)
    pick = sorted(rng.choice(len(certified), size=min(3, len(certified)), replace=False)) if certified else []
    for i in pick:
        e = certified[int(i)]
        rec = check_recognizably_bounds(cm, e.crosscut, e.params)
        wit = witness_bound_check(
            cm, e.crosscut, e.params, pairs=200, seed=cfg.seed, rho_lb=rho, recognition=rec
        )
        checks.append({"element": int(i), "recognition": rec.to_document(), "witness": wit.to_document()})
    reports = {
        "map": {"residual": cm.residual, "error": cm.error, "solver": cm.kind},
        "rho_lower_bound": qpair(rho),
        "covers": {str(c.k): len(c) for c in covers},
        "strong_eval": {
            "calls": len(transcript),
            "answered": sum(t["output"] is not None for t in transcript),
        },
        "theorem_checks": checks,
        "notes": ["boundary images at nu_0 are not checked at finite depth"],
    }
    _write(cfg, "reports.json", _dump(reports))
    files.append("reports.json")
    return {
        "covers": len(covers),
        "residual": cm.residual,
        "seconds": round(time.perf_counter() - started, 1),
        "files": files,
    }


# -- enum -----------------------------------------------------------------------------------------------------


def cmd_enum(cfg: RunConfig) -> dict:
    from .effective import enum_closed_X, enum_open_D

    dm = _domain(cfg)
    if cfg.extra.count < 0:
        raise usage("--count must be non-negative")
    make = {"open-D": enum_open_D, "closed-X": enum_closed_X}[cfg.extra.stream]
    stream = make(dm, cfg.extra.max_level)
    rows = []
    for level, R in stream.with_levels():
        if len(rows) >= cfg.extra.count:
            break
        rows.append({"level": level, "kind": R.kind, "rect": _rect_doc(R)})
    name = f"enum-{cfg.extra.stream}.json"
    _write(cfg, name, _dump({"stream": cfg.extra.stream, "rects": rows}))
    return {"emitted": len(rows), "files": [name]}


# -- check ---------------------------------------------------------------------------------------------------------


def _check_gap_identity(dm: DomainModel, cfg: RunConfig) -> dict:
    rows = []
    for j in range(dm.depth):
        s = dm.staged.entries.get(j)
        if s is None:
            continue
        a, b = dm.vertices[3 * j + 4], dm.vertices[3 * j + 6]
        rows.append({"j": j, "s": s, "ok": dist2(a, b) == pow2(-(j + 2 + s)) ** 2})
    return {"rows": rows, "passed": all(r["ok"] for r in rows)}


def _check_arc_floor(dm: DomainModel, cfg: RunConfig) -> dict:
    rows = []
    for c in dm.constituents:
        if c.kind == Kind.TENT:
            j = c.tent_index
            rows.append({"j": j, "ok": tent_feet_arc_sq(dm, j) >= pow2(-(j + 1)) ** 2})
    return {"rows": rows, "passed": all(r["ok"] for r in rows)}


def _check_reduction(dm: DomainModel, cfg: RunConfig) -> dict:
    g = mlc_table(dm)
    valid = validate_bcf(dm, g) is None
    agrees = turing_reduce(dm, g, check=False) == _ground_truth(dm)
    return {"mlc_table": g.to_document()["g"], "valid": valid, "agrees": agrees, "passed": valid and agrees}


def _check_strong(dm: DomainModel, cfg: RunConfig) -> dict:
    from .conformal import ConformalError, oscillation_cover, solve_map, strong_eval

    try:
        cm = solve_map(dm, eps=cfg.eps)
        covers = [oscillation_cover(cm, k) for k in range(1, (cfg.k_max or 2) + 1)]
    except ConformalError as exc:
        raise CliFailure(EXIT_SOLVER, "solver", str(exc)) from None
    ev = strong_eval(cm, covers, check=False)
    bad = answered = 0
    for R in random_probe_rects(cfg.extra.probes, cfg.seed):
        out = ev(R)
        if out.declined:
            continue
        answered += 1
        lo_x, hi_x, lo_y, hi_y = (float(v) for v in out.rect.to_list())
        err = cm.error
        inside = (
            (out.values.real - err >= lo_x).all()
            and (out.values.real + err <= hi_x).all()
            and (out.values.imag - err >= lo_y).all()
            and (out.values.imag + err <= hi_y).all()
        )
        bad += not inside
    return {"calls": cfg.extra.probes, "answered": answered, "violations": bad, "passed": bad == 0}


CHECKS = {
    "gap-identity": _check_gap_identity,
    "arc-floor": _check_arc_floor,
    "reduction": _check_reduction,
    "strong-correctness": _check_strong,
}


def cmd_check(cfg: RunConfig) -> dict:
    dm = _domain(cfg)
    name = cfg.extra.name
    if dm.staged is None and name != "strong-correctness":
        raise usage(f"check {name} needs a domain built from a stage table")
    result = CHECKS[name](dm, cfg)
    _write(cfg, f"check-{name}.json", _dump(result))
    if not result["passed"]:
        raise CliFailure(EXIT_VALIDATION, "validation", f"check {name} failed")
    return {"check": name, "passed": True, "files": [f"check-{name}.json"]}


COMMANDS = {
    "gen": cmd_gen,
    "analyze": cmd_analyze,
    "conformal": cmd_conformal,
    "enum": cmd_enum,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="boundext", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--table", type=Path, help="stage-table document (JSON)")
        sp.add_argument("--depth", type=int, help="truncation depth J")
        sp.add_argument("--domain", type=Path, help="domain document written by gen")
        sp.add_argument("--square", action="store_true", help="use the unit-square fixture")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--kmax", type=int, dest="k_max")
        sp.add_argument("--eps", type=float, default=1e-8, help="map residual target")
        return sp

    common(sub.add_parser("gen", help="write a domain document and its SVG"))
    a = common(sub.add_parser("analyze", help="connectivity table, validation and reduction"))
    a.add_argument("--bcf", help="user connectivity table to validate")
    c = common(sub.add_parser("conformal", help="map, oscillation covers, strong evaluation demo"))
    c.add_argument("--probes", type=int, default=40, help="strong_eval demo calls")
    e = common(sub.add_parser("enum", help="dump a prefix of a rectangle stream"))
    e.add_argument("--stream", choices=["open-D", "closed-X"], default="closed-X")
    e.add_argument("--count", type=int, default=50)
    e.add_argument("--max-level", type=int, default=6)
    k = common(sub.add_parser("check", help="run a named theorem check"))
    k.add_argument("name", choices=sorted(CHECKS))
    k.add_argument("--probes", type=int, default=100)
    return p


def run(argv: Optional[Sequence[str]] = None) -> tuple[int, dict]:
    try:
        ns = build_parser().parse_args(argv)
        cfg = RunConfig(
            ns.subcommand, ns.table, ns.domain, ns.square, ns.depth, ns.k_max, ns.eps, ns.out, ns.seed, ns
        )
        return EXIT_OK, COMMANDS[cfg.subcommand](cfg)
    except CliFailure as exc:
        return exc.code, {"error": exc.kind, "reason": exc.reason}
    except (StageTableError, DomainError, ConnectivityError, GeometryError) as exc:
        return EXIT_VALIDATION, {"error": "validation", "reason": str(exc)}


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, payload = run(argv)
    if code == EXIT_OK:
        print(json.dumps(payload, sort_keys=True))
    else:
        reason = " ".join(str(payload["reason"]).split())
        print(f"boundext: {payload['error']}: {reason}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
