"""Command-line front end.

Verdicts go to standard output, one line per entailment; diagnostics go to
standard error.  Exit codes: 0 valid, 1 invalid, 2 condition violated,
3 parse or usage error, 4 resource exceeded.  In batch mode the exit code
is the largest one among the entries.
"""
from __future__ import annotations

import argparse
import collections
import re
import sys
from dataclasses import dataclass

from . import presburger as pb
from .errors import FragmentError, ParseError, ResourceExceeded
from .oracle import Bounds, find_countermodel
from .parser import parse_entailment
from .sla import SlaOptions, decide_sla, size_condition_violation, sorted_cases
from .slal import prove_slal
from .syntax import Entailment, is_list_free
from .verdict import Outcome

USAGE_ERROR = 3


@dataclass(frozen=True)
class CliConfig:
    mode: str = "auto"
    pt: int | None = None
    proof: bool = False
    emit_smt: str | None = None
    oracle_check: Bounds | None = None
    backend: str = "internal"
    trace: bool = False


class UsageError(Exception):
    pass


def _bounds(text: str) -> Bounds:
    m = re.fullmatch(r"\s*(\d+)\s*,\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError("expected VMAX,HMAX")
    return Bounds(int(m.group(1)), int(m.group(2)))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slentail", description="Decide separation-logic entailments with arrays and lists.")
    ap.add_argument("file", nargs="?", help="input file (default: standard input)")
    ap.add_argument("--mode", choices=("auto", "sla", "slal"), default="auto")
    ap.add_argument("--pt", type=int, default=None, help="points-to arity (default: inferred)")
    ap.add_argument("--proof", action="store_true", help="print derivations or Presburger sentences")
    ap.add_argument("--emit-smt", metavar="PATH", help="write SMT-LIB2 scripts to PATH")
    ap.add_argument("--oracle-check", metavar="VMAX,HMAX", type=_bounds,
                    help="cross-check with bounded countermodel search")
    ap.add_argument("--backend", choices=("internal", "smtlib-export-only"), default="internal")
    ap.add_argument("--trace", action="store_true", help="report translation clause counts")
    ap.add_argument("--batch", action="store_true", help="entailments separated by blank lines")
    return ap


def split_batch(text: str) -> list[str]:
    return [chunk.strip() for chunk in re.split(r"\n\s*\n", text) if chunk.strip()]


def _smt_scripts(e: Entailment, pt) -> list[str]:
    return [pb.to_smtlib(case.sentence()) for case in sorted_cases(e, SlaOptions(pt=pt))]


def _check_config(cfg: CliConfig, e: Entailment) -> str:
    lists = not is_list_free(e)
    if cfg.pt is not None and cfg.pt < 1:
        raise UsageError("--pt must be at least 1")
    if lists and cfg.pt not in (None, 2):
        raise UsageError("list predicates require --pt 2")
    if lists and cfg.mode == "sla":
        raise UsageError("--mode sla given but the input contains list predicates")
    if cfg.mode == "auto":
        return "slal" if lists else "sla"
    return cfg.mode


def run_one(text: str, cfg: CliConfig, out, err) -> int:
    try:
        e = parse_entailment(text, pt=cfg.pt)
        mode = _check_config(cfg, e)
    except ParseError as exc:
        print(f"parse error: {exc}", file=err)
        return USAGE_ERROR
    except (UsageError, FragmentError) as exc:
        print(f"usage error: {exc}", file=err)
        return USAGE_ERROR

    if cfg.backend == "smtlib-export-only":
        if mode != "sla":
            print("usage error: SMT-LIB export covers the array fragment only", file=err)
            return USAGE_ERROR
        bad = size_condition_violation(e)
        if bad is not None:
            print(f"condition-violated: {bad}", file=out)
            return 2
        scripts = _smt_scripts(e, cfg.pt)
        _write_scripts(scripts, cfg.emit_smt, out)
        return 0

    try:
        if mode == "sla":
            verdict = decide_sla(e, SlaOptions(pt=cfg.pt))
            result = None
        else:
            result = prove_slal(e)
            verdict = result.verdict
    except FragmentError as exc:
        print(f"usage error: {exc}", file=err)
        return USAGE_ERROR
    print(verdict, file=out)

    try:
        if cfg.proof:
            _print_proof(e, mode, result, cfg, out)
        if cfg.trace and mode == "sla" and verdict.outcome is not Outcome.CONDITION_VIOLATED:
            _print_trace(e, cfg, err)
        if cfg.emit_smt and verdict.outcome is not Outcome.CONDITION_VIOLATED:
            scripts = _smt_scripts(e, cfg.pt) if mode == "sla" else _leaf_scripts(result, cfg.pt)
            _write_scripts(scripts, cfg.emit_smt, out)
    except ResourceExceeded as exc:
        print(f"resource limit while reporting: {exc}", file=err)

    if cfg.oracle_check is not None:
        _oracle_report(e, verdict, cfg.oracle_check, out)
    return verdict.exit_code


def _print_proof(e, mode, result, cfg, out):
    if mode == "sla":
        if size_condition_violation(e) is not None:
            return
        for k, case in enumerate(sorted_cases(e, SlaOptions(pt=cfg.pt)), 1):
            order = " * ".join(map(str, case.antecedent)) or "Emp"
            print(f"case {k}: {order}", file=out)
            print(f"  {case.sentence()}", file=out)
        return
    for j, tree in zip(result.judgments, result.proofs):
        if tree is None:
            print(f"FAIL: {j}", file=out)
        else:
            print(tree.render(), file=out)


def _print_trace(e, cfg, err):
    counts: collections.Counter = collections.Counter()
    for case in sorted_cases(e, SlaOptions(pt=cfg.pt)):
        counts.update(case.stats.get("clauses", {}))
    if counts:
        print("trace: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())), file=err)


def _leaf_scripts(result, pt) -> list[str]:
    from .slal import RuleId
    scripts = []

    def walk(tree):
        if tree.rule is RuleId.START:
            scripts.extend(_smt_scripts(tree.conclusion.entailment(), pt))
        for p in tree.premises:
            walk(p)

    for tree in result.proofs:
        if tree is not None:
            walk(tree)
    return scripts


def _write_scripts(scripts, path, out):
    text = "\n(reset)\n".join(scripts) + ("\n" if scripts else "")
    if path is None or path == "-":
        out.write(text)
    else:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(text)


def _oracle_report(e, verdict, bounds, out):
    if verdict.outcome not in (Outcome.VALID, Outcome.INVALID) or not e.antecedent.is_qf:
        print("oracle: skipped", file=out)
        return
    found = find_countermodel(e, bounds)
    if found is None:
        agree = verdict.is_valid
        note = "no countermodel within bounds"
    else:
        agree = not verdict.is_valid
        store, heap = found
        note = "countermodel " + ", ".join(f"{k}={v}" for k, v in sorted(store.items())) + f" heap {heap}"
    print(f"oracle: {'agrees' if agree else 'disagrees'} ({note})", file=out)


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    cfg = CliConfig(ns.mode, ns.pt, ns.proof, ns.emit_smt, ns.oracle_check, ns.backend, ns.trace)
    if ns.file:
        try:
            with open(ns.file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"usage error: {exc}", file=err)
            return USAGE_ERROR
    else:
        text = (stdin or sys.stdin).read()
    if cfg.emit_smt and cfg.emit_smt != "-":
        open(cfg.emit_smt, "w", encoding="utf-8").close()
    entries = split_batch(text) if ns.batch else [text]
    if not entries:
        print("parse error: empty input", file=err)
        return USAGE_ERROR
    return max(run_one(t, cfg, out, err) for t in entries)


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
