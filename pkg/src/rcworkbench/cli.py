"""Command-line front end: ``rcworkbench run SPEC`` and ``rcworkbench selftest``.

A spec is a JSON object ``{"kind": ..., "seed": ..., "params": {...}}``.
Unknown fields are rejected.  The report embeds the normalized spec and is
byte-for-byte reproducible: wall-clock timings are only added on request.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional

from . import __version__
from . import assembly as AS
from . import cpplus as CP
from . import kernel as K
from . import lambda_system as LS
from . import tight as T
from . import transversals as TR
from .chain import PresentationError
from .selftest import run_selftest

KINDS = ("tight-coding", "cp-plus", "lambda-system", "as-construction", "transversal", "selftest")

# field -> default (None means required); documented in the README
PARAMS = {
    "tight-coding": {"k_max": None, "S": [], "budget": 6, "ladders": None, "compare_with": None,
                     "zero_product": None, "closed_form": True},
    "cp-plus": {"n": None, "w": 0, "l_max": 3, "J": [], "prefix": None},
    "lambda-system": {"fixture": None, "system": None, "family": None, "bound": 0, "node_budget": 10000},
    "as-construction": {"fixture": None, "system": None, "family": None, "markers": None,
                        "cpp": {"n": 2, "l_max": 1, "w": 0}},
    "transversal": {"sets": None, "fixture": None, "random": None},
    "selftest": {"suites": None},
}
TOP_FIELDS = {"kind", "seed", "params", "description"}


class SpecError(ValueError):
    def __init__(self, message: str, locus: str = ""):
        super().__init__(f"{locus}: {message}" if locus else message)
        self.locus = locus


@dataclass
class RunSpec:
    kind: str
    seed: int
    params: dict
    description: str = ""

    def to_json(self) -> dict:
        out = {"kind": self.kind, "seed": self.seed, "params": self.params}
        if self.description:
            out["description"] = self.description
        return out


def _line_of(text: str, key: str) -> Optional[int]:
    needle = json.dumps(key)
    pos = text.find(needle)
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _locus(text: str, path: str, key: str) -> str:
    line = _line_of(text, key) if text else None
    return f"{path} (line {line})" if line else path


def parse_spec(source: str, is_path: bool = False) -> RunSpec:
    """Strict parse of a spec given as text (or a path when ``is_path``)."""
    text = source
    if is_path:
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise SpecError(str(exc), source) from None
    if not text.strip():
        raise SpecError("empty document", "line 1")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(data, dict):
        raise SpecError("top level must be an object", "line 1")
    for key in data:
        if key not in TOP_FIELDS:
            raise SpecError(f"unknown field {key!r}", _locus(text, key, key))
    kind = data.get("kind")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {', '.join(KINDS)}", _locus(text, "kind", "kind"))
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SpecError("seed must be an integer", _locus(text, "seed", "seed"))
    raw = data.get("params", {})
    if not isinstance(raw, dict):
        raise SpecError("params must be an object", _locus(text, "params", "params"))
    allowed = PARAMS[kind]
    for key in raw:
        if key not in allowed:
            raise SpecError(f"unknown field {key!r} for kind {kind}", _locus(text, f"params.{key}", key))
    params = {}
    for key, default in allowed.items():
        if key in raw:
            params[key] = raw[key]
        elif default is not None:
            params[key] = default
    spec = RunSpec(kind, seed, params, data.get("description", ""))
    _check(spec, text)
    return spec


def _need_int(params, key, text, low=None):
    v = params.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or (low is not None and v < low):
        bound = f" >= {low}" if low is not None else ""
        raise SpecError(f"{key} must be an integer{bound}", _locus(text, f"params.{key}", key))
    return v


def _check(spec: RunSpec, text: str) -> None:
    p = spec.params
    try:
        if spec.kind == "tight-coding":
            k_max = _need_int(p, "k_max", text, 1)
            budget = _need_int(p, "budget", text, 1)
            for key in ("S", "compare_with"):
                for a in p.get(key) or []:
                    o = T.parse_ordinal(a)
                    if not o.is_limit or o.k >= k_max:
                        raise SpecError(f"{o} is not a limit ordinal below ω·{k_max}", _locus(text, f"params.{key}", key))
            for y in p.get("zero_product") or []:
                T.parse_ordinal(y)
            K.check_capacity(k_max * budget)
            if k_max * budget > 4096:
                raise K.CapacityError(f"{k_max * budget} generators")
        elif spec.kind == "cp-plus":
            n = _need_int(p, "n", text, 1)
            l_max = _need_int(p, "l_max", text, 1)
            w = _need_int(p, "w", text, 0)
            CP.CppParams(n, l_max, w).check_capacity()
            for i, J in enumerate(p.get("J", [])):
                for pair in J:
                    if not (isinstance(pair, list) and len(pair) == 2 and 1 <= pair[0] <= n and 0 <= pair[1] < l_max):
                        raise SpecError(f"J[{i}]: {pair} is not a (block 1..{n}, row 0..{l_max - 1}) pair",
                                        _locus(text, f"params.J[{i}]", "J"))
        elif spec.kind in ("lambda-system", "as-construction"):
            if p.get("fixture") is None and (p.get("system") is None or p.get("family") is None):
                raise SpecError("give a fixture name/path or inline system and family", _locus(text, "params", "params"))
            if spec.kind == "as-construction":
                c = p["cpp"]
                if set(c) - {"n", "l_max", "w"}:
                    extra = sorted(set(c) - {"n", "l_max", "w"})[0]
                    raise SpecError(f"unknown field {extra!r}", _locus(text, f"params.cpp.{extra}", extra))
                cp = CP.CppParams(int(c.get("n", 2)), int(c.get("l_max", 1)), int(c.get("w", 0)))
                cp.check_capacity()
                _, fam, _ = _load_system(p)
                total = 1
                for _ in fam.blocks:
                    total *= build_size(cp)
                K.check_capacity(total)
        elif spec.kind == "transversal":
            given = [k for k in ("sets", "fixture", "random") if p.get(k) is not None]
            if len(given) != 1:
                raise SpecError("give exactly one of sets, fixture, random", _locus(text, "params", "params"))
    except K.CapacityError as exc:
        raise SpecError(f"capacity: {exc}", "params") from None
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc), "params") from None


def build_size(cp: CP.CppParams) -> int:
    """Atom count of one L copy."""
    return CP.build_cpp(cp).L.atom_count


def _load_system(p: dict):
    if p.get("fixture") is not None:
        fx = LS.load_fixture(p["fixture"])
        return fx["system"], fx["family"], fx["markers"]
    system = LS.system_from_json(p["system"])
    return system, LS.family_from_json(system, p["family"]), []


# -- runners -------------------------------------------------------------------------


class Outcome:
    def __init__(self):
        self.result: dict = {}
        self.violations: list = []
        self.findings: list = []


def _ord(a) -> list:
    return T.parse_ordinal(a).to_json()


def run_tight(p: dict, jobs: int = 1) -> Outcome:
    out = Outcome()
    ladders = None
    if p.get("ladders"):
        ladders = T.LadderSystem(
            p["k_max"],
            {T.parse_ordinal(k): [T.parse_ordinal(d) for d in v] for k, v in sorted(p["ladders"].items())},
        )
    tc = T.build_tight_coding(p.get("S", []), p["k_max"], p["budget"], ladders)
    tc.presented.check_injective()
    out.violations += T.check_recursion(tc)
    limits = [a for a in tc.ordinals if a.is_limit]

    def job(alpha):
        if alpha in tc.S:
            return T.verify_non_rc(tc, alpha).to_json(alpha_repr=lambda a: a.to_json())
        rep = T.verify_rc(tc, alpha, closed_form=False)
        cert = rep.certificate.to_json(alpha_repr=lambda a: a.to_json())
        return cert

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        certs = list(pool.map(job, limits))
    for alpha, c in zip(limits, certs):
        c["id"] = f"{'non-rc' if alpha in tc.S else 'rc'}:{alpha}"
        if c["kind"] == "refutation":
            out.violations.append(f"no non-principality certificate at {alpha}: {c['reason']}")
        elif alpha not in tc.S and not c.get("stable", False):
            out.violations.append(f"rc stamps do not stabilize at {alpha}")
    fp = T.fingerprint(tc)
    if fp != sorted(tc.S):
        out.violations.append(f"fingerprint {[str(a) for a in fp]} differs from S")
    result = {
        "generators": len(tc.ordinals),
        "relations": len(tc.presented.relations),
        "S": [a.to_json() for a in sorted(tc.S)],
        "certificates": certs,
        "fingerprint": [a.to_json() for a in fp],
    }
    if p.get("closed_form", True):
        closed = T.check_closed_form(tc)
        bad = [r for r in closed if not r.agrees]
        out.violations += [f"closed form differs for β={r.beta}, δ={r.delta}, stage {r.stage}" for r in bad]
        result["closed_form"] = {"checks": len(closed), "disagreements": len(bad),
                                 "non_initial_segments": sum(not r.initial_segment for r in closed)}
    if p.get("compare_with") is not None:
        rep = T.distinguish(p.get("S", []), p["compare_with"], p["k_max"], p["budget"], ladders)
        result["distinguish"] = rep.to_json()
        if sorted(T.parse_ordinal(a) for a in p["compare_with"]) != rep.fingerprint2:
            out.violations.append("fingerprint of the comparison set differs from that set")
    if p.get("zero_product") is not None:
        Y = [T.parse_ordinal(y) for y in p["zero_product"]]
        bad = T.zero_product_disagreements(tc, Y)
        result["zero_product"] = {"Y": [y.to_json() for y in Y], "disagreements": bad}
        out.violations += [f"zero product disagreement at {b}" for b in bad]
    out.result = result
    return out


def run_cpp(p: dict) -> Outcome:
    out = Outcome()
    n, w, top = p["n"], p["w"], p["l_max"]
    result: dict = {}
    if top >= 2:
        cert = CP.verify_clause_ii(n, w, top).to_json()
        cert["id"] = "non-rc:H"
        result["clause_ii"] = cert
    laws = []
    for t in CP.sweep(n, w, top).triples:
        v = CP.exact_ideal_violations(t) + CP.block_law_violations(t)
        out.violations += [f"l_max={t.params.l_max}: {x}" for x in v]
        wit = CP.free_over_witness(t)
        if wit is None or len(wit) != w:
            out.violations.append(f"l_max={t.params.l_max}: L is not free over K")
        laws.append({"l_max": t.params.l_max, "H_atoms": t.H.atom_count, "K_atoms": t.K.atom_count,
                     "L_atoms": t.L.atom_count, "law_violations": v,
                     "free_witness_size": None if wit is None else len(wit)})
    result["truncations"] = laws
    clause_i = []
    for idx, J in enumerate(p.get("J", [])):
        try:
            c = CP.verify_clause_i(n, [tuple(x) for x in J], w, top, p.get("prefix"))
        except CP.AdmissibilityError as exc:
            clause_i.append({"id": f"rc:J{idx}", "J": J, "admissible": False, "reason": str(exc)})
            continue
        entry = c.to_json()
        entry.update({"id": f"rc:J{idx}", "admissible": True})
        clause_i.append(entry)
        if not c.stable:
            out.violations.append(f"clause (i) unstable for J{idx}")
        if not all(k.lpr_matches for k in c.key_step):
            out.violations.append(f"key step mismatch for J{idx}")
        if not all(k.literal_claim == (k.m == 0) for k in c.key_step):
            out.findings.append(f"J{idx}: nothing of H_m below x only when the block is omitted entirely")
    result["clause_i"] = clause_i
    result["k_over_h_ladder"] = CP.k_over_h_ladder(n, top).stages
    out.result = result
    return out


def run_lambda(p: dict) -> Outcome:
    out = Outcome()
    system, fam, _ = _load_system(p)
    problems = LS.validate_system(system) + LS.validate_family(fam)
    result: dict = {"validation": problems, "height": LS.height(system), "finals": [list(e) for e in system.finals]}
    out.findings += problems
    bound, budget = p.get("bound", 0), p.get("node_budget", 10000)
    finals = system.finals
    if finals and not problems:
        try:
            order = LS.reshuffle_order(fam, finals, finals[0], bound, budget)
            if LS.check_order_1(fam, finals, finals[0], order, bound):
                out.violations.append("reshuffle order fails its re-check")
            result["order_1"] = [list(e) for e in order]
        except LS.ReshuffleFailure as exc:
            result["order_1"] = None
            out.findings.append(str(exc))
        orders2 = []
        for mu in [n for n in system.nodes if not system.is_final(n)]:
            I = [e for e in finals if LS.is_proper_prefix(mu, e)]
            for alpha in system.children(mu):
                try:
                    order = LS.reshuffle_order_2(fam, mu, alpha, I, bound, budget)
                    if LS.check_order_2(fam, mu, alpha, I, order, bound):
                        out.violations.append(f"order for mu={list(mu)}, alpha={alpha} fails its re-check")
                    orders2.append({"mu": list(mu), "alpha": alpha, "order": [list(e) for e in order]})
                except LS.ReshuffleFailure as exc:
                    orders2.append({"mu": list(mu), "alpha": alpha, "order": None})
                    out.findings.append(str(exc))
        result["orders_2"] = orders2
        af = TR.almost_free_sweep(TR.family_from_lambda_system(fam))
        result["set_family"] = af.to_json()
    out.result = result
    return out


def run_assembly(p: dict) -> Outcome:
    out = Outcome()
    system, fam, markers = _load_system(p)
    if p.get("markers") is not None:
        markers = list(p["markers"])
    c = p["cpp"]
    asm = AS.build_AS(fam, CP.CppParams(int(c.get("n", 2)), int(c.get("l_max", 1)), int(c.get("w", 0))))
    out.violations += AS.theta_soundness(asm)
    c1, c2 = AS.claim_pairs(asm)
    claims = []
    for a, b in c1:
        r = AS.claim1_verify(asm, a, b)
        claims.append({"id": f"claim1:{a + 1}->{b}", **r.to_json()})
        if not r.ok:
            out.findings.append(f"A_{b} is not free over A_{a + 1} at this truncation")
    h = LS.height(system)
    if h is not None and h >= 2:
        for a, b in c2:
            r = AS.claim2_verify(asm, a, b)
            claims.append({"id": f"claim2:{a},{b}", **r.to_json()})
            if not r.ok:
                out.findings.append(f"A_({a},{b}) is not free over A_{a} at this truncation")
        rcs = []
        for a in asm.root_range:
            r = AS.rc_at_marked_stages(asm, a, markers)
            rcs.append({"id": f"rc-stage:{a}", **r.to_json()})
            if not r.lpr_ok:
                out.violations.append(f"lpr into A_{a} fails")
    else:
        rcs = []
    gamma = AS.gamma_diagnostic(asm)
    if markers is not None and gamma.flagged != sorted(markers):
        out.findings.append(f"Γ shadow {gamma.flagged} differs from markers {sorted(markers)}")
    out.result = {
        "atoms": {"G": asm.G.atom_count, "A": asm.A.atom_count},
        "theta_pairs": len(asm.theta_pairs),
        "claims": claims,
        "rc_at_stages": rcs,
        "gamma": {"id": "gamma", **gamma.to_json()},
        "markers": markers,
    }
    return out


def run_transversal(p: dict, seed: int) -> Outcome:
    out = Outcome()
    if p.get("sets") is not None:
        families = [TR.SetFamily.of(p["sets"])]
    elif p.get("fixture") is not None:
        families = [TR.family_from_lambda_system(LS.load_fixture(p["fixture"])["family"])]
    else:
        import random

        cfg = dict(p["random"])
        rng = random.Random(seed)
        families = [TR.random_family(rng, cfg.get("max_sets", 8), cfg.get("max_size", 6))
                    for _ in range(int(cfg.get("count", 10)))]
    entries = []
    for i, F in enumerate(families):
        r = TR.find_transversal(F)
        if not r.free and not TR.check_violator(F, r.violator):
            out.violations.append(f"family {i}: reported violator satisfies Hall's condition")
        entry = {"id": f"family:{i}", "sets": [sorted(map(repr, s)) for s in F.sets], **r.to_json()}
        entry["almost_free"] = TR.almost_free_sweep(F).to_json()
        entries.append(entry)
    out.result = {"families": entries}
    return out


def run(spec: RunSpec, jobs: int = 1) -> Outcome:
    p = spec.params
    if spec.kind == "tight-coding":
        return run_tight(p, jobs)
    if spec.kind == "cp-plus":
        return run_cpp(p)
    if spec.kind == "lambda-system":
        return run_lambda(p)
    if spec.kind == "as-construction":
        return run_assembly(p)
    if spec.kind == "transversal":
        return run_transversal(p, spec.seed)
    out = Outcome()
    out.result = run_selftest(spec.seed, p.get("suites"))
    for s in out.result["suites"]:
        out.violations += [f"{s['name']}: {f}" for f in s["failures"]]
        out.findings += [f"{s['name']}: {f}" for f in s["findings"]]
    return out


def make_report(spec: RunSpec, outcome: Outcome, timings: Optional[dict] = None) -> dict:
    report = {
        "tool": "rcworkbench",
        "version": __version__,
        "spec": spec.to_json(),
        "seed": spec.seed,
        "kind": spec.kind,
        "status": "ok" if not outcome.violations else "violations",
        "violations": outcome.violations,
        "findings": outcome.findings,
        "result": outcome.result,
    }
    if timings is not None:
        report["timings"] = timings
    return report


# -- rendering ---------------------------------------------------------------------------


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt_ordinal(v) -> str:
    return str(T.Ordinal(*v))


def _is_ordinal_list(key: str, v: Any) -> bool:
    return key in ("S", "S1", "S2", "fingerprint", "fingerprint1", "fingerprint2") and isinstance(v, list)


def render_text(report: dict) -> str:
    lines = [
        f"rcworkbench {report['version']}  kind={report['kind']}  seed={report['seed']}  status={report['status']}"
    ]
    for v in report["violations"]:
        lines.append(f"VIOLATION {v}")
    for f in report["findings"]:
        lines.append(f"finding   {f}")

    def walk(obj, indent, key=""):
        pad = "  " * indent
        if isinstance(obj, dict):
            if "id" in obj:
                lines.append(f"{pad}[{obj['id']}]")
            for k in sorted(obj):
                v = obj[k]
                if k == "id":
                    continue
                if _is_ordinal_list(k, v):
                    lines.append(f"{pad}{k}: {{{', '.join(_fmt_ordinal(a) for a in v)}}}")
                elif isinstance(v, (dict, list)) and v:
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 1, k)
                else:
                    lines.append(f"{pad}{k}: {json.dumps(v, ensure_ascii=False)}")
        elif isinstance(obj, list):
            if all(not isinstance(x, (dict, list)) for x in obj) or len(obj) > 50 and not any(
                isinstance(x, dict) for x in obj
            ):
                lines.append(f"{pad}{json.dumps(obj, ensure_ascii=False)}")
            else:
                for x in obj:
                    walk(x, indent, key)
        else:
            lines.append(f"{pad}{json.dumps(obj, ensure_ascii=False)}")

    walk(report["result"], 0)
    return "\n".join(lines) + "\n"


# -- entry point -------------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rcworkbench", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"rcworkbench {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a spec file")
    r.add_argument("spec", help="path to a JSON spec, or - for stdin")
    s = sub.add_parser("selftest", help="run the brute-force oracle suite")
    for p in (r, s):
        p.add_argument("-o", "--output", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--seed", type=int, help="override the spec seed")
        p.add_argument("--timings", action="store_true", help="add wall-clock timings (breaks byte-identity)")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for independent verifier jobs")
    r.add_argument("--budget", type=int, help="override the budget (tight-coding) or l_max (cp-plus)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "selftest":
            spec = RunSpec("selftest", 0, {})
        elif args.spec == "-":
            spec = parse_spec(sys.stdin.read())
        else:
            spec = parse_spec(args.spec, is_path=True)
        if args.seed is not None:
            spec.seed = args.seed
        if getattr(args, "budget", None) is not None:
            key = {"tight-coding": "budget", "cp-plus": "l_max"}.get(spec.kind)
            if key is None:
                raise SpecError(f"--budget does not apply to kind {spec.kind}")
            spec.params[key] = args.budget
            _check(spec, "")
    except SpecError as exc:
        print(f"rcworkbench: spec error: {exc}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    try:
        outcome = run(spec, args.jobs)
    except (PresentationError, T.LadderError, T.ConstructionError, CP.ConstructionError,
            K.KernelError, AS.PreconditionError, ValueError) as exc:
        print(f"rcworkbench: {spec.kind}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    timings = {"wall_seconds": round(time.perf_counter() - start, 3)} if args.timings else None
    report = make_report(spec, outcome, timings)
    text = render_json(report) if args.format == "json" else render_text(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if not outcome.violations else 1


if __name__ == "__main__":
    sys.exit(main())
