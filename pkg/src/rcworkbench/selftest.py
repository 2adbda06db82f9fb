"""The brute-force oracle suite at reduced sizes, as one deterministic report."""
from __future__ import annotations

from . import suites as S

# (suite name, runner taking the seed); sizes chosen to finish in well under a minute
PLAN = [
    ("kernel", lambda seed: S.kernel_suite(seed, count=300, max_atoms=12)),
    ("adjoin_element", lambda seed: S.adjoin_suite(seed + 1, count=100)),
    ("free_over", lambda seed: S.free_over_suite(max_atoms=6)),
    ("tight_coding", lambda seed: S.tight_suite((1, 2, 3), budget=5)),
    ("zero_product", lambda seed: S.zero_product_suite((1, 2), max_size=4, budgets={1: 6, 2: 6})),
    ("distinguish", lambda seed: S.distinguish_suite(3, budget=5)),
    ("cp_plus", lambda seed: S.cpp_suite((1, 2), (0, 1), top=3)),
    ("transversals", lambda seed: S.transversal_suite(seed + 2, count=300)),
    ("as_construction", lambda seed: S.assembly_suite()),
]


def run_selftest(seed: int = 0, only=None) -> dict:
    results = []
    for name, runner in PLAN:
        if only and name not in only:
            continue
        results.append(runner(seed).to_json())
    return {
        "suites": results,
        "passed": all(r["passed"] for r in results),
        "findings": sum(len(r["findings"]) for r in results),
    }
