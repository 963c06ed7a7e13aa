"""Regenerate results/table42_reproduction.{json,md}.

Evaluates the PRE table for the embedded apple-production dataset under both
f_h conventions and compares each value with the published one.
"""

import json
from pathlib import Path

from stratmean.io import builtin_dataset
from stratmean.moments import pre_table

PUBLISHED = {"t1": 423.20, "t2": 37.60, "t3": 199.14, "t4": 12.83,
             "tlr": 629.03, "tR": 629.03, "tp": 789.87}
TOLERANCE = 0.05
OUT = Path(__file__).resolve().parent.parent / "results"


def evaluate():
    conventions = {}
    for conv in ("computed", "tabulated"):
        rep = pre_table(builtin_dataset("kadilar-cingi-1999", f_convention=conv))
        rows = {}
        for est, target in PUBLISHED.items():
            pre = rep.pre(est)
            rel = abs(pre - target) / target
            rows[est] = {"published": target, "achieved": round(pre, 2),
                         "rel_error": round(rel, 4), "within_5pct": rel <= TOLERANCE}
        conventions[conv] = {
            "f6": builtin_dataset("kadilar-cingi-1999", f_convention=conv).strata[5].fpc,
            "all_within_5pct": all(r["within_5pct"] for r in rows.values()),
            "n_within_5pct": sum(r["within_5pct"] for r in rows.values()),
            "max_rel_error": max(r["rel_error"] for r in rows.values()),
            "estimators": rows,
        }
    chosen = max(conventions, key=lambda c: (conventions[c]["n_within_5pct"], -conventions[c]["max_rel_error"]))
    return {"tolerance": TOLERANCE, "chosen_convention": chosen,
            "reproduced": conventions[chosen]["all_within_5pct"], "conventions": conventions}


def render_md(doc):
    lines = ["# PRE table reproduction (apple-production dataset)", "",
             f"Chosen convention: **{doc['chosen_convention']}** (most estimators within "
             f"{doc['tolerance']:.0%}). Fully reproduced: **{doc['reproduced']}**.", ""]
    for conv, c in doc["conventions"].items():
        lines += [f"## f convention: {conv} (f_6 = {c['f6']:.4f})", "",
                  "| estimator | published | achieved | rel. error | within 5% |",
                  "|---|---|---|---|---|"]
        for est, r in c["estimators"].items():
            lines.append(f"| {est} | {r['published']:.2f} | {r['achieved']:.2f} | "
                         f"{r['rel_error']:.2%} | {'yes' if r['within_5pct'] else 'no'} |")
        lines.append("")
    lines += [
        "## Notes", "",
        "- With positive covariances MSE(t2) - MSE(t4) = sum W^2 f (3/4 R^2 S_x^2 + R S_yx) > 0,",
        "  so PRE(t4) > PRE(t2) under the printed MSE formulas for any f_h >= 0. The published",
        "  t4 = 12.83 < t2 = 37.60 cannot come from those formulas.",
        "- tlr = 629.03 is matched to two decimals when both the printed f_h and the printed",
        "  rounded w_h^2 values are used; the library always uses exact W_h = N_h / N.",
        "",
    ]
    return "\n".join(lines)


def main():
    doc = evaluate()
    OUT.mkdir(exist_ok=True)
    (OUT / "table42_reproduction.json").write_text(json.dumps(doc, indent=2) + "\n")
    (OUT / "table42_reproduction.md").write_text(render_md(doc))
    print(render_md(doc))


if __name__ == "__main__":
    main()
