"""Analysis report: hypotheses, LARC, S(theta) and the linearization in one document."""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from . import __version__
from .exact import rational_rank
from .lie import (
    DEFAULT_CUTOFF,
    DEFAULT_THETA,
    REFERENCE_BAD_BRACKETS,
    REFERENCE_GOOD_BRACKETS,
    BracketEvaluator,
    certify_larc,
    certify_sussmann,
    parse_bracket,
)
from .linear import linearize
from .model import PARAM_NAMES, Params, diagnose_params
from .system import SystemSpec

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CERTIFIED = 2
EXIT_INCONCLUSIVE = 3
EXIT_DOMAIN = 4


def rat(v: Fraction) -> str:
    return str(Fraction(v))


def vec(values) -> dict[str, list]:
    values = [Fraction(v) for v in values]
    return {"exact": [rat(v) for v in values], "decimal": [float(v) for v in values]}


def mat(rows) -> dict[str, list]:
    return {"exact": [[rat(v) for v in r] for r in rows],
            "decimal": [[float(v) for v in r] for r in rows]}


def _satellite_params(sys: SystemSpec) -> Params | None:
    p = sys.param_dict
    if all(k in p for k in PARAM_NAMES):
        try:
            return Params(**{k: p[k] for k in PARAM_NAMES})
        except ValueError:
            return None
    return None


def analyze(sys: SystemSpec, theta=DEFAULT_THETA, cutoff=DEFAULT_CUTOFF) -> dict[str, Any]:
    """Run every check and return a JSON-ready document.

    ``verdict`` is ``certified`` only when the inertia hypotheses hold (for
    systems carrying satellite parameters) and both LARC and ``S(theta)`` are
    certified.  ``sussmann.status`` reports the bracket computation on its own.
    """
    theta, cutoff = Fraction(theta), Fraction(cutoff)
    ev = BracketEvaluator(sys)
    sus = certify_sussmann(sys, theta, cutoff, evaluator=ev)
    larc = certify_larc(sys, theta, cutoff, evaluator=ev)
    lin = linearize(sys)

    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "system": {"name": sys.name, "n": sys.n, "m": sys.m,
                   "variables": list(sys.ring.names),
                   "constrained": sys.ring.constrained,
                   "equilibrium": vec(sys.equilibrium)},
        "parameters": {k: rat(v) for k, v in sys.params},
        "theta": rat(theta),
        "cutoff": rat(cutoff),
    }

    params = _satellite_params(sys)
    hypotheses_ok = True
    if params is not None:
        diag = diagnose_params(params)
        hypotheses_ok = diag.nondegenerate
        doc["diagnostics"] = {
            "flat_body": diag.flat_body,
            "axisymmetric": diag.axisymmetric,
            "triangle_violations": diag.triangle_violations,
            "theorem_hypotheses_hold": hypotheses_ok,
        }

    doc["larc"] = {
        "certified": larc.certified,
        "dimension": larc.dimension,
        "certifying_trees": [str(t) for t in larc.trees],
        "values": [vec(v) for v in larc.values],
    }
    doc["sussmann"] = {
        "status": sus.status,
        "certified": sus.sussmann_certified,
        "span_dimension": sus.dimension,
        "span_by_weight": [{"weight": rat(w), "dimension": d} for w, d in sus.span_by_weight],
        "stopped_at_weight": rat(sus.stopped_at) if sus.stopped_at is not None else None,
        "good_set": [{"tree": str(t), "value": vec(v)} for t, v in sus.good_set],
        "bad_brackets": [
            {"tree": str(b.tree), "weight": rat(b.weight), "classification": b.classification,
             "delta": list(b.tree.delta), "value": vec(b.value), "span_member": b.span_member}
            for b in sus.bad_verdicts
        ],
    }
    if sys.n == 6 and sys.m == 3:
        good = {name: ev.value(parse_bracket(src)) for name, src in REFERENCE_GOOD_BRACKETS.items()}
        bad = {name: ev.value(parse_bracket(src)) for name, src in REFERENCE_BAD_BRACKETS.items()}
        doc["reference_brackets"] = {
            "good": {name: {"tree": REFERENCE_GOOD_BRACKETS[name], "value": vec(v)}
                     for name, v in good.items()},
            "good_rank": rational_rank([list(v) for v in good.values()]),
            "bad": {name: {"tree": REFERENCE_BAD_BRACKETS[name], "value": vec(v)}
                    for name, v in bad.items()},
        }
    doc["linearization"] = {
        "A": mat(lin.A),
        "B": mat(lin.B),
        "kalman_rank": lin.kalman_rank,
        "controllable": lin.controllable,
    }

    if sus.status == "inconclusive":
        verdict = "inconclusive"
    elif sus.sussmann_certified and hypotheses_ok:
        verdict = "certified"
    else:
        verdict = "not_certified"
    doc["verdict"] = verdict
    return doc


def exit_code(doc: dict[str, Any]) -> int:
    return {"certified": EXIT_OK, "not_certified": EXIT_NOT_CERTIFIED,
            "inconclusive": EXIT_INCONCLUSIVE}[doc["verdict"]]


def to_json(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def to_text(doc: dict[str, Any]) -> str:
    lines = []
    sysd = doc["system"]
    lines.append(f"system {sysd['name']}: n={sysd['n']} m={sysd['m']}")
    if doc["parameters"]:
        lines.append("parameters: " + ", ".join(f"{k}={v}" for k, v in doc["parameters"].items()))
    lines.append(f"theta={doc['theta']} cutoff={doc['cutoff']}")
    if "diagnostics" in doc:
        d = doc["diagnostics"]
        lines.append(f"flat_body={d['flat_body']} axisymmetric={d['axisymmetric']} "
                     f"hypotheses_hold={d['theorem_hypotheses_hold']}")
        for v in d["triangle_violations"]:
            lines.append(f"  warning: triangle inequality violated: {v}")
    la = doc["larc"]
    lines.append(f"LARC: certified={la['certified']} dimension={la['dimension']}")
    for t, v in zip(la["certifying_trees"], la["values"]):
        lines.append(f"  {t} -> ({', '.join(v['exact'])})")
    su = doc["sussmann"]
    lines.append(f"S(theta): status={su['status']} span={su['span_dimension']}")
    lines.append("  span by weight: " + ", ".join(f"{e['weight']}:{e['dimension']}"
                                                  for e in su["span_by_weight"]))
    for b in su["bad_brackets"]:
        if any(x != "0" for x in b["value"]["exact"]):
            lines.append(f"  bad {b['tree']} (weight {b['weight']}) -> "
                         f"({', '.join(b['value']['exact'])}) in lower span: {b['span_member']}")
    if "reference_brackets" in doc:
        ref = doc["reference_brackets"]
        lines.append(f"reference good set rank: {ref['good_rank']}")
        for name, e in {**ref["good"], **ref["bad"]}.items():
            lines.append(f"  {name} = {e['tree']} -> ({', '.join(e['value']['exact'])})")
    lin = doc["linearization"]
    lines.append(f"linearization: Kalman rank {lin['kalman_rank']} "
                 f"({'controllable' if lin['controllable'] else 'not controllable'})")
    for row_e, row_d in zip(lin["A"]["exact"], lin["A"]["decimal"]):
        lines.append("  A: " + "  ".join(f"{e:>6} ({d:.6g})" for e, d in zip(row_e, row_d)))
    for row_e, row_d in zip(lin["B"]["exact"], lin["B"]["decimal"]):
        lines.append("  B: " + "  ".join(f"{e:>6} ({d:.6g})" for e, d in zip(row_e, row_d)))
    lines.append(f"verdict: {doc['verdict']}")
    return "\n".join(lines) + "\n"
