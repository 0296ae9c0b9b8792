"""Instance files, task execution and report emission.

An instance file is a JSON object describing one algebra, one cone and a
list of tasks.  See the README for the full format.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra import StarAlgebra, is_symmetric_algebra
from .characters import (compare_pure_vs_characters, enumerate_characters,
                         largest_multiplicative_subalgebra, variance_square_criterion)
from .cone import (BlockPSD, DominantSet, FunctionalGenerated, check_coercive_product,
                   qdown_member, regularity_check, validate_cone_axioms,
                   verify_qdown_certificate)
from .errors import (AlgebraValidationError, CapabilityError, InternalConsistencyError,
                     SchemaError, StarAlgebraError)
from .functionals import (State, density_state, evaluation, is_pure, sample_order_interval,
                          vector_state)
from .gns import (build_gns, gns_positivity_check, limit_formula_check, moment_sequence_of,
                  op_norm_inf, sup_form_check)
from .moments import (GrowthTag, MomentSequence, carleman_classify, gram_schmidt_jacobi,
                      growth_check, jacobi_from_moments, recursion_solution,
                      stieltjes_state_check)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_INCONSISTENT = 0, 1, 2

ALGEBRA_KEYS = {"pointwise", "blocks", "poly_trunc", "cyclic_group", "dim", "mult", "star", "unit"}
CONE_KEYS = {"psd_blocks", "generators"}
TOP_KEYS = ALGEBRA_KEYS | CONE_KEYS | {
    "schema_version", "name", "description", "functionals", "elements",
    "candidate_states", "moments", "seed", "tasks"}

TASKS = {
    # name: (required references, optional parameters)
    "axioms": ((), {"samples": 50}),
    "regularity": ((), {"samples": 64}),
    "symmetric": ((), {"samples": 32}),
    "characters": ((), {}),
    "compare": ((), {}),
    "purity": (("state",), {}),
    "gns": (("state",), {"samples": 20}),
    "op_norm": (("state", "element"), {"samples": 50}),
    "limit_formula": (("state", "element"), {"n_max": 128}),
    "variance_criterion": (("state",), {"samples": 16}),
    "multiplicative_subalgebra": (("state",), {}),
    "extremal": (("state",), {"samples": 100}),
    "coercive_product": (("q", "r"), {}),
    "qdown": (("base", "element"), {"max_product_length": 3}),
    "growth": (("sequence",), {}),
    "carleman": (("sequence",), {"policy": "both"}),
    "jacobi": (("sequence",), {"M": 8}),
    "recursion": (("sequence",), {"M": 8, "lambda": 0.0}),
    "stieltjes": (("state", "element"), {"n_max": 64, "twist_samples": 8}),
}
MOMENT_TASKS = {"growth", "carleman", "jacobi", "recursion"}


@dataclass
class InstanceSpec:
    name: str
    algebra: StarAlgebra | None
    cone: object | None
    functionals: dict = field(default_factory=dict)
    elements: dict = field(default_factory=dict)
    candidate_states: list = field(default_factory=list)
    moments: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)
    seed: int = 0
    schema_version: int = SCHEMA_VERSION
    path: str = ""


def builtin_corpus_dir() -> Path:
    """Directory of the instance files shipped with the package."""
    return Path(__file__).parent / "corpus"


# -- literals -------------------------------------------------------------------

def _scalar(x, loc, errors):
    if isinstance(x, bool):
        errors.append((loc, "expected a number"))
        return 0j
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    errors.append((loc, "expected a number or an [re, im] pair"))
    return 0j


def _array(x, shape, loc, errors):
    """Nested list of complex literals with a given shape."""
    if len(shape) == 0:
        return _scalar(x, loc, errors)
    if not isinstance(x, list) or len(x) != shape[0]:
        errors.append((loc, f"expected a list of length {shape[0]}"))
        return np.zeros(shape, dtype=complex)
    return np.array([_array(v, shape[1:], f"{loc}[{i}]", errors) for i, v in enumerate(x)],
                    dtype=complex).reshape(shape)


def _parse_algebra(raw, errors):
    forms = [k for k in ("pointwise", "blocks", "poly_trunc", "cyclic_group") if k in raw]
    has_raw = any(k in raw for k in ("dim", "mult", "star", "unit"))
    if len(forms) + bool(has_raw) > 1:
        errors.append(("$", "more than one algebra description given"))
        return None
    try:
        if forms:
            key = forms[0]
            val = raw[key]
            if key == "blocks":
                if not (isinstance(val, list) and val and all(isinstance(n, int) and n > 0 for n in val)):
                    errors.append(("$.blocks", "expected a non-empty list of positive integers"))
                    return None
                return StarAlgebra.blocks(val)
            if not isinstance(val, int) or isinstance(val, bool) or val < (0 if key == "poly_trunc" else 1):
                errors.append((f"$.{key}", "expected a positive integer"))
                return None
            return getattr(StarAlgebra, key)(val)
        if not has_raw:
            return None
        missing = [k for k in ("dim", "mult", "star", "unit") if k not in raw]
        for k in missing:
            errors.append((f"$.{k}", "required field missing for a structure-constant algebra"))
        if missing:
            return None
        d = raw["dim"]
        if not isinstance(d, int) or d < 1:
            errors.append(("$.dim", "expected a positive integer"))
            return None
        n0 = len(errors)
        mult = _array(raw["mult"], (d, d, d), "$.mult", errors)
        star = _array(raw["star"], (d, d), "$.star", errors)
        unit = _array(raw["unit"], (d,), "$.unit", errors)
        if len(errors) > n0:
            return None
        return StarAlgebra(mult, star, unit, name=raw.get("name", ""))
    except StarAlgebraError as exc:
        errors.append(("$", f"algebra validation failed: {exc}"))
        return None


def _functional(lit, algebra, loc, errors):
    if isinstance(lit, dict):
        if len(lit) != 1:
            errors.append((loc, "functional literal must have exactly one key"))
            return None
        (kind, val), = lit.items()
        try:
            if kind == "evaluation":
                if algebra.block_tag is None or any(n != 1 for n in algebra.block_tag):
                    errors.append((loc, "evaluation functionals need a pointwise algebra"))
                    return None
                if not isinstance(val, int) or not 0 <= val < algebra.dim:
                    errors.append((loc, f"evaluation index out of range 0..{algebra.dim - 1}"))
                    return None
                return evaluation(algebra, val)
            if kind in ("vector_state", "density"):
                if algebra.block_tag is None:
                    errors.append((loc, f"{kind} needs a block algebra"))
                    return None
                if not (isinstance(val, list) and len(val) == 2 and isinstance(val[0], int)
                        and 0 <= val[0] < len(algebra.block_tag)):
                    errors.append((loc, f"{kind} expects [block index, data]"))
                    return None
                n = algebra.block_tag[val[0]]
                n0 = len(errors)
                if kind == "vector_state":
                    amps = _array(val[1], (n,), f"{loc}.{kind}[1]", errors)
                    if len(errors) > n0:
                        return None
                    if np.linalg.norm(amps) == 0:
                        errors.append((loc, "zero vector"))
                        return None
                    return vector_state(algebra, val[0], amps)
                mat = _array(val[1], (n, n), f"{loc}.{kind}[1]", errors)
                return None if len(errors) > n0 else density_state(algebra, val[0], mat)
        except StarAlgebraError as exc:
            errors.append((loc, str(exc)))
            return None
        errors.append((loc, f"unknown functional literal {kind!r}"))
        return None
    n0 = len(errors)
    vec = _array(lit, (algebra.dim,), loc, errors)
    return None if len(errors) > n0 else vec


def _element(lit, algebra, loc, errors):
    if lit == "unit":
        return algebra.one()
    if isinstance(lit, dict) and set(lit) == {"blocks"}:
        if algebra.block_tag is None:
            errors.append((loc, "block literal needs a block algebra"))
            return None
        mats = lit["blocks"]
        if not isinstance(mats, list) or len(mats) != len(algebra.block_tag):
            errors.append((loc, f"expected {len(algebra.block_tag)} blocks"))
            return None
        n0 = len(errors)
        arrs = [_array(m, (n, n), f"{loc}.blocks[{k}]", errors)
                for k, (m, n) in enumerate(zip(mats, algebra.block_tag))]
        return None if len(errors) > n0 else algebra.from_blocks(arrs)
    n0 = len(errors)
    vec = _array(lit, (algebra.dim,), loc, errors)
    return None if len(errors) > n0 else vec


def _moment_spec(name, spec, loc, errors):
    if not isinstance(spec, dict):
        errors.append((loc, "moment sequence must be an object"))
        return None
    if "values" in spec:
        vals = spec["values"]
        if not isinstance(vals, list) or not all(
                isinstance(v, (int, float, str)) and not isinstance(v, bool) for v in vals):
            errors.append((f"{loc}.values", "expected a list of numbers or fraction strings"))
            return None
        try:
            return MomentSequence.from_values(vals, label=name)
        except (StarAlgebraError, ValueError, ZeroDivisionError) as exc:
            errors.append((f"{loc}.values", str(exc)))
            return None
    if "tag" in spec:
        n_max = spec.get("n_max", 64)
        if not isinstance(n_max, int) or n_max < 8:
            errors.append((f"{loc}.n_max", "expected an integer >= 8"))
            return None
        try:
            tag = GrowthTag(spec["tag"], rate=spec.get("rate"), alpha=spec.get("alpha"),
                            beta=spec.get("beta", 0.0), name=spec.get("name", ""))
            return MomentSequence.from_tag(tag, n_max, label=name)
        except StarAlgebraError as exc:
            errors.append((f"{loc}.tag", str(exc)))
            return None
    if "state" in spec and "element" in spec:
        return {"state": spec["state"], "element": spec["element"],
                "n_max": spec.get("n_max", 64)}
    errors.append((loc, "expected one of 'values', 'tag' or 'state'+'element'"))
    return None


def parse_instance(path) -> InstanceSpec:
    """Load and validate an instance file; raises SchemaError listing every problem."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError([(str(path), f"cannot read file: {exc}")]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError([(f"line {exc.lineno}, column {exc.colno}", exc.msg)]) from exc
    return parse_instance_dict(raw, name=path.stem, path=str(path))


def parse_instance_dict(raw, name: str = "instance", path: str = "") -> InstanceSpec:
    errors: list = []
    if not isinstance(raw, dict):
        raise SchemaError([("$", "top level must be an object")])
    for key in sorted(set(raw) - TOP_KEYS):
        errors.append((f"$.{key}", "unknown field"))
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        errors.append(("$.schema_version", f"unsupported schema version {version!r}"))
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append(("$.seed", "expected a non-negative integer"))
        seed = 0
    n_before = len(errors)
    algebra = _parse_algebra(raw, errors)
    algebra_failed = len(errors) > n_before
    cone = None
    if algebra is not None:
        cone_forms = [k for k in CONE_KEYS if k in raw]
        if len(cone_forms) > 1:
            errors.append(("$", "give either psd_blocks or generators, not both"))
        elif raw.get("psd_blocks"):
            try:
                cone = BlockPSD(algebra)
            except StarAlgebraError as exc:
                errors.append(("$.psd_blocks", str(exc)))
        elif "generators" in raw:
            gens = raw["generators"]
            if not isinstance(gens, list) or not gens:
                errors.append(("$.generators", "expected a non-empty list"))
            else:
                vecs = [_functional(g, algebra, f"$.generators[{i}]", errors)
                        for i, g in enumerate(gens)]
                if all(v is not None for v in vecs):
                    try:
                        cone = FunctionalGenerated(algebra, vecs)
                    except AlgebraValidationError as exc:
                        loc = f"$.generators[{getattr(exc, 'generator', '?')}]"
                        msg = str(exc)
                        if getattr(exc, "witness", None) is not None:
                            msg += f"; witness element {_fmt_vec(exc.witness)}"
                        errors.append((loc, msg))
                    except StarAlgebraError as exc:
                        errors.append(("$.generators", str(exc)))
        else:
            errors.append(("$", "missing cone: give psd_blocks or generators"))
    elif not algebra_failed and any(k in raw for k in CONE_KEYS | {"functionals", "elements"}):
        errors.append(("$", "functionals, elements and cones need an algebra"))

    functionals, elements = {}, {}
    if algebra is not None:
        for key, store, parser in (("functionals", functionals, _functional),
                                   ("elements", elements, _element)):
            block = raw.get(key, {})
            if not isinstance(block, dict):
                errors.append((f"$.{key}", "expected an object of named literals"))
                continue
            for nm, lit in block.items():
                val = parser(lit, algebra, f"$.{key}.{nm}", errors)
                if val is not None:
                    store[nm] = val

    moments = {}
    mblock = raw.get("moments", {})
    if not isinstance(mblock, dict):
        errors.append(("$.moments", "expected an object of named sequences"))
    else:
        for nm, spec in mblock.items():
            val = _moment_spec(nm, spec, f"$.moments.{nm}", errors)
            if isinstance(val, dict):
                for ref, store in (("state", functionals), ("element", elements)):
                    if val[ref] not in store:
                        errors.append((f"$.moments.{nm}.{ref}", f"unresolved reference {val[ref]!r}"))
            if val is not None:
                moments[nm] = val

    candidates = raw.get("candidate_states", [])
    if not isinstance(candidates, list):
        errors.append(("$.candidate_states", "expected a list of functional names"))
        candidates = []
    for i, c in enumerate(candidates):
        if c not in functionals:
            errors.append((f"$.candidate_states[{i}]", f"unresolved reference {c!r}"))

    tasks = raw.get("tasks", [])
    if not isinstance(tasks, list):
        errors.append(("$.tasks", "expected a list"))
        tasks = []
    parsed_tasks = []
    refs = {"state": functionals, "element": elements, "q": elements, "r": elements,
            "sequence": moments}
    for i, t in enumerate(tasks):
        loc = f"$.tasks[{i}]"
        if isinstance(t, str):
            t = {"task": t}
        if not isinstance(t, dict) or t.get("task") not in TASKS:
            errors.append((loc, f"unknown task {t.get('task') if isinstance(t, dict) else t!r}"))
            continue
        required, defaults = TASKS[t["task"]]
        if algebra is None and t["task"] not in MOMENT_TASKS:
            errors.append((loc, f"task {t['task']!r} needs an algebra"))
            continue
        entry = {"task": t["task"], **defaults}
        for key, val in t.items():
            if key == "task":
                continue
            if key not in required and key not in defaults and key != "tol":
                errors.append((f"{loc}.{key}", "unknown parameter"))
            entry[key] = val
        for ref in required:
            if ref not in t:
                errors.append((f"{loc}.{ref}", "required reference missing"))
            elif ref == "base":
                if not isinstance(t[ref], list) or not t[ref] or \
                        any(b not in elements for b in t[ref]):
                    errors.append((f"{loc}.base", "expected a list of element names"))
            elif not isinstance(t[ref], str) or t[ref] not in refs[ref]:
                errors.append((f"{loc}.{ref}", f"unresolved reference {t[ref]!r}"))
        parsed_tasks.append(entry)

    if errors:
        raise SchemaError(errors)
    return InstanceSpec(name=raw.get("name", name), algebra=algebra, cone=cone,
                        functionals=functionals, elements=elements,
                        candidate_states=list(candidates), moments=moments,
                        tasks=parsed_tasks, seed=seed, schema_version=version, path=path)


# -- serialisation --------------------------------------------------------------

def jsonable(x):
    """Convert a result structure into plain JSON data.

    Complex numbers become [re, im] pairs, arrays become lists and
    non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (complex, np.complexfloating)):
        if x.imag == 0:
            return jsonable(float(x.real))
        return [jsonable(float(x.real)), jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return 0.0 if x == 0 else x
    if x is None or isinstance(x, str):
        return x
    if hasattr(x, "as_dict"):
        return jsonable(x.as_dict())
    return str(x)


def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{complex(c).real:.6g}" + (f"{complex(c).imag:+.6g}j" if complex(c).imag else "")
                           for c in v) + "]"


# -- task execution -----------------------------------------------------------------

def _task_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _state(spec, name):
    return State(spec.functionals[name], spec.cone, label=name)


def _sequence(spec, name):
    seq = spec.moments[name]
    if isinstance(seq, dict):
        seq = moment_sequence_of(_state(spec, seq["state"]), spec.elements[seq["element"]],
                                 seq["n_max"])
    return seq


def _run_task(spec, task, seed, tol):
    """Returns (result dict, passed flag or None for report-only tasks)."""
    kind = task["task"]
    alg, cone = spec.algebra, spec.cone
    if kind == "axioms":
        r = validate_cone_axioms(cone, samples=task["samples"], seed=seed)
        return r, None
    if kind == "regularity":
        return regularity_check(cone, alg, samples=task["samples"], seed=seed), None
    if kind == "symmetric":
        return is_symmetric_algebra(alg, samples=task["samples"], seed=seed), None
    if kind == "characters":
        e = enumerate_characters(alg, cone, seed=seed)
        return {"characters": e.characters, "count": len(e.characters),
                "degenerate": e.degenerate, "attempts": e.attempts, "rejected": e.rejected}, None
    if kind == "compare":
        cands = [(n, spec.functionals[n]) for n in spec.candidate_states]
        rep = compare_pure_vs_characters(alg, cone, candidates=cands, seed=seed)
        return rep.as_dict(), rep.consistent
    if kind == "purity":
        res = is_pure(_state(spec, task["state"]))
        return {"pure": res.pure, "tests": res.tests}, None
    if kind == "gns":
        st = _state(spec, task["state"])
        g = build_gns(st)
        res = g.residuals()
        gate = tol if tol is not None else 1e-10
        sv = np.linalg.svd(g.gram, compute_uv=False)
        indep = int((sv > 1e-10 * sv[0]).sum()) if sv[0] > 0 else 0
        pos = gns_positivity_check(st, samples=task["samples"], seed=seed, gns=g)
        ok = (max(res["homomorphism"], res["star"], res["unit"], res["state_recovery"]) <= gate
              and indep == g.quotient_dim and pos["passed"])
        return {"quotient_dim": g.quotient_dim, "gram_rank_svd": indep, "residuals": res,
                "positivity": pos, "passed": ok}, ok
    if kind == "op_norm":
        st = _state(spec, task["state"])
        a = spec.elements[task["element"]]
        r = sup_form_check(st, a, samples=task["samples"], seed=seed)
        return r, r["passed"]
    if kind == "limit_formula":
        st = _state(spec, task["state"])
        r = limit_formula_check(st, spec.elements[task["element"]], n_max=task["n_max"])
        r = {k: v for k, v in r.items() if k != "r"}
        return r, r["passed"]
    if kind == "variance_criterion":
        r = variance_square_criterion(_state(spec, task["state"]), samples=task["samples"], seed=seed)
        ok = r["agree"] and r["identity_residual"] <= 1e-10
        return r, ok
    if kind == "multiplicative_subalgebra":
        basis = largest_multiplicative_subalgebra(_state(spec, task["state"]))
        return {"dimension": basis.shape[1], "basis": basis.T}, None
    if kind == "extremal":
        st = _state(spec, task["state"])
        pure = is_pure(st).pure
        rng = np.random.default_rng(seed)
        rhos = sample_order_interval(st, task["samples"], rng)
        dev = max(float(np.abs(r - (r @ alg.unit) * st.covector).max()) for r in rhos)
        gate = tol if tol is not None else 1e-9
        ok = (dev <= gate) if pure else True
        return {"pure": pure, "samples": len(rhos), "max_deviation": dev,
                "passed": ok}, ok
    if kind == "coercive_product":
        r = check_coercive_product(cone, spec.elements[task["q"]], spec.elements[task["r"]])
        return r, r["passed"]
    if kind == "qdown":
        dom = DominantSet(cone, [spec.elements[b] for b in task["base"]],
                          task["max_product_length"])
        a = spec.elements[task["element"]]
        res = qdown_member(dom, cone, a)
        ok = verify_qdown_certificate(dom, cone, a, res) if res.is_member else True
        return {"status": res.status, "witnesses": res.witnesses, "certificate_verified": ok}, ok
    if kind == "growth":
        r = growth_check(_sequence(spec, task["sequence"]))
        return r, r["valid"]
    if kind == "carleman":
        seq = _sequence(spec, task["sequence"])
        policies = ("closed-form", "exponent-fit") if task["policy"] == "both" else (task["policy"],)
        rows = [carleman_classify(seq, p).as_dict() for p in policies]
        return {"N": seq.N, "rows": rows}, None
    if kind == "jacobi":
        seq = _sequence(spec, task["sequence"])
        j = jacobi_from_moments(seq, task["M"])
        oa, ob = gram_schmidt_jacobi(seq, j.M)
        rel = lambda x, y: float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y)))) if len(y) else 0.0
        diff = max(rel(j.alpha, oa), rel(j.beta, ob))
        ok = diff <= 1e-8 and j.gram_residual <= 1e-8
        return {"M": j.M, "alpha": j.alpha, "beta": j.beta, "warnings": j.warnings,
                "gram_residual": j.gram_residual, "oracle_max_rel_diff": diff,
                "passed": ok}, ok
    if kind == "recursion":
        seq = _sequence(spec, task["sequence"])
        j = jacobi_from_moments(seq, task["M"])
        r = recursion_solution(j, task["lambda"])
        return {"M": j.M, "p": r["p"], "partial_sums": r["partial_sums"],
                "last_quartile_increase": r["last_quartile_increase"]}, None
    if kind == "stieltjes":
        r = stieltjes_state_check(_state(spec, task["state"]), spec.elements[task["element"]],
                                  twist_samples=task["twist_samples"], n_max=task["n_max"],
                                  seed=seed)
        return r, r["passed"]
    raise CapabilityError(f"unknown task {kind!r}")


def run_tasks(spec: InstanceSpec, seed: int | None = None, tol: float | None = None,
              only: set | None = None) -> tuple[int, dict]:
    """Run the instance's tasks in order; returns (exit code, report bundle)."""
    seed = spec.seed if seed is None else seed
    sections = []
    code = EXIT_OK
    for index, task in enumerate(spec.tasks):
        if only is not None and task["task"] not in only:
            continue
        section = {"index": index, "task": task["task"],
                   "params": {k: v for k, v in task.items() if k != "task"}}
        try:
            result, passed = _run_task(spec, task, _task_seed(seed, index), task.get("tol", tol))
            section["result"] = result
            if passed is None or passed:
                section["status"] = "ok"
            else:
                section["status"] = "inconsistent"
                code = max(code, EXIT_INCONSISTENT)
        except InternalConsistencyError as exc:
            section.update(status="inconsistent", error=str(exc), dump=exc.dump)
            code = max(code, EXIT_INCONSISTENT)
        except CapabilityError as exc:
            section.update(status="unsupported", error=str(exc))
        except StarAlgebraError as exc:
            section.update(status="error", error=str(exc))
            code = EXIT_ERROR if code == EXIT_OK else code
        sections.append(section)
    bundle = {
        "schema_version": SCHEMA_VERSION,
        "instance": spec.name,
        "seed": seed,
        "algebra": None if spec.algebra is None else {
            "name": spec.algebra.name, "dim": spec.algebra.dim,
            "commutative": spec.algebra.is_commutative,
            "blocks": spec.algebra.block_tag, "axiom_residuals": spec.algebra.residuals},
        "cone": None if spec.cone is None else spec.cone.describe(),
        "sections": sections,
        "exit_code": code,
    }
    return code, jsonable(bundle)


# -- emission ---------------------------------------------------------------------

def dumps_structured(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, indent=1) + "\n"


def loads_structured(text: str) -> dict:
    return json.loads(text)


def _scalar_items(d: dict, prefix=""):
    for k in sorted(d):
        v = d[k]
        if isinstance(v, dict):
            yield from _scalar_items(v, f"{prefix}{k}.")
        elif isinstance(v, list):
            if v and all(not isinstance(x, (list, dict)) for x in v) and len(v) <= 8:
                yield f"{prefix}{k}", ", ".join(str(x) for x in v)
            else:
                yield f"{prefix}{k}", f"<{len(v)} entries>"
        else:
            yield f"{prefix}{k}", v


def dumps_text(bundle: dict) -> str:
    lines = [f"instance: {bundle['instance']}   seed: {bundle['seed']}   "
             f"exit code: {bundle['exit_code']}"]
    if bundle.get("algebra"):
        a = bundle["algebra"]
        lines.append(f"algebra: {a['name']} (dim {a['dim']}, "
                     f"{'commutative' if a['commutative'] else 'non-commutative'})")
    if bundle.get("cone"):
        lines.append("cone: " + ", ".join(f"{k}={v}" for k, v in sorted(bundle["cone"].items())))
    for sec in bundle["sections"]:
        lines.append("")
        lines.append(f"[{sec['index']}] {sec['task']}  status={sec['status']}")
        if "error" in sec:
            lines.append(f"    error: {sec['error']}")
        res = sec.get("result")
        if res is None:
            continue
        if sec["task"] == "compare":
            lines.append(f"    {'|characters|':>14} {'|pure|':>8} {'inclusion':>10} "
                         f"{'equality':>9} {'consistent':>11}")
            lines.append(f"    {res['n_characters']:>14} {'n/a' if res['n_pure_states'] is None else res['n_pure_states']:>8} "
                         f"{str(res['inclusion_verdict']['holds']):>10} "
                         f"{str(res['equality_verdict']['holds']):>9} {str(res['consistent']):>11}")
            for k, v in sorted(res["hypothesis_audit"].items()):
                if k != "cone":
                    lines.append(f"    audit.{k}: {v}")
            for w in res["warnings"]:
                lines.append(f"    warning: {w}")
            continue
        if sec["task"] == "carleman":
            lines.append(f"    {'N':>5} {'policy':>13} {'verdict':>13} {'alpha_hat':>12}")
            for row in res["rows"]:
                ah = row["alpha_hat"]
                ah = f"{ah:.6g}" if isinstance(ah, float) else str(ah)
                lines.append(f"    {res['N']:>5} {row['policy']:>13} {row['verdict']:>13} {ah:>12}")
            continue
        for k, v in _scalar_items(res):
            lines.append(f"    {k}: {v}")
    return "\n".join(lines) + "\n"


def emit_report(bundle: dict, fmt: str = "structured", out_dir=None) -> str:
    """Render a bundle; writes ``<out_dir>/<instance>.json|.txt`` when given."""
    text = dumps_structured(bundle) if fmt == "structured" else dumps_text(bundle)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        suffix = ".json" if fmt == "structured" else ".txt"
        (out / f"{bundle['instance']}{suffix}").write_text(text)
    return text
