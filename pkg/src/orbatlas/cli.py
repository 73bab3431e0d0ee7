"""orbatlas command line.

Exit status: 0 when every check passes, 1 on a semantic failure, 2 when a
file cannot be read or parsed.  Atlas arguments are JSON documents, or
``fixture:NAME`` for a built-in fixture (``--param`` applies).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .atlas import Atlas, AtlasError, index_label, validate_atlas
from .category import LawReport, build_bk, check_category_laws
from .completion import complete_atlas, verify_groupoid
from .document import DocumentError, atlas_to_doc, canonical, load
from .dot import groupoid_dot, space_dot
from .fixtures import FIXTURES, fixture_atlas

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


class StageError(Exception):
    """A module error tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, err: Exception):
        super().__init__(f"[{stage}] {type(err).__name__}: {err}")
        self.stage = stage
        self.err = err


class _Stage:
    def __init__(self, name: str, trace: list | None):
        self.name = name
        self.trace = trace

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if self.trace is not None:
            self.trace.append({"stage": self.name, "seconds": round(time.perf_counter() - self.t0, 4), "ok": exc is None})
        if exc is not None and not isinstance(exc, (StageError, DocumentError)):
            raise StageError(self.name, exc) from exc
        return False


def _params(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise DocumentError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _load_atlas(arg: str, params: dict) -> Atlas:
    if arg.startswith("fixture:"):
        return fixture_atlas(arg.split(":", 1)[1], params)
    return load(arg)


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _write_dot(args, name: str, text: str) -> None:
    if not args.dot:
        return
    d = Path(args.dot)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{name}.dot").write_text(text, encoding="utf-8")


def _emit(args, result: dict, text: str) -> None:
    if args.json:
        out = canonical(result)
    else:
        out = text.rstrip("\n") + "\n"
    if getattr(args, "output", None):
        Path(args.output).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)


def _laws_section(name: str, rep: LawReport) -> tuple[dict, str]:
    return {name: rep.to_dict()}, f"== {name}\n{rep.text()}"


# ---------------------------------------------------------------- commands


def cmd_validate(args, trace) -> int:
    atlas = _load_atlas(args.atlas, _params(args.param))
    with _Stage("validate", trace):
        rep = validate_atlas(atlas)
    _emit(args, {"atlas": atlas.name, "validation": rep.to_dict()}, rep.text())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_fixture(args, trace) -> int:
    params = _params(args.param)
    with _Stage("fixture", trace):
        atlas = fixture_atlas(args.name, params)
        rep = validate_atlas(atlas)
    text = canonical(atlas_to_doc(atlas))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if not rep.passed:
        sys.stderr.write(rep.text() + "\n")
        return EXIT_FAIL
    return EXIT_OK


def _complete(atlas: Atlas, trace, args) -> tuple:
    with _Stage("validate", trace):
        vrep = validate_atlas(atlas)
    if not vrep.passed:
        raise StageError("validate", AtlasError("atlas fails validation: " + ", ".join(vrep.failed_axioms())))
    with _Stage("complete", trace):
        gk = complete_atlas(atlas)
        grep = verify_groupoid(gk)
        bk = build_bk(atlas)
        brep = check_category_laws(bk)
    _write_dot(args, "G_K", groupoid_dot(gk))
    _write_dot(args, "base", space_dot(atlas.base, "Y"))
    return gk, grep, bk, brep


def cmd_complete(args, trace) -> int:
    atlas = _load_atlas(args.atlas, _params(args.param))
    gk, grep, bk, brep = _complete(atlas, trace, args)
    d1, t1 = _laws_section("G_K", grep)
    d2, t2 = _laws_section("B_K", brep)
    head = f"{atlas.name}: G_K has {gk.n_obj} objects, {gk.n_mor} morphisms; B_K has {bk.n_mor} morphisms"
    result = {"atlas": atlas.name, "objects": gk.n_obj, "morphisms": gk.n_mor, "bk_morphisms": bk.n_mor, **d1, **d2}
    _emit(args, result, "\n".join([head, t1, t2]))
    return EXIT_OK if grep.passed and brep.passed else EXIT_FAIL


def _resolve(atlas, args, trace, gk=None) -> dict:
    from .resolve import build_resolution, compute_weighting, cover_reduction, hausdorff_close, resolution_report, wnb_check

    with _Stage("reduce", trace):
        red = cover_reduction(atlas, seed=args.seed)
    with _Stage("resolve", trace):
        V = build_resolution(atlas, red, gk)
        H = hausdorff_close(V, atlas, red)
        rrep = resolution_report(V, H)
    with _Stage("weight", trace):
        w = compute_weighting(H, atlas)
    with _Stage("wnb", trace):
        wrep = wnb_check(H, w)
    _write_dot(args, "V", groupoid_dot(V))
    _write_dot(args, "VH", groupoid_dot(H))
    return {"reduction": red, "V": V, "VH": H, "weighting": w, "resolution_report": rrep, "wnb": wrep}


def cmd_resolve(args, trace) -> int:
    atlas = _load_atlas(args.atlas, _params(args.param))
    gk, *_ = _complete(atlas, trace, args)
    r = _resolve(atlas, args, trace, gk)
    red, V, H = r["reduction"], r["V"], r["VH"]
    lines = [f"{atlas.name}: cover reduction after {red.log.get('nodes', '?')} search nodes"]
    lines += [f"  Q_{index_label(I)}: {len(red.Q[I])} points" for I in atlas.indices]
    lines.append(f"V_K: {V.n_obj} objects, {V.n_mor} morphisms; V^H: {H.n_mor} morphisms")
    lines.append(r["resolution_report"].text())
    lines.append("== wnb")
    lines.append(r["wnb"].text())
    result = {
        "atlas": atlas.name,
        "reduction": red.to_dict(),
        "V": {"objects": V.n_obj, "morphisms": V.n_mor},
        "VH": {"morphisms": H.n_mor},
        "resolution": r["resolution_report"].to_dict(),
        "wnb": r["wnb"].to_dict(),
    }
    _emit(args, result, "\n".join(lines))
    return EXIT_OK if r["resolution_report"].passed and r["wnb"].passed else EXIT_FAIL


def _weights(atlas, args, trace) -> tuple:
    from .invariants import orbifold_weighting, pushforward_check

    gk, *_ = _complete(atlas, trace, args)
    r = _resolve(atlas, args, trace, gk)
    w = r["weighting"]
    with _Stage("pushforward", trace):
        wg = orbifold_weighting(gk)
        prep = pushforward_check(w, wg)
    values = sorted(w.values())
    lines = [f"Lambda_V values: {', '.join(_frac(v) for v in values)}"]
    by_value: dict = {}
    for p, v in w.value.items():
        by_value.setdefault(v, set()).add(str(w.base_point[p]))
    for v in values:
        pts = sorted(by_value[v])
        lines.append(f"  {_frac(v)} over {len(pts)} base points: {', '.join(pts[:8])}{' ...' if len(pts) > 8 else ''}")
    lines.append(f"branch locus: {', '.join(sorted(w.names[p] for p in w.branch_locus)) or 'empty'}")
    gvals: dict = {}
    for p, v in wg.value.items():
        gvals.setdefault(v, set()).add(str(wg.base_point[p]))
    lines.append("Lambda_G: " + "; ".join(f"{_frac(v)} at {len(gvals[v])} points" + (f" ({', '.join(sorted(gvals[v]))})" if len(gvals[v]) <= 4 else "") for v in sorted(gvals)))
    lines.append("== pushforward")
    lines.append(prep.text())
    lines.append("== wnb")
    lines.append(r["wnb"].text())
    result = {
        "lambda_V": w.to_dict(),
        "lambda_V_values": sorted(values),
        "lambda_G": {str(wg.base_point[p]): v for p, v in wg.value.items()},
        "pushforward": prep.to_dict(),
        "wnb": r["wnb"].to_dict(),
        "resolution": r["resolution_report"].to_dict(),
    }
    ok = prep.passed and r["wnb"].passed and r["resolution_report"].passed
    return result, lines, ok, r, gk


def cmd_weights(args, trace) -> int:
    atlas = _load_atlas(args.atlas, _params(args.param))
    result, lines, ok, *_ = _weights(atlas, args, trace)
    _emit(args, {"atlas": atlas.name, **result}, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_gerbe(args, trace) -> int:
    from .invariants import gerbe_class

    atlas = _load_atlas(args.atlas, _params(args.param))
    with _Stage("validate", trace):
        vrep = validate_atlas(atlas)
    if not vrep.passed:
        raise StageError("validate", AtlasError("atlas fails validation: " + ", ".join(vrep.failed_axioms())))
    with _Stage("gerbe", trace):
        res = gerbe_class(atlas)
    d = res.to_dict()
    lines = [f"{atlas.name}: verdict {d['verdict']}"]
    if res.cls is None:
        lines.append(f"cocycle not available: {res.cocycle.note}")
    else:
        ones = sorted(k for k, v in d["cocycle"]["alpha"].items() if v) if "alpha" in d["cocycle"] else []
        lines.append(f"cocycle class {res.cls}; nonzero on {', '.join(ones) or 'no triple'}")
        lines.append(f"parity violations: {len(res.parity)}; rechoices checked: {res.rechoices}, failures: {len(res.rechoice_failures)}")
    _emit(args, {"atlas": atlas.name, **d}, "\n".join(lines))
    consistent = res.cls is None or (res.cls == 0) == res.trivial
    return EXIT_OK if consistent and not res.parity and not res.rechoice_failures else EXIT_FAIL


def _section(args, red):
    from .invariants import SectionData, football_sections, section_from_base

    choice = args.section or "poles"
    builtin = {s.name: s for s in football_sections(red)} if red.atlas.name.startswith("football") else {}
    if choice in builtin:
        return builtin[choice]
    path = Path(choice)
    if not path.exists():
        raise DocumentError(f"section {choice!r} is neither a file nor a built-in ({', '.join(builtin) or 'none for this atlas'})")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DocumentError(f"cannot read section file {choice}: {e}") from None
    if "zeros" in doc:
        zeros = doc["zeros"]
        if any(s not in (1, -1) for s in zeros.values()):
            raise DocumentError("zero signs must be 1 or -1")
        return section_from_base(red, zeros, doc.get("name", path.stem))
    if "nu" in doc:
        by_label = {index_label(I): I for I in red.atlas.indices}
        try:
            nu = {by_label[k]: dict(v) for k, v in doc["nu"].items()}
            signs = {(by_label[lab], x): int(s) for lab, x, s in doc.get("signs", [])}
        except (KeyError, ValueError, TypeError) as e:
            raise DocumentError(f"section file {choice}: bad entry {e}") from None
        return SectionData(nu, signs, doc.get("name", path.stem))
    raise DocumentError(f"section file {choice} needs a 'zeros' or 'nu' entry")


def cmd_euler(args, trace) -> int:
    from .invariants import euler_number

    atlas = _load_atlas(args.atlas, _params(args.param))
    gk, *_ = _complete(atlas, trace, args)
    r = _resolve(atlas, args, trace, gk)
    sec = _section(args, r["reduction"])
    with _Stage("euler", trace):
        res = euler_number(atlas, r["reduction"], sec, r["VH"])
    _write_dot(args, "Z_nu", groupoid_dot(res.zero_groupoid))
    lines = [f"{atlas.name}, section {sec.name}: Euler total {_frac(res.total)}"]
    lines += [f"  zero {p}: weight {_frac(w)}, sign {'+' if s > 0 else '-'}" for p, (w, s) in sorted(res.weighting.items())]
    result = {
        "atlas": atlas.name,
        "section": sec.name,
        "total": res.total,
        "zeros": {p: {"weight": w, "sign": s} for p, (w, s) in res.weighting.items()},
    }
    _emit(args, result, "\n".join(lines))
    return EXIT_OK


def cmd_derive(args, trace) -> int:
    from .derive import derive_atlas, embeddings_from_atlas, induced_functor, reorder_atlas, weighting_stability

    atlas = _load_atlas(args.atlas, _params(args.param))
    gk, *_ = _complete(atlas, trace, args)
    order = args.order.split(",") if args.order else None
    with _Stage("derive", trace):
        D = derive_atlas(gk, embeddings_from_atlas(gk), order)
        vrep = validate_atlas(D)
    with _Stage("functor", trace):
        F = induced_functor(D)
        stab = weighting_stability(gk, D)
    lines = [f"derived atlas from {gk.name}, order {','.join(D.derived['order'])}: " + ", ".join(f"|W_{index_label(I)}|={len(D.charts[I].points)}" for I in D.indices)]
    lines.append("== validate")
    lines.append(vrep.text())
    lines.append("== functor F_K")
    lines.append(F.report.text())
    lines.append(f"Lambda_G stable: {'yes' if not stab else 'no: ' + stab[0]}")
    result = {"validation": vrep.to_dict(), "functor": F.report.to_dict(), "weighting_mismatches": stab}
    ok = vrep.passed and F.report.passed and not stab
    out_atlas = D
    if args.reorder:
        a, b = args.reorder.split(",")
        with _Stage("reorder", trace):
            D2, S = reorder_atlas(D, a.strip(), b.strip())
            rrep = D2.reorder_report
        lines.append(f"== reorder {a},{b}")
        lines.append(rrep.text())
        result["reorder"] = rrep.to_dict()
        ok = ok and rrep.passed
        out_atlas = D2
    if args.output:
        Path(args.output).write_text(canonical(atlas_to_doc(out_atlas)), encoding="utf-8")
    args_out, args.output = args.output, None
    _emit(args, result, "\n".join(lines))
    args.output = args_out
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(args, trace) -> int:
    """Everything that applies: validation, completion, resolution, weights and pushforward, then Euler or gerbe."""
    from .invariants import PreconditionError, euler_number, gerbe_class

    atlas = _load_atlas(args.atlas, _params(args.param))
    result, lines, ok, r, gk = _weights(atlas, args, trace)
    grep = verify_groupoid(gk)
    lines.insert(0, f"{atlas.name}: valid atlas, G_K {gk.n_obj} objects / {gk.n_mor} morphisms, laws {'ok' if grep.passed else 'FAIL'}")
    result["completion"] = grep.to_dict()
    ok = ok and grep.passed
    if args.section or atlas.name.startswith("football"):
        sec = _section(args, r["reduction"])
        with _Stage("euler", trace):
            res = euler_number(atlas, r["reduction"], sec, r["VH"])
        lines.append(f"Euler total ({sec.name}): {_frac(res.total)}")
        result["euler"] = {"section": sec.name, "total": res.total}
    with _Stage("gerbe", trace):
        try:
            g = gerbe_class(atlas)
        except PreconditionError:
            g = None
    if g is not None:
        lines.append(f"gerbe verdict: {'trivial' if g.trivial else 'nontrivial'}" + (f", class {g.cls}" if g.cls is not None else ""))
        result["gerbe"] = g.to_dict()
    _emit(args, {"atlas": atlas.name, **result}, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit canonical JSON instead of text")
    common.add_argument("--dot", metavar="DIR", help="write DOT files of the groupoids built")
    common.add_argument("--seed", type=int, default=None, help="seed for the cover-reduction search order")
    common.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="fixture parameter (repeatable)")
    common.add_argument("--trace", action="store_true", help="print stage timings to stderr")
    common.add_argument("-o", "--output", metavar="FILE", help="write the result to FILE")

    p = argparse.ArgumentParser(prog="orbatlas", description="Finite orbifold atlases: validation, completion, resolution and invariants.")
    sub = p.add_subparsers(dest="command", required=True)

    def atlas_cmd(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("atlas", help="atlas JSON file, or fixture:NAME")
        sp.set_defaults(func=func)
        return sp

    atlas_cmd("validate", cmd_validate, "check the atlas axioms")
    fx = sub.add_parser("fixture", parents=[common], help="emit a built-in fixture as JSON")
    fx.add_argument("name", choices=FIXTURES)
    fx.set_defaults(func=cmd_fixture)
    atlas_cmd("complete", cmd_complete, "build G_K and B_K and check their laws")
    atlas_cmd("resolve", cmd_resolve, "cover reduction, V_K, V^H and the wnb checks")
    atlas_cmd("weights", cmd_weights, "weighting, branch locus and pushforward")
    atlas_cmd("gerbe", cmd_gerbe, "Z/2 gerbe class and triviality verdict")
    eu = atlas_cmd("euler", cmd_euler, "Euler total of a section")
    eu.add_argument("--section", help="section JSON file, or a built-in name (football: poles, poles+pair)")
    de = atlas_cmd("derive", cmd_derive, "rebuild an atlas from G_K and its basic charts")
    de.add_argument("--order", help="comma-separated order of the basic charts")
    de.add_argument("--reorder", metavar="A,B", help="also swap two adjacent basic charts and check the isomorphism")
    rp = atlas_cmd("report", cmd_report, "run the whole pipeline")
    rp.add_argument("--section", help="section for the Euler total")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    trace: list | None = [] if args.trace else None
    try:
        code = args.func(args, trace)
    except DocumentError as e:
        sys.stderr.write(f"orbatlas: [input] {e}\n")
        code = EXIT_IO
    except StageError as e:
        sys.stderr.write(f"orbatlas: {e}\n")
        code = EXIT_FAIL
    except (AtlasError, KeyError, ValueError) as e:
        sys.stderr.write(f"orbatlas: [{args.command}] {type(e).__name__}: {e}\n")
        code = EXIT_FAIL
    if trace:
        for row in trace:
            sys.stderr.write(f"  {row['stage']:<12} {row['seconds']:>8.3f}s {'ok' if row['ok'] else 'error'}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
