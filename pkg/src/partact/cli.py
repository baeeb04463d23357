"""partact: run the constructions on a system file and report every check.

Exit status: 0 when every check passes, 1 when some check fails, 2 on
parse or schema errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any

import numpy as np

from .core import Report, default_tol

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
COMMANDS = ("validate", "envelope", "crossed", "kernels", "takai-check", "dilate", "spectrum", "corpus")


class InputError(Exception):
    pass


# ---------------------------------------------------------------- serialization


def canonical(obj: Any) -> Any:
    """Plain JSON data with floats rounded to 12 significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        x = float(f"{x:.12g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, (complex, np.complexfloating)):
        return [canonical(obj.real), canonical(obj.imag)]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(canonical(v) for v in obj)
    return str(obj)


def dumps(obj: Any) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2)


def check_summary(report: Report) -> dict:
    return {c.name: ({"ok": c.ok, "residual": c.residual} if c.residual is not None else {"ok": c.ok})
            for c in report.checks}


# ---------------------------------------------------------------- commands


def _load(path: str, kinds: tuple[str, ...]):
    from .corpus import load
    try:
        obj, doc = load(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if doc["kind"] not in kinds:
        raise InputError(f"{path}: command needs kind in {list(kinds)}, got {doc['kind']!r}")
    if "tol" in doc and "PARTACT_TOL" not in os.environ:
        try:
            os.environ["PARTACT_TOL"] = repr(float(doc["tol"]))
        except (TypeError, ValueError):
            raise InputError(f"{path}: \"tol\" must be a number") from None
    return obj, doc["kind"]


def _bundle(obj, kind):
    from .fellbundle import semidirect_bundle
    return semidirect_bundle(obj) if kind == "alg" else obj


def cmd_validate(args) -> tuple[dict, Report]:
    obj, kind = _load(args.path, ("alg", "top", "bundle", "prep"))
    rep = Report()
    out: dict = {"kind": kind}
    if kind == "alg":
        from .fellbundle import semidirect_bundle, validate_bundle
        from .paction import to_linear, validate_alg, validate_linear
        rep.extend(validate_alg(obj), prefix="blocks: ")
        rep.extend(validate_linear(to_linear(obj)), prefix="linear: ")
        if rep.ok:
            rep.extend(validate_bundle(semidirect_bundle(obj)), prefix="bundle: ")
        out.update(group_order=obj.G.order, dim_A=obj.A.dim, commutative=obj.is_commutative(), is_global=obj.is_global())
    elif kind == "top":
        from .finspace import graph_closed, validate_top
        rep.extend(validate_top(obj))
        out.update(points=len(obj.X.points), graph_closed=graph_closed(obj) if rep.ok else None)
    elif kind == "bundle":
        from .fellbundle import validate_bundle
        rep.extend(validate_bundle(obj))
        out.update(fiber_dims=obj.fiber_dims(), carrier_dim=obj.carrier_dim)
    else:
        from .dilation import validate_prep
        rep.extend(validate_prep(obj))
        out.update(dim=obj.dim, group_order=obj.G.order)
    return out, rep


def cmd_envelope(args) -> tuple[dict, Report]:
    obj, kind = _load(args.path, ("alg", "top"))
    if kind == "top":
        from .finspace import enveloping_space, graph_closed, is_hausdorff, validate_top
        rep = validate_top(obj)
        if not rep.ok:
            return {}, rep
        env = enveloping_space(obj)
        h, gc = is_hausdorff(env.space), graph_closed(obj)
        rep.add("hausdorff iff graph closed", h == gc)
        return {"points": list(env.space.points), "opens": len(env.space.opens), "hausdorff": h,
                "graph_closed": gc}, rep
    from .morita import morita_envelope
    env = morita_envelope(obj)
    return {"dim_k": env.kernels.dim, "dim_I": env.ideal.dim, "blocks_k": env.kernels.blocks,
            "gamma_checks": check_summary(env.report)}, env.report


def cmd_crossed(args) -> tuple[dict, Report]:
    from .repcross import reduced_algebra
    obj, kind = _load(args.path, ("alg", "bundle"))
    B = _bundle(obj, kind)
    red = reduced_algebra(B, default_tol())
    gens = [f"{B.G.label(t)}:{i}" for t in B.G for i in range(B.fiber_dim(t))]
    return {"dim": red.dim, "blocks": red.blocks(), "generators": gens}, red.report


def cmd_kernels(args) -> tuple[dict, Report]:
    from .fellbundle import is_saturated
    from .kernels import ideal_I, kernel_algebra, orbit_span
    obj, kind = _load(args.path, ("alg", "bundle"))
    B = _bundle(obj, kind)
    ka = kernel_algebra(B, default_tol())
    I = ideal_I(B, ka.layout)
    rep = Report()
    rep.extend(ka.report)
    span = orbit_span(B, I)
    sat = is_saturated(B)
    rep.add("saturated iff dim I = dim k", sat == (I.dim == ka.dim))
    rep.add("orbit of I spans k", span.dim == ka.dim, detail={"orbit_span_dim": span.dim})
    return {"dim": ka.dim, "blocks": ka.blocks, "dim_I": I.dim, "saturated": sat,
            "orbit_span_dim": span.dim}, rep


def cmd_takai(args) -> tuple[dict, Report]:
    from .takai import takai_iso
    obj, kind = _load(args.path, ("alg", "bundle"))
    iso = takai_iso(_bundle(obj, kind), np.random.default_rng(args.seed))
    return {"dims": [iso.crossed.dim, iso.kernels.dim], "sigma_defect": iso.sigma_defect,
            "equivariance_defect": iso.equivariance_defect}, iso.report


def cmd_dilate(args) -> tuple[dict, Report]:
    from .dilation import dilate, psd_min_eigenvalue
    u, _ = _load(args.path, ("prep",))
    if u.G.order > args.max_group_order:
        raise InputError(f"{args.path}: group order {u.G.order} exceeds --max-group-order {args.max_group_order}")
    d = dilate(u)
    residuals = {c.name: c.residual for c in d.report.checks if c.residual is not None}
    return {"dim_H_tilde": d.dim, "residuals": residuals, "psd_min_eigenvalue": psd_min_eigenvalue(u)}, d.report


def cmd_spectrum(args) -> tuple[dict, Report]:
    from .morita import induced_spectrum_envelope
    obj, _ = _load(args.path, ("alg",))
    iso = induced_spectrum_envelope(obj)
    return {"points": len(iso.mapping), "mapping": {str(k): v for k, v in iso.mapping.items()}}, iso.report


def cmd_corpus(args) -> tuple[dict, Report]:
    from .suites import run_all
    results = run_all(args.seed, args.count, args.max_group_order)
    rep = Report()
    for r in results:
        rep.add(r.name, r.ok, residual=r.max_residual, detail={"count": r.count, "failed": len(r.failures)})
    return {"seed": args.seed, "count": args.count, "suites": {r.name: r.to_dict() for r in results}}, rep


HANDLERS = {"validate": cmd_validate, "envelope": cmd_envelope, "crossed": cmd_crossed, "kernels": cmd_kernels,
            "takai-check": cmd_takai, "dilate": cmd_dilate, "spectrum": cmd_spectrum, "corpus": cmd_corpus}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="rank tolerance (default: PARTACT_TOL or 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--json", action="store_true", help="print only the JSON report")
    common.add_argument("--max-group-order", type=int, default=4, help="largest group order to accept or generate")
    p = argparse.ArgumentParser(prog="partact", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "corpus":
            sp.add_argument("--count", type=int, default=20, help="systems and representations per suite")
        else:
            sp.add_argument("path", help="system file, or a builtin name such as sys-p2")
    return p


def _human(command: str, payload: dict, report: Report) -> str:
    lines = [f"{command}: {'ok' if report.ok else 'FAILED'}"]
    for c in report.checks:
        res = "" if c.residual is None else f"  residual {c.residual:.3g}"
        lines.append(f"  [{'pass' if c.ok else 'FAIL'}] {c.name}{res}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    saved = os.environ.get("PARTACT_TOL")
    if args.tol is not None:
        os.environ["PARTACT_TOL"] = repr(args.tol)
    try:
        payload, report = HANDLERS[args.command](args)
    except InputError as exc:
        if args.json:
            print(dumps({"error": str(exc), "ok": False}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        if saved is None:
            os.environ.pop("PARTACT_TOL", None)
        else:
            os.environ["PARTACT_TOL"] = saved
    doc = {"command": args.command, "ok": report.ok, "result": payload, "checks": report.to_dict()["checks"]}
    if not args.json:
        print(_human(args.command, payload, report))
    print(dumps(doc))
    return EXIT_OK if report.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
