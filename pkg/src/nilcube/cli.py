"""Command line front end.

Every command prints ``key: value`` lines ending in ``status: pass|fail|error``
(or one JSON document with ``--json``).  Exit codes: 0 pass, 1 fail, 2 usage
or input error, 3 internal inconsistency.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .cube import DimensionError, canonical_subset_order
from .groups import AbelianGroup, GroupParseError, finite_abelian, frac, lookup_group
from .hostkra import CornerError, face_coordinates, first_bad_coordinate, hk_corner_complete
from .nilmanifold import HEIS_NIL, InconsistencyError, TorusNilmanifold, nil_corner_complete, nil_cube_membership
from .report import EXIT_CODES, Report

USAGE_EXIT = EXIT_CODES["error"]


class UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _element_lines(path: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def _parse_elements(path: str, parse) -> list:
    vals = []
    for lineno, line in _element_lines(path):
        try:
            vals.append(parse(line))
        except (GroupParseError, ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"{path}: line {lineno}: {exc}") from None
    return vals


def _group(ident: str):
    try:
        return lookup_group(ident)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _subset_name(s: int, k: int) -> str:
    return "".join(str(i + 1) for i in range(k) if s >> i & 1)


# -- hk ---------------------------------------------------------------------------


def cmd_hk(args) -> Report:
    G = _group(args.group)
    if args.action == "complete":
        corner = _parse_elements(args.corner, G.parse)
        rep = Report("hk-complete")
        try:
            top = hk_corner_complete(corner, G)
        except CornerError as err:
            raise UsageError(str(err)) from None
        rep.metrics["k"] = (len(corner) + 1).bit_length() - 1
        rep.metrics["completion"] = G.format(top)
        return rep
    config = _parse_elements(args.config, G.parse)
    fc = face_coordinates(config, G)
    k = fc.k
    rep = Report(f"hk-{args.action}")
    rep.metrics["k"] = k
    for i, (s, x) in enumerate(zip(canonical_subset_order(k), fc.coords), start=1):
        rep.metrics[f"x{i}[{_subset_name(s, k)}]"] = G.format(x)
    bad = first_bad_coordinate(fc, G)
    if args.action == "check":
        rep.metrics["cube"] = bad is None
        if bad is not None:
            rep.add("face-coordinate", f"subset {{{_subset_name(bad[0], k)}}}",
                    f"{G.format(bad[1])} outside G_{bin(bad[0]).count('1')}")
    return rep


# -- nil ----------------------------------------------------------------------------


def _manifold(ident: str):
    if ident == "heis":
        return HEIS_NIL
    if ident.startswith("torus"):
        try:
            levels = [int(c) for c in ident[5:].replace("t", "")] or [1]
        except ValueError:
            levels = []
        if levels and all(lv >= 1 for lv in levels):
            return TorusNilmanifold(*levels)
    raise UsageError(f"unknown nilmanifold {ident!r}; use heis or torus1, torus2, torus1t2")


def cmd_nil(args) -> Report:
    M = _manifold(args.manifold)
    rep = Report(f"nil-{args.action}")
    if args.action == "check":
        pts = _parse_elements(args.config, M.parse)
        verdict = nil_cube_membership(pts, M)
        rep.metrics["k"] = len(pts).bit_length() - 1
        rep.metrics["cube"] = verdict.is_cube
        if verdict.is_cube:
            rep.metrics["lift"] = " ".join(M.group.format(g) for g in verdict.certificate)
        else:
            rep.add("not-a-cube", "configuration", verdict.violation or "")
        return rep
    pts = _parse_elements(args.corner, M.parse)
    try:
        top = nil_corner_complete(pts, M)
    except CornerError as err:
        raise UsageError(f"lower face {err.face_index + 1} (omega_{err.face_index + 1} = 0) is not a cube") from None
    rep.metrics["completion"] = M.format(top)
    return rep


# -- space --------------------------------------------------------------------------


def _load_space(path: str):
    from .cubespace.textio import read_cubespace
    return read_cubespace(_read_text(path))


def _load_map(path: str, source):
    from .cubespace.textio import read_map
    return read_map(_read_text(path), source)


def cmd_space(args, out) -> Report | None:
    from .cubespace import checks
    from .cubespace.canonical import canonical_tower, fiber_surjectivity
    from .cubespace.space import build_hk_cubespace
    from .cubespace.structure import structure_group
    from .cubespace.textio import write_cubespace

    if args.action == "make-ds":
        G = _group(args.group)
        if not isinstance(G, AbelianGroup) or not G.is_finite():
            raise UsageError(f"{args.group} is not a finite abelian group")
        A = finite_abelian(tuple(G.kinds), args.s)
        out.write(write_cubespace(build_hk_cubespace(A, args.kmax)))
        return None
    X = _load_space(args.file)
    if args.action == "certify":
        X2, rep = checks.certify_nilspace(X, exhaustive=args.exhaustive)
        rep.metrics["points"] = X.n
        rep.metrics["k_max"] = X.k_max
        rep.metrics["certified"] = ",".join(sorted(X2.certified)) or "none"
        return rep
    if args.action == "uniqueness":
        return checks.check_uniqueness(X, args.k)
    if args.action == "completion":
        return checks.check_completion(X, args.k)
    X, cert = checks.certify_nilspace(X)
    if X.certified_degree is None:
        cert.add("not-a-nilspace", "input", "certification failed; see findings")
        return cert
    if args.action == "tower":
        tower = canonical_tower(X)
        rep = tower.report
        rep.metrics.clear()
        rep.metrics["degree"] = X.certified_degree
        rep.metrics["heights"] = tower.heights
        for t, p in zip(range(X.certified_degree, -1, -1), tower.levels):
            rep.metrics[f"pi_{t}"] = " ".join(p.target.labels)
        return rep
    if args.action == "structure-group":
        if args.map:
            f = _load_map(args.map, X)
            Y, _ = checks.certify_nilspace(f.target)
            if Y.certified_degree is None:
                raise UsageError("map target does not certify as a nilspace")
            f = type(f)(X, Y, f.mapping)
        else:
            f = X
        G = structure_group(f, args.s)
        rep = G.report
        rep.metrics = {"order": G.order, "invariant_factors": " ".join(map(str, G.invariant_factors)) or "1",
                       "isomorphism_type": G.isomorphism_type, "elements": " ".join(G.labels),
                       **{k: v for k, v in rep.metrics.items() if k.startswith("cubes.")}}
        return rep
    if args.action == "fibration":
        f = _load_map(args.map, X)
        try:
            rep = checks.check_fibration(f, args.k)
        except checks.NotAMorphism as exc:
            rep = Report("fibration")
            rep.add("not-a-morphism", "map", str(exc))
            return rep
        Y, _ = checks.certify_nilspace(f.target)
        if Y.certified_degree is not None:
            g = type(f)(X, Y, f.mapping)
            top = rep.metrics["checked_up_to_k"]
            fs = fiber_surjectivity(g, up_to=min(top, X.k_max, Y.k_max) - 1)
            rep.metrics["fiber_surjective"] = fs.ok
            if fs.ok != rep.ok:
                raise InconsistencyError("fibration check and fiber-surjectivity disagree")
        return rep
    raise UsageError(f"unknown space action {args.action}")


# -- gowers -------------------------------------------------------------------------


def _load_fn(path: str):
    from .gowers import CyclicFunction, GowersError
    try:
        return CyclicFunction.from_csv(_read_text(path))
    except GowersError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_gowers(args, out) -> Report | None:
    from .gowers import (
        correlation,
        gowers_norm_details,
        heisenberg_linear,
        nilsequence,
        parallelepiped_average,
        z_phase,
    )

    if args.action == "nilseq":
        try:
            alpha, beta = frac(args.alpha), frac(args.beta)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad rational: {exc}") from None
        out.write(nilsequence(z_phase, heisenberg_linear(alpha, beta), args.N).to_csv())
        return None
    if args.action == "correlate":
        f, g = _load_fn(args.fn), _load_fn(getattr(args, "with"))
        c = correlation(f, g)
        rep = Report("correlation")
        rep.metrics.update({"N": f.N, "re": c.real, "im": c.imag, "abs": abs(c)})
        return rep
    mc = {"monte_carlo": args.monte_carlo, "samples": args.samples, "seed": args.seed}
    if args.action == "norm":
        f = _load_fn(args.fn)
        if args.N is not None and args.N != f.N:
            raise UsageError(f"--N {args.N} does not match the {f.N} values in {args.fn}")
        res = gowers_norm_details(f, args.k, **mc)
        rep = Report("gowers-norm")
        rep.metrics.update({"k": args.k, "N": f.N, "norm": res.value})
        _describe_average(rep, res.average)
        return rep
    if args.action == "inner":
        fns = [_load_fn(p) for p in args.fns]
        avg = parallelepiped_average(fns, args.k, **mc)
        rep = Report("gowers-inner")
        rep.metrics.update({"k": args.k, "N": fns[0].N, "re": avg.value.real, "im": avg.value.imag,
                            "abs": abs(avg.value)})
        _describe_average(rep, avg)
        return rep
    raise UsageError(f"unknown gowers action {args.action}")


def _describe_average(rep: Report, avg) -> None:
    rep.metrics["mode"] = "exhaustive" if avg.exhaustive else "monte-carlo"
    if not avg.exhaustive:
        rep.metrics["samples"] = avg.samples
        rep.metrics["seed"] = avg.seed


# -- parser -------------------------------------------------------------------------


def _rational(text: str) -> Fraction:
    try:
        return frac(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON document")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")

    p = argparse.ArgumentParser(prog="nilcube", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    hk = sub.add_parser("hk", help="Host-Kra cubes of a filtered group")
    hks = hk.add_subparsers(dest="action", required=True)
    for name in ("check", "factor"):
        q = hks.add_parser(name, parents=[common])
        q.add_argument("--group", required=True)
        q.add_argument("--config", required=True, help="file with one element per line, vertex order")
    q = hks.add_parser("complete", parents=[common])
    q.add_argument("--group", required=True)
    q.add_argument("--corner", required=True, help="file with 2^k - 1 elements")

    nil = sub.add_parser("nil", help="cubes on nilmanifolds")
    nils = nil.add_subparsers(dest="action", required=True)
    q = nils.add_parser("check", parents=[common])
    q.add_argument("--manifold", default="heis")
    q.add_argument("--config", required=True)
    q = nils.add_parser("complete", parents=[common])
    q.add_argument("--manifold", default="heis")
    q.add_argument("--corner", required=True)

    sp = sub.add_parser("space", help="finite cubespaces")
    sps = sp.add_subparsers(dest="action", required=True)
    q = sps.add_parser("certify", parents=[common])
    q.add_argument("file", nargs="?", default="-")
    q.add_argument("--exhaustive", action="store_true", help="check every cube morphism, not only generators")
    for name in ("uniqueness", "completion"):
        q = sps.add_parser(name, parents=[common])
        q.add_argument("file", nargs="?", default="-")
        q.add_argument("--k", type=int, required=True)
    q = sps.add_parser("tower", parents=[common])
    q.add_argument("file", nargs="?", default="-")
    q = sps.add_parser("structure-group", parents=[common])
    q.add_argument("file", nargs="?", default="-")
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--map", help="map file (target space plus [map]); default: map to a point")
    q = sps.add_parser("fibration", parents=[common])
    q.add_argument("file", nargs="?", default="-")
    q.add_argument("--map", required=True)
    q.add_argument("--k", type=int, help="check corners up to this dimension")
    q = sps.add_parser("make-ds", parents=[common])
    q.add_argument("--group", required=True, help="finite abelian group id, e.g. z4 or z2xz4")
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--kmax", type=int, required=True)

    gw = sub.add_parser("gowers", help="Gowers norms and nilsequences")
    gws = gw.add_subparsers(dest="action", required=True)
    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--monte-carlo", action="store_true", help="estimate above the exhaustive guard")
    mc.add_argument("--samples", type=int, default=200_000)
    q = gws.add_parser("norm", parents=[common, mc])
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--N", type=int)
    q.add_argument("--fn", required=True)
    q = gws.add_parser("inner", parents=[common, mc])
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--fns", nargs="+", required=True)
    q = gws.add_parser("nilseq", parents=[common])
    q.add_argument("--alpha", type=_rational, required=True)
    q.add_argument("--beta", type=_rational, required=True)
    q.add_argument("--N", type=int, required=True)
    q = gws.add_parser("correlate", parents=[common])
    q.add_argument("--fn", required=True)
    q.add_argument("--with", required=True)
    return p


def _emit(rep: Report, as_json: bool, out) -> None:
    out.write((rep.to_json() if as_json else rep.render()) + "\n")


def _emit_error(kind: str, message: str, as_json: bool, out) -> None:
    if as_json:
        out.write(json.dumps({"status": kind, "error": message}, sort_keys=True) + "\n")
    else:
        out.write(f"error: {message}\nstatus: {kind}\n")


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code else 0
    from .cubespace.space import CubespaceError
    from .gowers import GowersError
    try:
        if args.command == "hk":
            rep = cmd_hk(args)
        elif args.command == "nil":
            rep = cmd_nil(args)
        elif args.command == "space":
            rep = cmd_space(args, out)
        else:
            rep = cmd_gowers(args, out)
    except InconsistencyError as exc:
        _emit_error("inconsistent", str(exc), args.json, out)
        return EXIT_CODES["inconsistent"]
    except (UsageError, CubespaceError, GowersError, GroupParseError, DimensionError, ValueError) as exc:
        _emit_error("error", str(exc), args.json, out)
        return USAGE_EXIT
    if rep is None:
        return 0
    _emit(rep, args.json, out)
    return EXIT_CODES[rep.status]


if __name__ == "__main__":
    sys.exit(main())
