"""Command-line entry point: ``kgbounds <command> [options]``.

Exit codes: 0 success, 1 domain error, 2 resource or budget error, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

EXIT_OK, EXIT_DOMAIN, EXIT_RESOURCE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str = ""
    configs: list = field(default_factory=list)
    packing: str | None = None
    d: int | None = None
    m: int | None = None
    n: int = 1
    group: str = "auto"
    tol: float = 1e-7
    restarts: int = 1000
    budget: int = 10**12
    seed: int = 0
    threads: int = 1
    out: str | None = None

    def to_json(self) -> dict:
        return asdict(self)


def _dump(obj, out=None, timestamp=True):
    if timestamp:
        obj = dict(obj, timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))
    text = json.dumps(obj, sort_keys=True, indent=1, default=_default)
    if out:
        d = os.path.dirname(out)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _default(o):
    from fractions import Fraction

    from .exact import ExactScalar

    if isinstance(o, ExactScalar):
        return o.to_json()
    if isinstance(o, Fraction):
        return [o.numerator, o.denominator]
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _exact_json(v):
    from fractions import Fraction

    from .exact import ExactScalar

    if isinstance(v, (int, Fraction)):
        v = ExactScalar(v)
    return {"exact": v.to_json(), "float": float(v), "text": str(v)} if isinstance(v, ExactScalar) else {"float": float(v)}


# -- configuration loading ------------------------------------------------


def _load_configuration(cfg: RunConfig, name=None):
    from .configurations import augment_edge_midpoints, generate, parse_packing

    if name is None and cfg.packing:
        if cfg.d is None or cfg.m is None:
            raise UsageError("--packing needs --d and --m")
        with open(cfg.packing) as fh:
            return parse_packing(fh.read(), cfg.d, cfg.m, name=os.path.basename(cfg.packing))
    name = name or (cfg.configs[0] if cfg.configs else None)
    if name is None:
        raise UsageError("need --config NAME or --packing FILE")
    if name.endswith("+midpoints"):
        return augment_edge_midpoints(generate(name[: -len("+midpoints")]))
    return generate(name)


def _load_pair(cfg: RunConfig):
    A = _load_configuration(cfg, cfg.configs[0] if cfg.configs else None)
    B = _load_configuration(cfg, cfg.configs[1]) if len(cfg.configs) > 1 else None
    return A, B


def _group(cfg: RunConfig, A, B, P):
    from .polytope import SignedPermutationGroup, group_for

    if cfg.group == "none":
        return None
    if cfg.group == "auto":
        if A.mirrors is None and (B is None or B.mirrors is None):
            return None
        return group_for(A, B, P=P)
    with open(cfg.group) as fh:
        G = SignedPermutationGroup.from_json(json.load(fh))
    target = P.exact if P.exact is not None else P.values
    if not G.is_invariant(target):
        raise ValueError("the supplied group does not fix the correlation matrix")
    return G


# -- commands -------------------------------------------------------------


def cmd_catalog(cfg, args):
    from .configurations import catalog_table

    rows = catalog_table()
    if cfg.out:
        _dump({"catalog": [{"name": n, "d": d, "m": m} for n, d, m in rows]}, cfg.out, not args.no_timestamp)
    print(f"{'name':<20} {'d':>2} {'m':>4}")
    for n, d, m in rows:
        print(f"{n:<20} {d:>2} {m:>4}")
    return EXIT_OK


def cmd_gen(cfg, args):
    from .configurations import augment_edge_midpoints

    conf = _load_configuration(cfg)
    if args.augment:
        conf = augment_edge_midpoints(conf, mode=args.augment)
    _dump({"configuration": conf.to_json(), "run": cfg.to_json()}, cfg.out, not args.no_timestamp)
    return EXIT_OK


def cmd_gram(cfg, args):
    from .configurations import gram

    A, B = _load_pair(cfg)
    P = gram(A, B)
    obj = {"shape": list(P.shape), "values": P.values, "run": cfg.to_json()}
    if P.exact is not None:
        obj["exact"] = P.exact.to_json()
    _dump(obj, cfg.out, not args.no_timestamp)
    return EXIT_OK


def cmd_facet(cfg, args):
    from .bounds import CertificateStore, ratio_certificate
    from .configurations import gram
    from .polytope import invariant_basis
    from .projection import facet_loop
    from .solver import sdp1_branch_and_bound

    if cfg.n != 1:
        raise UsageError("facet certification is exact only for --n 1")
    A_conf, B_conf = _load_pair(cfg)
    P = gram(A_conf, B_conf)
    G = _group(cfg, A_conf, B_conf, P)
    basis = invariant_basis(G) if G is not None else None
    res = facet_loop(P, 1, G, restarts=cfg.restarts, tol=cfg.tol, seed=cfg.seed, basis=basis)
    obj = {
        "configuration": [A_conf.name] + ([B_conf.name] if B_conf is not None else []),
        "d": A_conf.d,
        "status": res.status,
        "codim": res.codim,
        "history": res.history,
        "tolerance_schedule": res.meta.get("tolerance_schedule"),
        "run": cfg.to_json(),
        "P": P.exact.to_json() if P.exact is not None else P.values,
    }
    if P.is_gram and P.exact is not None and P.m1 <= 34:
        sp = sdp1_branch_and_bound(P.exact, restarts=cfg.restarts, seed=cfg.seed, node_budget=cfg.budget)
        ip = P.exact.inner(P.exact)  # SDP_d[P] is attained by the configuration itself
        obj["P_ratio"] = _exact_json(ip / sp.value) if sp.optimal else {"float": float(ip) / float(sp.value)}
        obj["P_sdp1"] = sp.to_json()
    if res.is_facet:
        obj.update(
            A=res.normal.to_json(),
            offset=_exact_json(res.offset),
            ratio=_exact_json(res.ratio),
            active=[s.to_json() for s in res.active.strategies],
            weights=res.active.weights,
        )
        if res.lam is not None:
            obj["lambda"] = _exact_json(res.lam)
        if args.store:
            sol = sdp1_branch_and_bound(res.normal, restarts=cfg.restarts, seed=cfg.seed)
            cert = ratio_certificate(P, res.normal, res.normal.inner(P.exact), sol, A_conf.d, 1,
                                     label=f"{A_conf.name} facet")
            CertificateStore(args.store).add(cert)
    elif res.separating is not None:
        obj["separating"] = res.separating
        obj["separating_ratio"] = res.meta.get("separating_ratio")
    _dump(obj, cfg.out, not args.no_timestamp)
    if cfg.out:
        line = f"{res.status}"
        if res.is_facet:
            line += f" ratio={res.ratio}" + (f" lambda={res.lam}" if res.lam is not None else "")
        print(line)
    return EXIT_OK


def _read_matrix(path):
    from .solver import read_instance

    if path is None:
        raise UsageError("need --in FILE")
    return read_instance(path)


def cmd_solve_exact(cfg, args):
    from .solver import sdp1_rectangular

    M = _read_matrix(args.input)
    res = sdp1_rectangular(M, node_budget=cfg.budget, restarts=cfg.restarts, seed=cfg.seed)
    _dump({"result": res.to_json(), "run": cfg.to_json()}, cfg.out, not args.no_timestamp)
    return EXIT_OK if res.optimal else EXIT_RESOURCE


def cmd_solve_heur(cfg, args):
    from .oracle import heuristic_sdp

    M = _read_matrix(args.input)
    res = heuristic_sdp(M, cfg.n, cfg.restarts, cfg.seed, workers=cfg.threads)
    _dump({"value": res.value, "strategy": res.strategy.to_json(), "restarts": res.restarts_used,
           "seed": res.seed, "meta": res.meta, "run": cfg.to_json()}, cfg.out, not args.no_timestamp)
    return EXIT_OK


def cmd_bound(cfg, args):
    from .bounds import (best_known, CertificateStore, davie_bound, proposition1_upper, psd_constant_exact,
                         soa_lower_n2_exact)

    if args.davie:
        v, lam = davie_bound()
        _dump({"davie": {"value": v, "lambda": lam}}, cfg.out, not args.no_timestamp)
        return EXIT_OK
    if args.prop1:
        alpha, ea, eb = args.prop1
        cert = proposition1_upper(alpha, ea, eb, d=cfg.d or 3, n=cfg.n if cfg.n > 1 else 2)
        _dump({"certificate": cert.to_json()}, cfg.out, not args.no_timestamp)
        return EXIT_OK
    if cfg.d is None:
        raise UsageError("bound needs --d, --davie or --prop1")
    store = CertificateStore(args.store) if args.store else None
    if args.best:
        row = best_known(cfg.d, store)
        chain = " -> ".join(row["monotonicity_chain"]) or f"d={cfg.d}"
        print(f"K_G({cfg.d}) >= {row['value_float']:.5f}  [{row['provenance']}] {row['source']}  chain: {chain}")
        if cfg.out:
            _dump({"best_known": row}, cfg.out, not args.no_timestamp)
        return EXIT_OK
    obj = {"d": cfg.d, "psd_constant": str(psd_constant_exact(cfg.d)), "psd_constant_float": float(psd_constant_exact(cfg.d))}
    if cfg.d >= 3:
        obj["soa_lower_n2"] = str(soa_lower_n2_exact(cfg.d))
        obj["soa_lower_n2_float"] = float(soa_lower_n2_exact(cfg.d))
    _dump(obj, cfg.out, not args.no_timestamp)
    return EXIT_OK


def cmd_report(cfg, args):
    from .bounds import CertificateStore, report

    store = CertificateStore(args.store)
    csv_path = args.csv or (os.path.join(cfg.out, "report.csv") if cfg.out else None)
    if csv_path and os.path.dirname(csv_path):
        os.makedirs(os.path.dirname(csv_path), exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows, text = report(store, d_max=args.d_max, include_reported=args.with_data,
                            include_literature=args.with_data, csv_path=csv_path)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(text)
    return EXIT_OK


COMMANDS = {
    "catalog": cmd_catalog,
    "gen": cmd_gen,
    "gram": cmd_gram,
    "facet": cmd_facet,
    "solve-exact": cmd_solve_exact,
    "solve-heur": cmd_solve_heur,
    "bound": cmd_bound,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--run-config", help="JSON file with RunConfig fields used as defaults")
    common.add_argument("--config", action="append", default=None, help="catalog name (repeat for a second side)")
    common.add_argument("--packing")
    common.add_argument("--d", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--group")
    common.add_argument("--tol", type=float)
    common.add_argument("--restarts", type=int)
    common.add_argument("--budget", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out")
    common.add_argument("--no-timestamp", action="store_true")

    p = _Parser(prog="kgbounds", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("catalog", parents=[common])
    g = sub.add_parser("gen", parents=[common])
    g.add_argument("--augment", choices=["hull", "all-pairs"])
    sub.add_parser("gram", parents=[common])
    f = sub.add_parser("facet", parents=[common])
    f.add_argument("--store")
    for name in ("solve-exact", "solve-heur"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--in", dest="input")
    b = sub.add_parser("bound", parents=[common])
    b.add_argument("--best", action="store_true")
    b.add_argument("--store")
    b.add_argument("--davie", action="store_true")
    b.add_argument("--prop1", nargs=3, type=float, metavar=("ALPHA", "ETA_A", "ETA_B"))
    r = sub.add_parser("report", parents=[common])
    r.add_argument("--store", required=True)
    r.add_argument("--csv")
    r.add_argument("--with-data", action="store_true", help="also use the shipped literature and reported values")
    r.add_argument("--d-max", type=int, help="extend rows up to this order by monotonicity")
    return p


def _run_config(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.run_config:
        with open(args.run_config) as fh:
            base = json.load(fh)
        for k, v in base.items():
            if k not in RunConfig.__dataclass_fields__:
                raise UsageError(f"unknown run-config field {k!r}")
            setattr(cfg, k, v)
    if args.config:
        cfg.configs = list(args.config)
    for k in ("packing", "d", "m", "n", "group", "tol", "restarts", "budget", "seed", "threads", "out"):
        v = getattr(args, k)
        if v is not None:
            setattr(cfg, k, v)
    return cfg


def main(argv=None) -> int:
    from .configurations import CatalogError, PackingParseError
    from .polytope import GroupTooLarge
    from .solver import ResourceError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        cfg = _run_config(args)
        if cfg.threads and cfg.threads > 1:
            try:
                import numba

                numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
            except ImportError:
                pass
        return COMMANDS[args.command](cfg, args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); keep the interpreter from complaining at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except UsageError as e:
        print(f"kgbounds: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, GroupTooLarge, MemoryError) as e:
        print(f"kgbounds: resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (CatalogError, PackingParseError, ValueError, FileNotFoundError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"kgbounds: error: {msg}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
