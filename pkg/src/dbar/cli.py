"""Command line front end.

Every subcommand accepts the global flags, reads an optional JSON config
whose keys mirror the flag names, and writes one JSON document or CSV table.

Exit codes: 0 success, 1 unexpected failure, 2 bad configuration or input,
3 violated mathematical hypothesis, 4 numeric singularity.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import (
    ConfigurationError, ContractViolation, DomainError, EvaluationError, ParseError,
    PreconditionError, SingularEvaluationError,
)

SCHEMA = 1
REQUIRED = object()


@dataclass(frozen=True)
class Opt:
    kind: str  # int, float, str, floats, bool, complex
    default: object = None
    help: str = ""
    choices: tuple | None = None


GLOBAL = {
    "nr": Opt("int", None, "radial quadrature nodes"),
    "ntheta": Opt("int", None, "angular quadrature nodes"),
    "seed": Opt("int", 0, "seed for batteries and sampled points"),
    "out": Opt("str", None, "output path (default stdout)"),
    "format": Opt("str", "json", "output format", ("json", "csv")),
}

COMMANDS = {
    "solve-product": {
        "form": Opt("str", REQUIRED, "closed (0,q)-form, e.g. 'conj(w2):dw1, conj(w1):dw2'"),
        "method": Opt("str", "auto", "solution path", ("auto", "symbolic", "numeric")),
        "points": Opt("int", 8, "number of sample points in the report"),
    },
    "solve-hartogs": {
        "form": Opt("str", REQUIRED, "closed (0,1)-form in z1, z2"),
        "mode": Opt("str", "optimal", "operator", ("basic", "optimal")),
        "k": Opt("int", 1, "Sobolev order"),
        "p": Opt("float", 5.0, "integrability exponent"),
    },
    "norm": {
        "expr": Opt("str", REQUIRED, "function or form"),
        "domain": Opt("str", "disc", "integration domain", ("disc", "bidisc", "hartogs")),
        "k": Opt("int", 1, "Sobolev order"),
        "p": Opt("float", 2.0, "integrability exponent"),
        "weight": Opt("str", None, "weight expression"),
    },
    "apstar": {
        "weight": Opt("str", REQUIRED, "weight in w1, w2"),
        "p": Opt("float", REQUIRED, "Muckenhoupt exponent"),
        "variables": Opt("str", "w1,w2", "comma separated variables"),
    },
    "ap": {
        "weight": Opt("str", REQUIRED, "weight in one variable"),
        "p": Opt("float", REQUIRED, "Muckenhoupt exponent"),
    },
    "hardy": {
        "expr": Opt("str", None, "function of w; omit for the seeded battery"),
        "k": Opt("int", 1, "vanishing order"),
        "p": Opt("float", 5.0, "exponent (must exceed 4 unless --allow-p-le-4)"),
        "j": Opt("int", 0, "lower derivative order"),
        "count": Opt("int", 200, "battery size"),
        "allow_p_le_4": Opt("bool", False, "exploratory runs with p <= 4"),
    },
    "identity": {
        "which": Opt("str", REQUIRED, "identity to check", ("i", "ii", "2s")),
        "expr": Opt("str", REQUIRED, "function of w"),
        "k": Opt("int", 1, "truncation order"),
        "z": Opt("complex", 0.3 + 0.2j, "evaluation point"),
    },
    "counterexample": {
        "kind": Opt("str", REQUIRED, "experiment", ("kerzman", "weighted", "t1-optimality")),
        "k": Opt("int", 1, "Sobolev order"),
        "p": Opt("float", None, "exponent (default 5, or 3 for weighted)"),
        "s": Opt("float", 1.5, "branch exponent of the weighted example"),
        "eps": Opt("float", 1.0, "extra integrability of the weighted example"),
        "deltas": Opt("floats", None, "comma separated excision radii"),
    },
    "ratio-study": {
        "kind": Opt("str", "product", "which operator", ("product", "disc")),
        "n": Opt("int", 2, "number of disc factors"),
        "q": Opt("int", 1, "form degree"),
        "count": Opt("int", 10, "battery size"),
        "k": Opt("int", 1, "Sobolev order"),
        "p": Opt("float", 5.0, "exponent"),
        "weight": Opt("str", None, "weight expression"),
        "refine": Opt("bool", True, "repeat on a doubled grid and report drift"),
    },
    "weight-loss-study": {
        "family": Opt("str", "battery", "data family", ("battery", "ft")),
        "count": Opt("int", 8, "battery size"),
        "k": Opt("int", 1, "Sobolev order"),
        "p": Opt("float", 5.0, "exponent"),
        "refine": Opt("bool", True, "repeat on a doubled grid and report drift"),
    },
}


# ---------------------------------------------------------------------------
# option handling


def _convert(name, opt: Opt, value):
    try:
        if opt.kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            out = value
        elif opt.kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            out = int(value)
        elif opt.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
        elif opt.kind == "complex":
            if isinstance(value, (list, tuple)) and len(value) == 2:
                out = complex(float(value[0]), float(value[1]))
            else:
                out = complex(str(value).replace(" ", "").replace("i", "j"))
        elif opt.kind == "floats":
            parts = value if isinstance(value, (list, tuple)) else str(value).split(",")
            out = [float(x) for x in parts]
        else:
            if not isinstance(value, str):
                raise TypeError
            out = value
    except (TypeError, ValueError):
        raise ConfigurationError(f"option {name!r}: cannot read {value!r} as {opt.kind}") from None
    if opt.choices and out not in opt.choices:
        raise ConfigurationError(f"option {name!r} must be one of {list(opt.choices)}")
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def build_parser():
    parser = _Parser(prog="dbar", description="Solution operators for the dbar equation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON config file mirroring the flags")
        for key, opt in {**GLOBAL, **opts}.items():
            flag = "--" + key.replace("_", "-")
            if key == "kind" and name == "counterexample":
                sp.add_argument("kind", nargs="?", help=f"{opt.help}: {', '.join(opt.choices)}")
            elif opt.kind == "bool":
                sp.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, help=opt.help)
            else:
                sp.add_argument(flag, dest=key, help=opt.help,
                                choices=opt.choices if opt.kind == "str" else None)
    return parser


def resolve_config(command, cli: dict, file_cfg: dict | None):
    """defaults < config file < command line."""
    opts = {**GLOBAL, **COMMANDS[command]}
    cfg = {k: o.default for k, o in opts.items()}
    if file_cfg is not None:
        if not isinstance(file_cfg, dict):
            raise ConfigurationError("config file must hold a JSON object")
        for key, val in file_cfg.items():
            k = key.replace("-", "_")
            if k == "command":
                if val != command:
                    raise ConfigurationError(f"config is for {val!r}, not {command!r}")
                continue
            if k not in opts:
                raise ConfigurationError(f"unknown config key {key!r} for {command}")
            cfg[k] = _convert(k, opts[k], val)
    for k, val in cli.items():
        if k in ("command", "config"):
            continue
        cfg[k] = _convert(k, opts[k], val)
    missing = [k for k, v in cfg.items() if v is REQUIRED]
    if missing:
        raise ConfigurationError(f"missing required option(s): {', '.join(missing)}")
    return cfg


# ---------------------------------------------------------------------------
# handlers: each returns (result dict, rows list | None, grid dict)


def _grid(cfg, nr, nt):
    return {"nr": cfg["nr"] or nr, "ntheta": cfg["ntheta"] or nt}


def _sample_product_points(n, count, seed, radius=0.8):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(size=(count, n)))
    return r * np.exp(2j * np.pi * rng.uniform(size=(count, n)))


def _cmd_solve_product(cfg):
    from .parser import parse_form
    from .product import fd_dbar_residual, residual_symbolic, solve_product

    g = _grid(cfg, 24, 128)
    f = parse_form(cfg["form"])
    sol = solve_product(f, method=cfg["method"], n_r=g["nr"], n_theta=g["ntheta"])
    res = {"form": str(f), "symbolic": sol.symbolic, "degree": sol.degree}
    pts = _sample_product_points(f.n, cfg["points"], cfg["seed"])
    rows = []
    if sol.symbolic:
        res["solution"] = str(sol.form)
        res["residual_is_zero"] = residual_symbolic(sol).is_zero()
    else:
        res["solution"] = None
        if sol.degree == 0:
            res["fd_residual"] = fd_dbar_residual(sol, pts)
    if sol.degree == 0:
        vals = sol.evaluate(pts)
        for i, (pt, v) in enumerate(zip(pts, vals)):
            rows.append({"index": i, "point": [complex(x) for x in pt], "value": complex(v)})
    return res, rows, g


def _cmd_solve_hartogs(cfg):
    from .hartogs import hartogs_sample_points, solve_hartogs_basic, solve_hartogs_optimal
    from .parser import parse_form

    f = parse_form(cfg["form"])
    if cfg["mode"] == "basic":
        sol = solve_hartogs_basic(f)
    else:
        sol = solve_hartogs_optimal(f, cfg["k"], cfg["p"])
    res = sol.as_dict()
    res["form"] = str(f)
    pts = hartogs_sample_points(8, cfg["seed"] + 1)
    vals = sol(pts[:, 0], pts[:, 1])
    rows = [{"index": i, "point": [complex(x) for x in pt], "value": complex(v)}
            for i, (pt, v) in enumerate(zip(pts, vals))]
    return res, rows, _grid(cfg, 24, 128)


def _parse_data(text):
    from .parser import parse_expr, parse_form

    return parse_form(text) if ":d" in text.replace(" ", "") else parse_expr(text)


def _cmd_norm(cfg):
    from .grids import HARTOGS, UNIT_DISC, ProductDomain
    from .parser import parse_expr
    from .weights import sobolev_norm

    h = _parse_data(cfg["expr"])
    dom = {"disc": UNIT_DISC, "bidisc": ProductDomain.unit(2), "hartogs": HARTOGS}[cfg["domain"]]
    defaults = (64, 256) if cfg["domain"] == "disc" else (24, 48)
    g = _grid(cfg, *defaults)
    w = parse_expr(cfg["weight"]) if cfg["weight"] else None
    rep = sobolev_norm(h, dom, cfg["k"], cfg["p"], w, n_r=g["nr"], n_theta=g["ntheta"])
    res = rep.as_dict()
    rows = [{"order": l, "integral": v} for l, v in enumerate(rep.per_order)]
    return res, rows, g


def _cmd_apstar(cfg):
    from .parser import parse_expr
    from .weights import apstar_constant_estimate

    g = _grid(cfg, 96, 64)
    variables = tuple(v.strip() for v in cfg["variables"].split(","))
    est = apstar_constant_estimate(parse_expr(cfg["weight"]), cfg["p"], variables,
                                   n_r=g["nr"], n_theta=g["ntheta"], seed=cfg["seed"])
    return est.as_dict(), None, g


def _cmd_ap(cfg):
    from .parser import parse_expr
    from .weights import ap_constant_estimate

    g = _grid(cfg, 96, 64)
    est = ap_constant_estimate(parse_expr(cfg["weight"]), cfg["p"], n_r=g["nr"],
                               n_theta=g["ntheta"], seed=cfg["seed"])
    return est.as_dict(), None, g


def _cmd_hardy(cfg):
    from .hardy import boundary_flux, hardy_battery, hardy_ratio
    from .parser import parse_expr

    g = _grid(cfg, 64, 256)
    k, p = cfg["k"], cfg["p"]
    hs = [parse_expr(cfg["expr"])] if cfg["expr"] else hardy_battery(k, cfg["count"], cfg["seed"])
    rows = []
    for i, h in enumerate(hs):
        r = hardy_ratio(h, k, p, cfg["j"], n_r=g["nr"], n_theta=g["ntheta"],
                        allow_p_le_4=cfg["allow_p_le_4"])
        f2, f3 = boundary_flux(h, k, p, 1e-2), boundary_flux(h, k, p, 1e-3)
        rows.append({"member": i, "h": str(h), "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio,
                     "flux_1e-2": f2, "flux_1e-3": f3})
    ratios = [r["ratio"] for r in rows]
    res = {"k": k, "p": p, "j": cfg["j"], "members": len(rows), "max_ratio": max(ratios),
           "exploratory": not p > 4}
    if p > 4:
        res["all_finite"] = all(math.isfinite(x) for x in ratios)
        res["flux_decreasing"] = all(r["flux_1e-3"] * 2 <= r["flux_1e-2"] for r in rows)
    return res, rows, g


def _cmd_identity(cfg):
    from .hardy import identity_2s, truncated_cauchy_identity_i, truncated_cauchy_identity_ii
    from .parser import parse_expr

    h = parse_expr(cfg["expr"])
    g = _grid(cfg, 64, 256)
    if cfg["which"] == "i":
        rep = truncated_cauchy_identity_i(h, cfg["k"], cfg["z"], n_r=g["nr"], n_theta=g["ntheta"])
    elif cfg["which"] == "ii":
        rep = truncated_cauchy_identity_ii(h, cfg["k"], n_r=g["nr"], n_theta=g["ntheta"])
    else:
        rep = identity_2s(h, cfg["z"], n_theta=g["ntheta"])
    return rep.as_dict(), None, g


def _cmd_counterexample(cfg):
    from . import counterexamples as cx

    kind = cfg["kind"]
    kw = {}
    if cfg["deltas"] is not None:
        kw["deltas"] = cfg["deltas"]
    if kind == "kerzman":
        g = _grid(cfg, 24, 32)
        rep = cx.kerzman_counterexample(cfg["k"], cfg["p"] or 5.0, n_rho=g["nr"], n_phi=g["ntheta"], **kw)
    elif kind == "weighted":
        g = _grid(cfg, 24, 32)
        rep = cx.weighted_counterexample(cfg["k"], cfg["p"] or 3.0, cfg["s"], cfg["eps"],
                                         n_rho=g["nr"], n_phi=g["ntheta"], **kw)
    else:
        g = _grid(cfg, 16, 32)
        rep = cx.t1_optimality(cfg["k"], cfg["p"] or 5.0, n_rho=g["nr"], n_ang=g["ntheta"], **kw)
    rows = [dict(r, log_fit_slope=rep.slope, r2=rep.r2) for r in rep.rows]
    return rep.as_dict(), rows, g


def _cmd_ratio_study(cfg):
    from .batteries import disc_battery, disc_ratio_study, norm_ratio_study, product_battery
    from .parser import parse_expr

    w = parse_expr(cfg["weight"]) if cfg["weight"] else None
    if cfg["kind"] == "disc":
        g = _grid(cfg, 32, 64)
        st = disc_ratio_study(disc_battery(cfg["count"], cfg["seed"]), cfg["k"], cfg["p"], w,
                              n_r=g["nr"], n_theta=g["ntheta"], refine=cfg["refine"])
    else:
        g = _grid(cfg, 12, 24)
        fam = product_battery(cfg["n"], cfg["q"], cfg["count"], cfg["seed"])
        st = norm_ratio_study(fam, cfg["k"], cfg["p"], w, n_r=g["nr"], n_theta=g["ntheta"],
                              refine=cfg["refine"])
    res = st.as_dict()
    rows = res.pop("rows")
    return res, rows, g


def _cmd_weight_loss(cfg):
    from .batteries import ft_family, hartogs_battery
    from .hartogs import weight_loss_study

    g = _grid(cfg, 12, 24)
    if cfg["family"] == "ft":
        fam = ft_family()
    else:
        fam = [(f"member_{i}", f) for i, f in enumerate(hartogs_battery(cfg["count"], cfg["seed"]))]
    rows = weight_loss_study(fam, cfg["k"], cfg["p"], n_r=g["nr"], n_theta=g["ntheta"],
                             refine=cfg["refine"])
    res = {"k": cfg["k"], "p": cfg["p"], "members": len(rows),
           "max_optimal_ratio": max(r["optimal_ratio"] for r in rows),
           "max_basic_ratio": max(r["basic_ratio"] for r in rows)}
    if cfg["refine"]:
        res["max_drift"] = max(r["drift"] for r in rows)
    return res, rows, g


HANDLERS = {
    "solve-product": _cmd_solve_product,
    "solve-hartogs": _cmd_solve_hartogs,
    "norm": _cmd_norm,
    "apstar": _cmd_apstar,
    "ap": _cmd_ap,
    "hardy": _cmd_hardy,
    "identity": _cmd_identity,
    "counterexample": _cmd_counterexample,
    "ratio-study": _cmd_ratio_study,
    "weight-loss-study": _cmd_weight_loss,
}


# ---------------------------------------------------------------------------
# output


def _plain(x):
    """JSON-safe copy: complex -> [re, im], non-finite floats -> strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_plain(x.real), _plain(x.imag)]
    if x is None or isinstance(x, str):
        return x
    return str(x)


def format_number(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    if x != 0 and abs(x) < 1e-3:
        return f"{x:.12e}"
    return repr(x)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_number(v)
    if isinstance(v, (complex, np.complexfloating)):
        return f"{format_number(v.real)}{'+' if v.imag >= 0 else '-'}{format_number(abs(v.imag))}j"
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    if v is None:
        return ""
    if isinstance(v, dict):
        return json.dumps(_plain(v), sort_keys=True)
    return str(v)


def render(command, cfg, result, rows, grid, fmt):
    if fmt == "json":
        doc = {"schema": SCHEMA, "command": command,
               "config": {k: v for k, v in cfg.items() if k not in ("out", "format")},
               "grid": grid, "result": result}
        if rows is not None:
            doc["rows"] = [dict(r, grid_nr=grid["nr"], grid_ntheta=grid["ntheta"]) for r in rows]
        return json.dumps(_plain(doc), indent=2) + "\n"
    if rows is None:
        rows = [{k: v for k, v in result.items() if not isinstance(v, (dict, list))}]
    rows = [dict(r, grid_nr=grid["nr"], grid_ntheta=grid["ntheta"]) for r in rows]
    header = []
    for r in rows:
        header += [k for k in r if k not in header]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in header])
    return buf.getvalue()


def run(argv=None):
    """Parse, execute and return (exit code, output text)."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns["command"]
    file_cfg = None
    if ns.get("config"):
        try:
            with open(ns["config"], encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    cfg = resolve_config(command, ns, file_cfg)
    result, rows, grid = HANDLERS[command](cfg)
    text = render(command, cfg, result, rows, grid, cfg["format"])
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    warnings.simplefilter("default")
    try:
        return run(argv)
    except PreconditionError as exc:
        hyp = exc.hypothesis or "unspecified"
        print(f"dbar: precondition violated [{hyp}]: {exc}", file=sys.stderr)
        return 3
    except (SingularEvaluationError, EvaluationError) as exc:
        print(f"dbar: numeric singularity: {exc}", file=sys.stderr)
        return 4
    except (ConfigurationError, ParseError, DomainError, ContractViolation) as exc:
        print(f"dbar: invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
