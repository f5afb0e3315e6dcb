"""Command-line front end.

Subcommands: ``curve-info``, ``periods``, ``theta-eval``, ``solve``,
``verify`` and ``genus0``.  Configuration is JSON; complex numbers are
``[re, im]`` pairs and every float is written with 17 significant digits.
Exit status: 0 pass, 1 verification failure, 2 input or guard error,
3 internal self-check failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .curve import p_zero, point, point_from_y, validate_spec
from .errors import ConfigError, SBError

# --------------------------------------------------------------------------
# schema

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POS = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "curve": {
            "type": "object",
            "properties": {
                "branch_points": {"type": "array", "items": _COMPLEX, "minItems": 2},
                "g_sign": {"enum": [1, -1]},
                "pairing": {
                    "type": "array",
                    "items": {"type": "array", "items": _COMPLEX, "minItems": 2, "maxItems": 2},
                },
            },
            "required": ["branch_points"],
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "properties": {
                "n0": {"type": "integer"},
                "alpha0": _COMPLEX,
                "mu_hat": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {"z": _COMPLEX, "sheet": {"enum": [1, -1]}, "y": _COMPLEX},
                        "required": ["z"],
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
        "window": {
            "type": "object",
            "properties": {"n_min": {"type": "integer"}, "n_max": {"type": "integer"}},
            "required": ["n_min", "n_max"],
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "quadrature": _POS,
                "theta": _POS,
                "acceptance": {
                    "oneOf": [_POS, {"type": "object", "additionalProperties": _POS}],
                },
            },
            "additionalProperties": False,
        },
        "seeds": {
            "type": "object",
            "properties": {"verification": {"type": "integer", "minimum": 0}},
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"format": {"enum": ["json", "csv"]}, "path": {"type": "string"}},
            "additionalProperties": False,
        },
        "theta": {
            "type": "object",
            "properties": {
                "tau": {"type": "array", "items": {"type": "array", "items": _COMPLEX}},
                "z": {"type": "array", "items": {"type": "array", "items": _COMPLEX}},
                "tol": _POS,
            },
            "additionalProperties": False,
        },
        "hierarchy": {
            "type": "object",
            "properties": {
                "p": {"type": "integer", "minimum": 0},
                "constants": {"type": "array", "items": _COMPLEX},
                "g_top": _COMPLEX,
                "n_ref": {"type": "integer"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def _format_path(err):
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def load_config(path):
    """Parse and validate a JSON config; errors name the line or field."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{_format_path(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid config: " + "; ".join(msgs), fields=[_format_path(e) for e in errors])
    win = cfg.get("window")
    if win and win["n_min"] > win["n_max"]:
        raise ConfigError("window: n_min must not exceed n_max", fields=["window"])
    n0 = cfg.get("initial", {}).get("n0", 0)
    if win and not (win["n_min"] <= n0 <= win["n_max"]):
        raise ConfigError("initial/n0: window must contain n0", fields=["initial/n0"])


def _c(pair):
    return complex(pair[0], pair[1])


def spec_from_config(cfg):
    if "curve" not in cfg:
        raise ConfigError("curve: section is required", fields=["curve"])
    cur = cfg["curve"]
    pairing = None
    if "pairing" in cur:
        pairing = [(_c(a), _c(b)) for a, b in cur["pairing"]]
    return validate_spec([_c(e) for e in cur["branch_points"]], cur.get("g_sign", 1), pairing)


def mu_from_config(spec, cfg):
    pts = []
    for i, item in enumerate(cfg.get("initial", {}).get("mu_hat", [])):
        z = _c(item["z"])
        if "y" in item:
            pts.append(point_from_y(spec, z, _c(item["y"])))
        elif "sheet" in item:
            pts.append(point(spec, z, item["sheet"]))
        else:
            raise ConfigError(f"initial/mu_hat/{i}: needs 'sheet' or 'y'", fields=[f"initial/mu_hat/{i}"])
    return pts


def acceptance_tolerances(cfg, override=None):
    out = {}
    acc = cfg.get("tolerances", {}).get("acceptance")
    if isinstance(acc, dict):
        out.update(acc)
    elif acc is not None:
        out["__all__"] = acc
    if override is not None:
        out = {"__all__": override}
    return out


def _apply_tolerances(defaults, acc):
    tol = dict(defaults)
    if "__all__" in acc:
        tol = {k: acc["__all__"] for k in tol}
    tol.update({k: v for k, v in acc.items() if k != "__all__"})
    return tol


# --------------------------------------------------------------------------
# serialisation


_FLOAT_MARK = "\x00F"


def _fmt(x):
    # adding 0.0 maps -0.0 to 0.0
    return "%.17g" % (float(x) + 0.0)


def _encode(obj):
    """Convert to JSON-ready values; floats become marked strings."""
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_encode(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_encode(float(obj.real)), _encode(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return _FLOAT_MARK + "NaN"
        if math.isinf(x):
            return _FLOAT_MARK + ("Infinity" if x > 0 else "-Infinity")
        return _FLOAT_MARK + _fmt(x)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    """JSON text with every float written as ``%.17g``."""
    text = json.dumps(_encode(obj), indent=2)
    return re.sub(r'"\\u0000F([^"]*)"', r"\1", text)


def write_csv(records, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "alpha_re", "alpha_im", "beta_re", "beta_im"])
    for r in records:
        a, b = r["alpha"], r["beta"]
        w.writerow([r["n"]] + [_fmt(v) for v in (a.real, a.imag, b.real, b.imag)])


def read_sequences(path):
    """Read ``(n, alpha, beta)`` from a CSV file or a ``solve`` JSON output."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        rows = [(r["n"], _c(r["alpha"]), _c(r["beta"])) for r in data["records"]]
    else:
        reader = csv.DictReader(io.StringIO(text))
        need = {"n", "alpha_re", "alpha_im", "beta_re", "beta_im"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ConfigError(f"{path}: CSV needs columns {sorted(need)}")
        rows = []
        for line, r in enumerate(reader, start=2):
            try:
                rows.append(
                    (int(r["n"]), complex(float(r["alpha_re"]), float(r["alpha_im"])),
                     complex(float(r["beta_re"]), float(r["beta_im"])))
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: line {line}: {exc}") from exc
    rows.sort(key=lambda t: t[0])
    ns = [r[0] for r in rows]
    if not ns or ns != list(range(ns[0], ns[0] + len(ns))):
        raise ConfigError(f"{path}: sites must be consecutive integers")
    return ns[0], np.array([r[1] for r in rows]), np.array([r[2] for r in rows])


def provenance(cfg, spec=None, extra=None):
    curve = cfg.get("curve", {})
    digest = hashlib.sha256(json.dumps(curve, sort_keys=True).encode()).hexdigest()
    out = {"spec_hash": digest, "tool": "sblattice", "version": __version__}
    if spec is not None:
        out["conventions"] = {
            "Q0": spec.base_point,
            "cut_pairing": [[a, b] for a, b in spec.cut_endpoints()],
            "homology": "a_j: counter-clockwise loop around cut j on sheet +1; "
            "b_j: sheet +1 from the last cut to cut j, back on sheet -1, "
            "corrected by integer a-cycles so that b_i . b_j = 0",
            "sheets": "y / z^(p+1) -> -s on sheet s; P_inf+ on sheet +1",
            "g_sign": spec.g_sign,
            "g_top": spec.g_top,
            "tau": "tau = C^{-1} B with C, B the a- and b-periods of z^k dz / y; "
            "genus-1 {1,2,3,4} realises i K(sqrt(3)/2) / K(1/2)",
        }
    if extra:
        out.update(extra)
    return out


def _emit(payload, args, cfg):
    fmt = args.format or cfg.get("output", {}).get("format", "json")
    path = args.out or cfg.get("output", {}).get("path")
    if fmt == "csv" and "records" in payload:
        buf = io.StringIO()
        write_csv(payload["records"], buf)
        text = buf.getvalue()
        side = {k: v for k, v in payload.items() if k != "records"}
        if path:
            Path(path).write_text(text)
            Path(str(path) + ".report.json").write_text(dumps(side) + "\n")
        else:
            sys.stdout.write(text)
            sys.stderr.write(dumps(side) + "\n")
        return
    text = dumps(payload) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_curve_info(cfg, args):
    from .periods import check_tau, compute_periods

    spec = spec_from_config(cfg)
    out = {
        "genus": spec.genus,
        "branch_points": list(spec.branch_points),
        "g_top": spec.g_top,
        "cuts": [[a, b] for a, b in spec.cut_endpoints()],
        "p0_plus_sheet": p_zero(spec, 1).sheet,
        "tau": None,
        "min_eig_im_tau": None,
    }
    if spec.genus >= 1:
        per = compute_periods(spec, tol=cfg.get("tolerances", {}).get("quadrature", 1e-12))
        out["tau"] = per.tau
        out["min_eig_im_tau"] = float(check_tau(per.tau))
    out["provenance"] = provenance(cfg, spec)
    _emit(out, args, cfg)
    return 0


def cmd_periods(cfg, args):
    from .periods import check_tau, compute_periods, normalization_residual

    spec = spec_from_config(cfg)
    if spec.genus < 1:
        raise ConfigError("periods need genus >= 1", fields=["curve/branch_points"])
    tol = cfg.get("tolerances", {}).get("quadrature", 1e-12)
    per = compute_periods(spec, tol=tol)
    out = {
        "genus": spec.genus,
        "A": per.C,
        "B": per.B,
        "tau": per.tau,
        "tau_asymmetry": per.tau_asymmetry,
        "b_cycle_correction": per.b_shift,
        "normalization_residual": normalization_residual(per, tol),
        "min_eig_im_tau": float(check_tau(per.tau)),
        "provenance": provenance(cfg, spec),
    }
    _emit(out, args, cfg)
    return 0


def cmd_theta_eval(cfg, args):
    from .periods import ThetaParams, compute_periods, tail_bound, theta_log

    th = cfg.get("theta", {})
    spec = None
    if "tau" in th:
        tau = np.array([[_c(v) for v in row] for row in th["tau"]])
    else:
        spec = spec_from_config(cfg)
        tau = compute_periods(spec).tau
    params = ThetaParams(tau, th.get("tol", 1e-14))
    zs = th.get("z") or [[[0.0, 0.0]] * tau.shape[0]]
    vals = []
    for z in zs:
        v = np.array([_c(x) for x in z])
        if v.shape != (tau.shape[0],):
            raise ConfigError(f"theta/z: vectors must have length {tau.shape[0]}", fields=["theta/z"])
        logf, val = theta_log(v, params)
        vals.append({"z": v, "log_factor": complex(logf), "reduced_value": complex(val),
                     "value": complex(np.exp(logf) * val)})
    out = {"tau": tau, "radius": params.radius(), "tail_bound": tail_bound(params), "values": vals,
           "provenance": provenance(cfg, spec)}
    _emit(out, args, cfg)
    return 0


def _window(cfg, default=(-5, 5)):
    w = cfg.get("window")
    return (w["n_min"], w["n_max"]) if w else default


def _genus0(cfg, args, spec):
    from .solution import genus0_solution
    from .verification import genus0_report

    ini = cfg.get("initial", {})
    n0 = ini.get("n0", 0)
    alpha0 = _c(ini.get("alpha0", [1.0, 0.0]))
    E0, E1 = spec.branch_points
    sol = genus0_solution(E0, E1, spec.g_sign, alpha0, _window(cfg, (-10, 10)), n0)
    acc = acceptance_tolerances(cfg, args.tol_acceptance)
    tol = _apply_tolerances({"sb": 1e-12, "product": 1e-12, "transfer": 1e-12, "eigenrelation": 1e-12}, acc)
    rep = genus0_report(spec, sol, tol, seed=_seed(cfg, args))
    return sol, rep, {"g1": sol.diagnostics["g1"], "c1": sol.diagnostics["c1"],
                      "alpha_beta": sol.diagnostics["alpha_beta"]}


def _seed(cfg, args):
    if args.seed is not None:
        return args.seed
    return cfg.get("seeds", {}).get("verification", 2024)


def cmd_solve(cfg, args):
    from .solution import init_solution, solve_window
    from .verification import DEFAULT_TOLERANCES, full_report

    spec = spec_from_config(cfg)
    if spec.genus == 0:
        sol, rep, info = _genus0(cfg, args, spec)
    else:
        ini = cfg.get("initial", {})
        mu = mu_from_config(spec, cfg)
        tols = cfg.get("tolerances", {})
        inner = {k: tols[k] for k in ("quadrature", "theta") if k in tols}
        state = init_solution(spec, mu, _c(ini.get("alpha0", [1.0, 0.0])), ini.get("n0", 0), inner)
        win = _window(cfg)
        sol = solve_window(state, *win)
        tol = _apply_tolerances(DEFAULT_TOLERANCES, acceptance_tolerances(cfg, args.tol_acceptance))
        rep = full_report(state, win, tol, seed=_seed(cfg, args))
        info = {"beta0": state.beta0, "growth": state.growth, "delta": state.delta,
                "riemann_constants": state.Xi, "riemann_method": state.riemann.method,
                "self_checks": {k: v for k, v in state.checks.items()}}
    records = [{"n": int(n), "alpha": complex(a), "beta": complex(b)}
               for n, a, b in zip(sol.sites, sol.alpha, sol.beta)]
    payload = {"records": records, "solution": info, "report": rep.as_dict(),
               "provenance": provenance(cfg, spec)}
    _emit(payload, args, cfg)
    return 0 if rep.passed else 1


def cmd_genus0(cfg, args):
    spec = spec_from_config(cfg)
    if spec.genus != 0:
        raise ConfigError("genus0 needs exactly two branch points", fields=["curve/branch_points"])
    sol, rep, info = _genus0(cfg, args, spec)
    records = [{"n": int(n), "alpha": complex(a), "beta": complex(b)}
               for n, a, b in zip(sol.sites, sol.alpha, sol.beta)]
    payload = {"records": records, "solution": info, "report": rep.as_dict(),
               "provenance": provenance(cfg, spec)}
    _emit(payload, args, cfg)
    return 0 if rep.passed else 1


def cmd_verify(cfg, args):
    from .hierarchy import (
        LatticeSeq,
        assemble,
        constants_from_curve,
        dual_identity_residual,
        lattice_invariant,
        run_recursion,
        sb_residual,
    )

    if not args.sequences:
        raise ConfigError("verify needs --sequences PATH")
    n_min, a, b = read_sequences(args.sequences)
    seq = LatticeSeq(n_min, a, b)
    hier = cfg.get("hierarchy", {})
    spec = None
    if "curve" in cfg:
        spec = spec_from_config(cfg)
    if "p" in hier:
        p = hier["p"]
    elif spec is not None:
        p = spec.genus
    else:
        raise ConfigError("hierarchy/p or curve is required", fields=["hierarchy/p"])
    if "constants" in hier:
        consts = [_c(v) for v in hier["constants"]]
    elif spec is not None:
        consts = list(constants_from_curve(spec.branch_points, p))
    else:
        consts = [0.0] * p
    if "g_top" in hier:
        g_top = _c(hier["g_top"])
    elif spec is not None:
        g_top = spec.g_top
    else:
        raise ConfigError("hierarchy/g_top or curve is required", fields=["hierarchy/g_top"])
    coeffs = run_recursion(seq, consts, p, hier.get("n_ref"))
    valid = coeffs.valid_sites()
    triples = [assemble(coeffs, int(n)) for n in valid]
    top = lattice_invariant(triples, orders=range(p + 2))
    # c_{p+1} pinned so that g_{p+1}(n_ref) = g_top; the full invariant is constant on solutions
    pinned = run_recursion(seq, consts, p, hier.get("n_ref"), g_top=g_top)
    full = lattice_invariant([assemble(pinned, int(n)) for n in pinned.valid_sites()])
    r1, r2 = sb_residual(seq, coeffs, g_top)
    d1 = 1.0 + np.abs(coeffs.f[p]) + np.abs(2 * g_top * seq.alpha)
    sb = np.concatenate([np.abs(r1) / d1, np.abs(r2) / (1.0 + np.abs(2 * g_top * seq.beta))])
    sb = sb[np.isfinite(sb)]
    acc = acceptance_tolerances(cfg, args.tol_acceptance)
    tol = _apply_tolerances({"sb": 1e-10, "dual_identity": 1e-12, "invariant_top": 1e-10}, acc)
    from .verification import VerificationReport, residual

    rep = VerificationReport(
        {
            "dual_identity": residual("dual_identity", [dual_identity_residual(coeffs)], tol["dual_identity"]),
            "invariant_top": residual("invariant_top", [top.drift], tol["invariant_top"]),
            "sb": residual("sb", sb, tol["sb"]),
        },
        {
            "p": p,
            "constants": consts,
            "g_top": g_top,
            "n_ref": coeffs.n_ref,
            "valid_sites": [int(valid[0]), int(valid[-1])] if len(valid) else [],
            "invariant_full_drift": full.drift,
            "invariant_mean": full.mean,
            "invariant_vs_curve": (
                float(np.max(np.abs(full.mean - spec.R_coefficients()))) if spec is not None and spec.genus == p else None
            ),
            "g": {str(k): coeffs.g[k, coeffs.seq.idx(coeffs.n_ref)] for k in range(p + 2)},
        },
    )
    out = {"report": rep.as_dict(), "provenance": provenance(cfg, spec)}
    _emit(out, args, cfg)
    return 0 if rep.passed else 1


COMMANDS = {
    "curve-info": cmd_curve_info,
    "periods": cmd_periods,
    "theta-eval": cmd_theta_eval,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "genus0": cmd_genus0,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="sblattice", description="Finite-gap lattice solutions via theta functions.")
    parser.add_argument("--version", action="version", version=f"sblattice {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "verify", help="JSON configuration file")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=["json", "csv"])
        sp.add_argument("--tol-acceptance", type=float, dest="tol_acceptance",
                        help="override every acceptance tolerance")
        sp.add_argument("--seed", type=int, help="seed for verification sample points")
        if name == "verify":
            sp.add_argument("--sequences", help="CSV (n, alpha_re, alpha_im, beta_re, beta_im) or solve output")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.tol_acceptance is not None and not args.tol_acceptance > 0:
            raise ConfigError("--tol-acceptance must be positive")
        cfg = load_config(args.config) if args.config else {}
        return COMMANDS[args.command](cfg, args)
    except SBError as exc:
        info = {"error": exc.code, "message": str(exc), "details": exc.details}
        sys.stderr.write(dumps(info) + "\n")
        return exc.exit_code
    except (ValueError, TypeError) as exc:
        sys.stderr.write(dumps({"error": "cli_io.InvalidInput", "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
