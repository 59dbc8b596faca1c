"""Command line driver.

Matrix files are plain CSV with a `# rows cols` header line.  Structured
runs (dynamical systems, quadrature settings, sweeps) read a single JSON
config; the resolved config is embedded verbatim in the run metadata that
accompanies every --out file.  All angles are radians unless --degrees is
given, and all outputs are deterministic for a fixed (config, seed).

Exit codes: 0 ok, 2 bad input, 3 numerical failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .autonomous import (
    QuadConfig,
    SchurSpec,
    angular_value_irrational,
    angular_value_resonant_4d,
)
from .continuous import ContinuousSystem, estimate_angular_value_ct
from .discrete import DiscreteSystem, estimate_angular_value
from .errors import (
    AngvalError,
    BudgetExceeded,
    DimensionMismatch,
    InvalidBlock,
    NoConvergence,
    NotCoprime,
    RankDeficient,
    RationalityDetected,
    SingularMatrix,
    StepUnstable,
)
from .grassmann import (
    metric_d1,
    metric_d2,
    metric_dF,
    metric_dsigma,
    principal_angles,
    subspace_from_spanning,
)
from .linalg import ComplexBlock, RealBlock
from .oracles import birkhoff_average, fd_angle_derivative, maxmin_angle
from .search import SubspaceSearchConfig
from .semicontinuity import hairy_sweep
from .smoothness import CurvePoint, angle_derivative_right

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4


def load_matrix(path):
    """Read a `# rows cols` headed CSV matrix file."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("%s: matrix files start with a '# rows cols' header" % path)
        parts = header[1:].split()
        if len(parts) != 2:
            raise ValueError("%s: malformed matrix header %r" % (path, header.strip()))
        rows, cols = int(parts[0]), int(parts[1])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(
            "%s: header promises %dx%d but data is %dx%d"
            % (path, rows, cols, data.shape[0], data.shape[1])
        )
    return data


def save_matrix(path, m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("only 2-d matrices can be saved")
    with open(path, "w") as fh:
        fh.write("# %d %d\n" % m.shape)
        for row in m:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _emit(args, headers, rows, meta):
    """Write the data table (stdout or --out) plus JSON run metadata."""
    text = ",".join(headers) + "\n"
    for row in rows:
        text += ",".join(_fmt(x) for x in row) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        with open(args.out + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print("wrote %s (%d rows)" % (args.out, len(rows)))
    else:
        sys.stdout.write(text)


def _meta(args, config, **extra):
    meta = {
        "version": __version__,
        "command": args.command,
        "seed": args.seed,
        "threads": args.threads,
        "tol": args.tol,
        "degrees": args.degrees,
        "config": config,
    }
    meta.update(extra)
    return meta


def _angle_scale(args):
    return 180.0 / math.pi if args.degrees else 1.0


def load_config(args):
    if not args.config:
        raise ValueError("the %s command needs --config" % args.command)
    with open(args.config) as fh:
        return json.load(fh)


def build_discrete_system(cfg):
    kind = cfg.get("kind", "constant")
    if kind == "constant":
        return DiscreteSystem.constant(np.asarray(cfg["matrix"], dtype=float))
    if kind == "cycle":
        mats = [np.asarray(m, dtype=float) for m in cfg["matrices"]]
        return DiscreteSystem.from_sequence(mats, cycle=True)
    if kind == "planar_rotation":
        return DiscreteSystem.planar_rotation(float(cfg["rho"]), float(cfg["phi"]))
    raise ValueError("unknown discrete system kind %r" % kind)


def build_continuous_system(cfg):
    kind = cfg.get("kind", "constant")
    if kind == "constant":
        return ContinuousSystem.from_constant(np.asarray(cfg["matrix"], dtype=float))
    if kind == "model2d":
        return ContinuousSystem.model2d(float(cfg["rho"]), float(cfg["omega"]))
    raise ValueError("unknown continuous system kind %r" % kind)


def build_schur_spec(blocks_cfg):
    blocks = []
    for b in blocks_cfg:
        if "omega" in b:
            blocks.append(ComplexBlock(float(b["beta"]), float(b["omega"]), float(b["rho"])))
        else:
            blocks.append(RealBlock(float(b["beta"])))
    return SchurSpec(tuple(blocks))


def build_search_config(cfg, seed):
    s = dict(cfg.get("search", {}))
    kwargs = {"seed": seed}
    for key in ("candidates", "refine_rounds", "sample_count"):
        if key in s:
            kwargs[key] = int(s.pop(key))
    for key in ("refine_scale", "tail_fraction", "cost_cap"):
        if key in s:
            kwargs[key] = float(s.pop(key))
    if "sample_times" in s:
        kwargs["sample_times"] = list(s.pop("sample_times"))
    if s:
        raise ValueError("unknown search settings: %s" % ", ".join(sorted(s)))
    return SubspaceSearchConfig(**kwargs)


def build_quad_config(cfg):
    q = dict(cfg.get("quad", {}))
    kwargs = {}
    for key in ("panels", "panels_3d", "tau_panels", "t_points", "qmc_power", "seed"):
        if key in q:
            kwargs[key] = int(q.pop(key))
    if q:
        raise ValueError("unknown quad settings: %s" % ", ".join(sorted(q)))
    return QuadConfig(**kwargs)


def cmd_angles(args):
    v = subspace_from_spanning(load_matrix(args.v), tol=args.tol)
    w = subspace_from_spanning(load_matrix(args.w), tol=args.tol)
    res = principal_angles(v, w)
    scale = _angle_scale(args)
    rows = [
        (j + 1, float(phi * scale), float(math.cos(phi)), float(math.sin(phi)))
        for j, phi in enumerate(res.angles)
    ]
    _emit(args, ("j", "phi_j", "cos", "sin"), rows, _meta(args, {"v": args.v, "w": args.w}))
    return EXIT_OK


def cmd_metrics(args):
    v = subspace_from_spanning(load_matrix(args.v), tol=args.tol)
    w = subspace_from_spanning(load_matrix(args.w), tol=args.tol)
    scale = _angle_scale(args)
    rows = [
        ("d1", float(metric_d1(v, w) * scale)),
        ("d2", float(metric_d2(v, w))),
        ("dF", float(metric_dF(v, w))),
        ("dsigma", float(metric_dsigma(v, w))),
    ]
    _emit(args, ("metric", "value"), rows, _meta(args, {"v": args.v, "w": args.w}))
    return EXIT_OK


def cmd_derivative(args):
    w = load_matrix(args.w)
    wdot = load_matrix(args.wdot)
    if w.shape != wdot.shape:
        raise DimensionMismatch("W and Wdot must have matching shapes")
    val = angle_derivative_right(CurvePoint(w=w, wdot=wdot)) * _angle_scale(args)
    _emit(
        args,
        ("derivative",),
        [(float(val),)],
        _meta(args, {"w": args.w, "wdot": args.wdot}, value=val),
    )
    print("value = %s" % repr(float(val)))
    return EXIT_OK


def _report_rows(rep):
    return [
        (
            rep.variant,
            rep.subspace_dim,
            float(rep.horizon),
            float(rep.value),
            float(rep.tail_sup),
            float(rep.tail_inf),
            rep.candidates,
            rep.evaluations,
        )
    ]


_REPORT_HEADERS = (
    "variant",
    "s",
    "horizon",
    "value",
    "tail_sup",
    "tail_inf",
    "candidates",
    "evaluations",
)


def cmd_discrete(args):
    cfg = load_config(args)
    sys_ = build_discrete_system(cfg["system"])
    rep = estimate_angular_value(
        sys_,
        int(cfg.get("s", 1)),
        cfg.get("variant", "sup-limsup"),
        int(cfg["horizon"]),
        build_search_config(cfg, args.seed),
    )
    _emit(args, _REPORT_HEADERS, _report_rows(rep), _meta(args, cfg, value=rep.value))
    print("value = %s" % repr(float(rep.value)))
    return EXIT_OK


def cmd_continuous(args):
    cfg = load_config(args)
    sys_ = build_continuous_system(cfg["system"])
    rep = estimate_angular_value_ct(
        sys_,
        int(cfg.get("s", 1)),
        cfg.get("variant", "sup-limsup"),
        float(cfg["horizon"]),
        float(cfg["step"]),
        build_search_config(cfg, args.seed),
    )
    _emit(args, _REPORT_HEADERS, _report_rows(rep), _meta(args, cfg, value=rep.value))
    print("value = %s" % repr(float(rep.value)))
    return EXIT_OK


def cmd_autonomous(args):
    cfg = load_config(args)
    quad = build_quad_config(cfg)
    if "resonant" in cfg:
        r = cfg["resonant"]
        res = angular_value_resonant_4d(
            float(r["omega1"]),
            int(r["p"]),
            int(r["q"]),
            float(r["rho1"]),
            float(r["rho2"]),
            quad=quad,
        )
        rows = [(float(t), float(l)) for t, l in zip(res.t_values, res.l_values)]
        meta = _meta(
            args, cfg, value=res.value, t_argmax=res.t_argmax, err_estimate=res.error
        )
        _emit(args, ("t", "L"), rows, meta)
    else:
        spec = build_schur_spec(cfg["blocks"])
        res = angular_value_irrational(
            int(cfg["s"]), spec, quad=quad, override_gate=bool(cfg.get("override_gate", False))
        )
        rows = [
            ("+".join(str(j) for j in sv.index_set) or "empty", float(sv.value), float(sv.error))
            for sv in res.per_set
        ]
        meta = _meta(
            args,
            cfg,
            value=res.value,
            argmax_set=list(res.argmax_set),
            err_estimate=res.error,
        )
        _emit(args, ("index_set", "value", "error"), rows, meta)
    print("value = %s" % repr(float(res.value)))
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args)
    cells = hairy_sweep(
        float(cfg["omega1"]),
        float(cfg["rho1"]),
        kappa_grid=cfg.get("kappa_grid"),
        rho2_grid=cfg.get("rho2_grid"),
        qmax=int(cfg.get("qmax", 20)),
        quad=build_quad_config(cfg),
        threads=args.threads,
    )
    rows = []
    for c in cells:
        rows.append(
            (
                float(c.kappa),
                float(c.rho2),
                c.tag.kind,
                c.tag.p,
                c.tag.q,
                float(c.value),
                None if c.t_argmax is None else float(c.t_argmax),
                float(c.err_estimate),
            )
        )
    headers = ("kappa", "rho2", "tag", "p", "q", "value", "t_argmax", "err_estimate")
    _emit(args, headers, rows, _meta(args, cfg, cells=len(rows)))
    return EXIT_OK


def cmd_oracle(args):
    cfg = load_config(args)
    kind = cfg["kind"]
    if kind == "maxmin":
        v = subspace_from_spanning(load_matrix(cfg["v"]), tol=args.tol)
        w = subspace_from_spanning(load_matrix(cfg["w"]), tol=args.tol)
        val = maxmin_angle(v, w, samples=int(cfg.get("samples", 10**6)), seed=args.seed)
    elif kind == "birkhoff":
        time_kind = cfg.get("time", "discrete")
        if time_kind == "discrete":
            sys_ = build_discrete_system(cfg["system"])
            step = None
        elif time_kind == "continuous":
            sys_ = build_continuous_system(cfg["system"])
            step = float(cfg["step"])
        else:
            raise ValueError("oracle time must be discrete or continuous")
        v0 = cfg["v0"]
        v0 = load_matrix(v0) if isinstance(v0, str) else np.asarray(v0, dtype=float)
        val = birkhoff_average(sys_, v0, cfg["horizon"], step=step)
    elif kind == "fd_derivative":
        val = fd_angle_derivative(
            load_matrix(cfg["w"]), load_matrix(cfg["wdot"]), float(cfg["h"])
        )
    else:
        raise ValueError("unknown oracle kind %r" % kind)
    val = float(val) * _angle_scale(args)
    _emit(args, ("value",), [(val,)], _meta(args, cfg, value=val))
    print("value = %s" % repr(val))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, default=0, help="search / sampling seed")
    common.add_argument("--out", help="write CSV here (plus <out>.meta.json)")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("--tol", type=float, default=None, help="rank tolerance override")
    common.add_argument("--degrees", action="store_true", help="display angles in degrees")

    p = argparse.ArgumentParser(prog="angval", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version="angval " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("angles", parents=[common], help="principal angles between subspaces")
    pa.add_argument("v", help="matrix file spanning V")
    pa.add_argument("w", help="matrix file spanning W")
    pa.set_defaults(func=cmd_angles)

    pm = sub.add_parser("metrics", parents=[common], help="subspace metrics d1, d2, dF, dsigma")
    pm.add_argument("v")
    pm.add_argument("w")
    pm.set_defaults(func=cmd_metrics)

    pd = sub.add_parser("derivative", parents=[common], help="right derivative of the max angle")
    pd.add_argument("w", help="matrix file for the curve point W")
    pd.add_argument("wdot", help="matrix file for the velocity Wdot")
    pd.set_defaults(func=cmd_derivative)

    for name, fn, help_ in (
        ("discrete", cmd_discrete, "discrete-time angular value estimate"),
        ("continuous", cmd_continuous, "continuous-time angular value estimate"),
        ("autonomous", cmd_autonomous, "closed-form autonomous angular value"),
        ("sweep", cmd_sweep, "two-frequency (kappa, rho2) parameter sweep"),
        ("oracle", cmd_oracle, "slow reference evaluations"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is None:
        env = os.environ.get("ANGVAL_THREADS")
        if env is not None:
            try:
                args.threads = int(env)
            except ValueError:
                print("error: ANGVAL_THREADS=%r is not an integer" % env, file=sys.stderr)
                return EXIT_BAD_INPUT
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_BUDGET
    except (RankDeficient, SingularMatrix, NoConvergence, StepUnstable, RationalityDetected) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL
    except (DimensionMismatch, InvalidBlock, NotCoprime, AngvalError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
