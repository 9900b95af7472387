"""Command line interface: ``translab <command> [options]``.

Exit codes: 0 success, 1 other module error, 2 verification failure,
3 input error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import chartlab, curves, planes, topo, verify, zoo
from ._accel import backend_name, configure_threads
from .errors import InputError, TranslabError
from .mesh import euler_characteristic, grid_mesh
from .meshio import read_mesh, write_mesh

EXIT_OK, EXIT_ERROR, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2, 3


# -- output helpers ----------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if np.isfinite(x):
            return x
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _emit(args, name, doc):
    path = _out(args, name)
    write_json(doc, path)
    if not args.quiet:
        print(json.dumps(_clean(doc), sort_keys=True))
    return path


def _floats(text):
    return [float(t) for t in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(t) for t in str(text).replace(",", " ").split()]


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    cfg = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{ln}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            cfg[k.replace("-", "_")] = v
    return cfg


def _apply_config(parser, cfg):
    known = {a.dest: a for a in parser._actions}
    out = {}
    for k, raw in cfg.items():
        if k not in known:
            raise InputError(f"unknown configuration key {k!r}")
        act = known[k]
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            out[k] = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            out[k] = act.type(raw)
        else:
            out[k] = raw
    parser.set_defaults(**out)


# -- commands ------------------------------------------------------------------

def cmd_generate(args):
    kind = args.kind
    stem = args.name or kind
    summary = {"kind": kind}
    if kind == "grim-reaper":
        pts = zoo.grim_reaper(args.c, (-args.xmax, args.xmax), args.n)
        path = _out(args, stem + ".csv")
        np.savetxt(path, pts, delimiter=",", header="x,y", comments="", fmt="%.17g")
        summary.update(files=[path], n=len(pts))
    elif kind == "grim-hyperplane":
        patch = zoo.grim_hyperplane(((-args.xmax, args.xmax), (0.0, 1.0)), (args.n, args.n), args.c)
        cpath = _out(args, stem + "_chart.csv")
        chartlab.write_chart_csv(patch, cpath)
        mesh = grid_mesh(patch.positions)
        mpath = _out(args, stem + "." + args.format)
        write_mesh(mesh, mpath)
        summary.update(_mesh_summary(mesh), files=[cpath, mpath])
    elif kind in ("paraboloid", "catenoid"):
        prof = zoo.rotational_profile(kind, s_max=args.smax, step=args.step, neck=args.neck)
        ppath = _out(args, stem + "_profile.csv")
        zoo.write_profile_csv(prof, ppath)
        height = args.height
        if height is None:
            height = 0.8 * min(prof.z[0], prof.z[-1]) if kind == "catenoid" else 0.8 * prof.z[-1]
        _, mesh = zoo.revolve(prof, args.ntheta, args.ns, height=height)
        mpath = _out(args, stem + "." + args.format)
        write_mesh(mesh, mpath)
        summary.update(files=[ppath, mpath], height=height, arclength_defect=prof.arclength_defect(),
                       **_mesh_summary(mesh))
    elif kind == "graphical":
        prof = zoo.rotational_profile("paraboloid", s_max=max(args.smax, 4 * args.radius), step=args.step)
        half = args.radius * 1.1
        x = np.linspace(-half, half, args.n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        mask = zoo.disc_mask(x, x, args.radius)
        R = np.hypot(X, Y)
        bv = np.zeros_like(R)
        bv[mask] = prof.graph(R[mask])
        hf = zoo.graphical_translator_solve(x, x, bv, mask, tol=args.tol)
        hpath = _out(args, stem + "_height.csv")
        zoo.write_heightfield_csv(hf, hpath)
        exact = np.where(mask, 0.0, np.nan)
        exact[mask] = prof.graph(R[mask])
        err = float(np.nanmax(np.abs(np.where(mask, hf.values, np.nan) - exact)))
        summary.update(files=[hpath], iterations=hf.iterations, residual=hf.residual_norm,
                       max_error_vs_profile=err)
    else:  # pragma: no cover - argparse restricts the choices
        raise InputError(kind)
    _emit(args, stem + "_summary.json", summary)
    return EXIT_OK


def _mesh_summary(mesh):
    chi, b, g = euler_characteristic(mesh)
    return {"vertices": mesh.n_vertices, "faces": mesh.n_faces, "chi": chi, "boundary_loops": b,
            "genus": g}


def _sphere_chart(n):
    def ev(t, p):
        return np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)
    return chartlab.build_chart_grid(ev, ((0.3, 2.8), (0.0, 2 * np.pi)), (n, n))


def _flat_chart(n):
    def ev(a, b):
        return a, np.zeros_like(a), b
    return chartlab.build_chart_grid(ev, ((-1.0, 1.0), (-1.0, 1.0)), (n, n))


def _chart_source(source, n, c):
    if source == "grim-hyperplane":
        return zoo.grim_hyperplane(resolution=(n, n), c=c)
    if source == "sphere":
        return _sphere_chart(n)
    if source == "flat":
        return _flat_chart(n)
    return chartlab.read_chart_csv(source)


def cmd_verify(args):
    ladder = _ints(args.ladder)
    if any(b != 2 * a for a, b in zip(ladder[:-1], ladder[1:])):
        raise InputError("resolution ladder must double at every step")
    if not os.path.exists(args.source) and args.source not in ("grim-hyperplane", "sphere", "flat"):
        raise InputError(f"unknown chart source {args.source!r}")
    if os.path.exists(args.source):
        ladder = [0]
    wanted = [s.strip() for s in args.identities.split(",")] if args.identities else None
    if wanted:
        bad = [s for s in wanted if s not in verify.IDENTITIES]
        if bad:
            raise InputError(f"unknown identities {bad}")
    reports = []
    for n in ladder:
        patch = _chart_source(args.source, n, args.c)
        fields = chartlab.compute_fields(patch, fd_order=args.order)
        region_w = None
        if args.w_min_x is not None:
            region_w = fields.patch.positions[..., 0] > args.w_min_x
        reports.append(verify.all_residuals(fields, region_w=region_w))
    merged = verify.convergence_order(reports) if len(reports) > 1 else reports[0]
    names = wanted or merged.names()
    failed, rows = [], {}
    for name in names:
        if name in merged.notes and name not in merged.names():
            rows[name] = {"note": merged.notes[name]}
            continue
        if name not in merged.names():
            rows[name] = {"note": "not computed"}
            continue
        mx = merged.max(name)
        rows[name] = {"max": mx, "order": merged.orders.get(name), "exact": name in merged.exact}
        if mx > args.ceiling:
            failed.append(name)
    keep = verify.ResidualReport([e for e in merged.entries if e.name in names],
                                 {k: v for k, v in merged.orders.items() if k in names},
                                 {k for k in merged.exact if k in names},
                                 {k: v for k, v in merged.region.items() if k in names},
                                 {k: v for k, v in merged.notes.items() if k in names})
    keep.write_csv(_out(args, "residuals.csv"))
    keep.write_json(_out(args, "residuals.json"))
    summary = {"source": args.source, "ladder": ladder, "ceiling": args.ceiling,
               "identities": rows, "failed": failed, "backend": backend_name()}
    _emit(args, "verify_summary.json", summary)
    return EXIT_VERIFY if failed else EXIT_OK


def _load_poles(path):
    with open(path) as fh:
        doc = json.load(fh)
    return [topo.Pole(np.array(p["position"]), int(p["normal_sign"]), int(p["vertex"]), int(p["loop"]))
            for p in doc["poles"]]


def cmd_cap(args):
    mesh = read_mesh(args.input)
    v = _floats(args.v)
    capped = topo.cap_ends(mesh, v=v, sigma=args.sigma)
    mpath = _out(args, (args.name or "capped") + "." + args.format)
    write_mesh(capped.mesh, mpath)
    poles = [{"position": p.position, "normal_sign": p.normal_sign, "vertex": p.vertex, "loop": p.loop}
             for p in capped.poles]
    ppath = _out(args, (args.name or "capped") + "_poles.json")
    write_json({"poles": poles, "v": v}, ppath)
    props = [dict(c.properties) for c in capped.caps]
    deg = topo.gauss_degree(capped.mesh, capped.poles, v)
    summary = dict(_mesh_summary(capped.mesh), mesh=mpath, poles_file=ppath, n_poles=len(poles),
                   poles_plus=sum(p["normal_sign"] > 0 for p in poles), sigmas=capped.sigmas,
                   cap_properties=props, degree=deg.integral, pole_degree=deg.pole_degree,
                   seam_dihedral=capped.seam_dihedral)
    _emit(args, (args.name or "capped") + "_summary.json", summary)
    ok = all(all(p.values()) for p in props) and not deg.mismatch
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_degree(args):
    mesh = read_mesh(args.input)
    v = _floats(args.v)
    poles = _load_poles(args.poles) if args.poles else None
    d = topo.gauss_degree(mesh, poles, v)
    summary = {"chi": d.chi, "genus": d.genus, "degree": d.integral, "degree_raw": d.integral_raw,
               "pole_degree": d.pole_degree, "n_poles": d.n_poles, "poles_plus": d.n_plus,
               "mismatch": d.mismatch, "defect_error": d.defect_error,
               "boundary_loops": euler_characteristic(mesh)[1]}
    _emit(args, "degree_summary.json", summary)
    return EXIT_VERIFY if d.mismatch else EXIT_OK


def cmd_sweep(args):
    mesh = read_mesh(args.input)
    v = _floats(args.v)
    if args.noise:
        mesh = planes.perturb_mesh(mesh, args.noise, seed=args.seed, v=v)
    w = planes.direction(args.theta, v)
    cfg = planes.default_config(mesh, w, v, bin_size=args.bin, tolerance=args.tol)
    res = planes.alexandrov_sweep(mesh, args.theta, cfg, v=v)
    res.write_csv(_out(args, "sweep.csv"))
    doc = res.to_json_dict()
    doc["median_edge"] = float(np.median(mesh.edge_lengths()))
    doc["noise"] = args.noise
    doc["seed"] = args.seed
    _emit(args, "sweep_summary.json", doc)
    if args.require_symmetric and not res.symmetric_at_zero:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_flow(args):
    if args.input:
        pts = np.loadtxt(args.input, delimiter=",", ndmin=2, skiprows=1)[:, :2]
        curve = curves.PlanarCurve(curves.resample_uniform(pts, args.n))
    elif args.ellipse:
        a, b = _floats(args.ellipse)
        curve = curves.ellipse(a, b, args.n)
    else:
        curve = curves.circle(args.circle, args.n)
    t_end = args.t_end
    until_round = t_end is None
    res = curves.curve_shortening_flow(curve, normalize=args.normalize, t_end=t_end,
                                       until_round=until_round, round_tol=args.round_tol,
                                       record_every=args.record_every)
    with open(_out(args, "flow_ratios.csv"), "w") as fh:
        fh.write("t,ratio,area,length\n")
        for row in zip(res.times, res.ratios, res.areas, res.lengths):
            fh.write("%.17g,%.17g,%.17g,%.17g\n" % row)
    if args.frames:
        curves.write_frames_csv(res.times, res.frames, _out(args, "flow_frames.csv"))
    summary = {"steps": res.steps, "reason": res.reason, "final_ratio": res.ratios[-1],
               "t_final": res.times[-1], "embedded": res.embedded, "halvings": res.halvings,
               "n": len(curve)}
    _emit(args, "flow_summary.json", summary)
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--config", help="key=value file with option defaults")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="translab", description="Translating soliton laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="build an example surface")
    g.add_argument("kind", choices=["grim-reaper", "grim-hyperplane", "paraboloid", "catenoid", "graphical"])
    g.add_argument("--name")
    g.add_argument("--c", type=float, default=0.0)
    g.add_argument("--xmax", type=float, default=1.0)
    g.add_argument("--n", type=int, default=65)
    g.add_argument("--smax", type=float, default=10.0)
    g.add_argument("--step", type=float, default=1e-3)
    g.add_argument("--neck", type=float, default=1.0)
    g.add_argument("--ntheta", type=int, default=64)
    g.add_argument("--ns", type=int, default=None)
    g.add_argument("--height", type=float, default=None)
    g.add_argument("--radius", type=float, default=5.0)
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--format", choices=["obj", "ply"], default="obj")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", parents=[common], help="identity residuals and convergence orders")
    v.add_argument("--source", default="grim-hyperplane",
                   help="grim-hyperplane, sphere, flat or a chart CSV file")
    v.add_argument("--ladder", default="32,64,128")
    v.add_argument("--identities", default=None, help="comma separated filter")
    v.add_argument("--ceiling", type=float, default=1e-2)
    v.add_argument("--order", type=int, choices=[2, 4], default=2)
    v.add_argument("--c", type=float, default=0.0)
    v.add_argument("--w-min-x", type=float, default=0.3, dest="w_min_x",
                   help="restrict the W field checks to x > this value")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("cap", parents=[common], help="glue caps onto planar boundary loops")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--sigma", type=float, default=0.1)
    c.add_argument("--v", default="0,0,1")
    c.add_argument("--name")
    c.add_argument("--format", choices=["obj", "ply"], default="obj")
    c.set_defaults(func=cmd_cap)

    d = sub.add_parser("degree", parents=[common], help="Gauss map degree of a closed mesh")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--poles", help="poles JSON written by 'cap'")
    d.add_argument("--v", default="0,0,1")
    d.set_defaults(func=cmd_degree)

    s = sub.add_parser("sweep", parents=[common], help="moving-plane symmetry sweep")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--v", default="0,0,1")
    s.add_argument("--bin", type=float, default=None)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--noise", type=float, default=0.0,
                   help="Gaussian vertex noise (absolute std), drawn with --seed")
    s.add_argument("--require-symmetric", action="store_true", dest="require_symmetric")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("flow", parents=[common], help="curve shortening flow of a planar curve")
    src = f.add_mutually_exclusive_group()
    src.add_argument("--circle", type=float, default=1.0)
    src.add_argument("--ellipse", help="semi-axes a,b")
    src.add_argument("--in", dest="input", help="CSV with header and x,y columns")
    f.add_argument("--n", type=int, default=256)
    f.add_argument("--normalize", action="store_true")
    f.add_argument("--t-end", type=float, default=None, dest="t_end")
    f.add_argument("--round-tol", type=float, default=1e-4, dest="round_tol")
    f.add_argument("--record-every", type=int, default=10, dest="record_every")
    f.add_argument("--frames", action="store_true", help="also write every recorded frame")
    f.set_defaults(func=cmd_flow)
    return p


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if args.config:
            subparser = parser._subparsers._group_actions[0].choices[args.command]
            _apply_config(subparser, read_config(args.config))
            args = parser.parse_args(argv)
        configure_threads()
        return args.func(args)
    except SystemExit as exc:      # argparse usage errors
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    except (InputError, ValueError, OSError) as exc:
        print(f"translab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TranslabError as exc:
        print(f"translab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
