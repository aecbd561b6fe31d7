"""Command-line interface.

Subcommands wrap one module pipeline each: generate, decompose, control,
simulate, rigidify, predict, render, and compare.  Exit codes: 0 on
success, 1 on a domain error, 2 on a usage error.  All randomness is
seeded; rerunning a command with the same seed reproduces its outputs
byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import (control, experiments, loadpredict, multiscale, networks,
               nullspace, render, rigidify, rigidity, springsim)
from .errors import FloppyNetError


def _write_json(data, path):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_network(args) -> networks.Network:
    if getattr(args, "fixture", None):
        return networks.fixture(args.fixture)
    if not args.network:
        raise FloppyNetError("need --network or --fixture")
    return networks.load(args.network)


def cmd_generate(args) -> None:
    spec = networks.GeneratorSpec(
        kind=args.kind, dimensions=(args.nx, args.ny),
        dilution_fraction=args.dilution, seed=args.seed,
        boundary=args.boundary, n_disks=args.n_disks,
        target_dof=args.target_dof)
    networks.save(networks.generate(spec), args.out)


def cmd_decompose(args) -> None:
    net = _load_network(args)
    R = rigidity.build(net)
    if args.ensemble > 1:
        ens = nullspace.ensemble(R, m=args.ensemble, base_seed=args.seed,
                                 jobs=args.jobs, zero_tol=args.zero_tol)
        data = {
            "runs": [nullspace.basis_to_dict(b) for b in ens.bases],
            "participation": [b.participation for b in ens.bases],
            "mean_participation": float(ens.participation_rates().mean()),
        }
    else:
        if args.method == "snd":
            basis = nullspace.snd_basis(R, zero_tol=args.zero_tol,
                                        shuffle_seed=args.seed)
        elif args.method == "svd":
            basis = nullspace.svd_basis(R, zero_tol=args.zero_tol)
        else:
            basis = multiscale.multiscale_basis(net, zero_tol=args.zero_tol,
                                                seed=args.seed)
        data = nullspace.basis_to_dict(basis)
    if not R.has_anchors:
        data["warning"] = "network has no fixed nodes; basis includes rigid-body motions"
    _write_json(data, args.out)


def cmd_control(args) -> None:
    net = _load_network(args)
    with open(args.task) as fh:
        spec = json.load(fh)
    task = control.ControlTask(
        net, effectors=[int(e) for e in spec["effectors"]],
        target=np.asarray(spec["target"], float),
        tolerance=float(spec.get("tolerance", 0.05)),
        max_steps=int(spec.get("max_steps", 200)),
        step_size=spec.get("step_size"),
        basis_method=spec.get("basis_method", "SND"),
        seed=args.seed)
    trace = control.run_task(task)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mode_id", "activation", "distance", "energy"])
        for r in trace.records:
            writer.writerow([r.step, r.mode_id, "%.12g" % r.activation,
                             "%.12g" % r.distance, "%.12g" % r.energy])
    summary = {
        "success": trace.success,
        "steps": len(trace.records),
        "total_energy": trace.total_energy,
        "activation_times": {str(k): v for k, v in trace.activation_times.items()},
        "recanonicalized_at": trace.recanonicalized_at,
    }
    _write_json(summary, args.out + ".json")


def cmd_simulate(args) -> None:
    net = _load_network(args)
    config = springsim.SimConfig(steps=args.steps, dt=args.dt,
                                 noise_amplitude=args.noise, seed=args.seed,
                                 strain=args.gamma)
    if args.protocol == "shear_top_row":
        result = springsim.shear_modulus(net, config)
    elif args.protocol == "radial_stretch":
        result = springsim.radial_stretch(net, config)
    else:
        result = springsim.relax(net, config)
    a, b, _ = net.edge_arrays()
    data = {
        "E": result.energy,
        "noise_floor_flagged": result.noise_floor_flagged,
        "per_edge": [
            {"a": int(x), "b": int(y), "extension": float(ext),
             "scaled_extension": float(sc)}
            for x, y, ext, sc in zip(a, b, result.per_edge_extension,
                                     result.scaled_extension)],
        "positions": [[float(p[0]), float(p[1])] for p in result.positions],
    }
    if result.shear_modulus is not None:
        data["G"] = result.shear_modulus
    _write_json(data, args.out)


def cmd_rigidify(args) -> None:
    net = _load_network(args)
    config = springsim.SimConfig(steps=args.steps)
    protocol = {"ms": "MS", "random": "random"}[args.protocol]
    run = rigidify.tune(net, protocol, seed=args.seed, stop_at=args.stop_at,
                        config=config)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "added_a", "added_b", "edge_count", "G"])
        writer.writerow([0, "", "", run.g_curve[0][0], "%.12g" % run.g_curve[0][1]])
        for k, (link, (count, g)) in enumerate(
                zip(run.link_sequence, run.g_curve[1:]), start=1):
            writer.writerow([k, link[0], link[1], count, "%.12g" % g])


def cmd_predict(args) -> None:
    net = _load_network(args)
    gmap = loadpredict.globality(net, m=args.m, base_seed=args.seed,
                                 jobs=args.jobs)
    predicted = loadpredict.predict_loaded_edges(net, gmap, t=args.t,
                                                 mark_all_ties=args.all_ties)
    data = {
        "eligible_nodes": sorted(loadpredict._eligible_nodes(net, gmap, args.t)),
        "predicted_edges": sorted([list(e) for e in predicted]),
        "globality": {str(k): v for k, v in gmap.f.items()},
        "rigid_nodes": sorted(gmap.rigid_nodes),
        "params": {"t": args.t, "m": args.m, "seed": args.seed},
    }
    _write_json(data, args.out)
    if args.extensions:
        extensions = {}
        with open(args.extensions, newline="") as fh:
            for row in csv.DictReader(fh):
                key = (int(row["edge_a"]), int(row["edge_b"]))
                extensions[tuple(sorted(key))] = float(row["extension"])
        grid = sorted({abs(v) for v in extensions.values()})
        curve, best_e, best_eta = loadpredict.threshold_sweep(
            predicted, extensions, grid, args.t)
        with open(args.out + ".scores.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["e", "eta"])
            for e, eta in curve:
                writer.writerow(["%.12g" % e, "%.12g" % eta])
        print(f"max eta {best_eta:.4f} at e {best_e:.6g}")


def cmd_render(args) -> None:
    net = _load_network(args)
    kwargs = {}
    overlay = args.overlay
    if overlay.startswith("mode:"):
        with open(args.basis) as fh:
            basis = json.load(fh)
        index = int(overlay.split(":", 1)[1])
        runs = basis.get("runs")
        modes = (runs[0] if runs else basis)["modes"]
        v = np.zeros(net.n_coords)
        for coord, value in modes[index]["entries"]:
            v[int(coord)] = value
        kwargs["mode_vector"] = v
    elif overlay == "globality":
        with open(args.prediction) as fh:
            pred = json.load(fh)
        kwargs["node_values"] = {int(k): float(v)
                                 for k, v in pred["globality"].items()}
    elif overlay == "extensions":
        with open(args.sim) as fh:
            sim = json.load(fh)
        kwargs["edge_values"] = {(r["a"], r["b"]): r["scaled_extension"]
                                 for r in sim["per_edge"]}
    elif overlay == "prediction":
        with open(args.prediction) as fh:
            pred = json.load(fh)
        kwargs["marked_edges"] = {tuple(e) for e in pred["predicted_edges"]}
    elif overlay != "none":
        raise FloppyNetError(f"unknown overlay {overlay!r}")
    if args.bounds:
        kwargs["colour_bounds"] = tuple(args.bounds)
    render.save_svg(render.render_network(net, **kwargs), args.out)


def cmd_compare(args) -> None:
    if args.experiment == "participation":
        net = networks.lattice_fixture_4x4()
        data = experiments.participation_comparison(net, args.n, args.seed,
                                                    jobs=args.jobs)
    elif args.experiment == "involvement":
        net = networks.hinged_fixture()
        data = experiments.involvement_comparison(net, args.n, args.seed)
    elif args.experiment == "grasping":
        data = experiments.grasping_experiment(args.n, args.seed, args.method)
        data["mean_first_activation"] = {
            str(k): v for k, v in data["mean_first_activation"].items()}
    elif args.experiment == "energy":
        data = experiments.reaching_energy_comparison(n_pairs=args.n,
                                                      base_seed=args.seed)
        data["energies"] = [[float(a), float(b)] for a, b in data["energies"]]
    else:
        raise FloppyNetError(f"unknown experiment {args.experiment!r}")
    _write_json(data, args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floppynet",
        description="Floppy-mode analysis and control of 2D networks")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="procedurally generate a network")
    p.add_argument("--kind", required=True,
                   choices=["triangular_lattice", "bidisperse_packing",
                            "robot_arm", "molecule_fixture"])
    p.add_argument("--nx", type=int, default=4)
    p.add_argument("--ny", type=int, default=4)
    p.add_argument("--dilution", type=float, default=None)
    p.add_argument("--boundary", default="open")
    p.add_argument("--n-disks", type=int, default=48)
    p.add_argument("--target-dof", type=int, default=18)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("decompose", help="compute a floppy-mode basis")
    p.add_argument("--network")
    p.add_argument("--fixture")
    p.add_argument("--method", default="snd",
                   choices=["snd", "svd", "multiscale"])
    p.add_argument("--ensemble", type=int, default=1)
    p.add_argument("--zero-tol", type=float, default=nullspace.ZERO_TOL)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("control", help="run a reaching/grasping task")
    p.add_argument("--network")
    p.add_argument("--fixture")
    p.add_argument("--task", required=True, help="task spec JSON")
    p.add_argument("--out", required=True, help="trace CSV path")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("simulate", help="relax a spring network")
    p.add_argument("--network")
    p.add_argument("--fixture")
    p.add_argument("--protocol", default="none",
                   choices=["none", "shear_top_row", "radial_stretch"])
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--noise", type=float, default=1e-4)
    p.add_argument("--gamma", type=float, default=0.08)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rigidify", help="sequential stiffness tuning")
    p.add_argument("--network")
    p.add_argument("--fixture")
    p.add_argument("--protocol", required=True, choices=["ms", "random"])
    p.add_argument("--stop-at", type=int, default=None)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--out", required=True, help="curve CSV path")
    p.set_defaults(func=cmd_rigidify)

    p = sub.add_parser("predict", help="predict load-bearing links")
    p.add_argument("--network")
    p.add_argument("--fixture")
    p.add_argument("--m", type=int, default=loadpredict.DEFAULT_ENSEMBLE)
    p.add_argument("--t", type=float, default=loadpredict.DEFAULT_THRESHOLD)
    p.add_argument("--all-ties", action="store_true")
    p.add_argument("--extensions", help="CSV (edge_a, edge_b, extension)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("render", help="render a network to SVG")
    p.add_argument("--network")
    p.add_argument("--fixture")
    p.add_argument("--overlay", default="none",
                   help="none | mode:K | globality | extensions | prediction")
    p.add_argument("--basis", help="basis JSON (mode overlay)")
    p.add_argument("--sim", help="simulation JSON (extensions overlay)")
    p.add_argument("--prediction", help="prediction JSON")
    p.add_argument("--bounds", type=float, nargs=2, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("compare", help="paired sparse-vs-SVD experiments")
    p.add_argument("--experiment", required=True,
                   choices=["participation", "involvement", "grasping",
                            "energy"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--method", default="multiscale")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except FloppyNetError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
