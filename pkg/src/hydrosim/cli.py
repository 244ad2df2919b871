"""Command line interface.

Subcommands:
  run       scripted-follower pipe episode; writes TUM + CSV (+ frames)
  serve     newline-delimited JSON session server (TCP or stdio)
  bench     APE/RPE benchmark of an estimated vs ground-truth TUM file
  render    single frame from a scene file and camera pose
  validate  schema-check config files

Exit codes: 0 success, 2 configuration/usage error, 3 runtime divergence.
Set HYDROSIM_LOG to DEBUG/INFO/WARNING/ERROR to control logging.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_config_args(p):
    from .config import data_path

    p.add_argument("--vehicle", default=str(data_path("bluerov2_heavy.json")),
                   help="vehicle config JSON")
    p.add_argument("--scenario", default=str(data_path("pipe20.json")),
                   help="scenario config JSON")
    p.add_argument("--water", default=str(data_path("ocean_water.json")),
                   help="water optics / camera config JSON")


def build_parser():
    parser = argparse.ArgumentParser(prog="hydrosim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scripted-follower pipe episode")
    _add_config_args(p_run)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", default="hydrosim_run", help="output directory")
    p_run.add_argument("--render", action=argparse.BooleanOptionalAction, default=True,
                       help="write camera frames each step")
    p_run.add_argument("--synth-est", action=argparse.BooleanOptionalAction, default=False,
                       help="also write a synthetic noisy-odometry estimate")

    p_serve = sub.add_parser("serve", help="run the session protocol server")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=7777)
    p_serve.add_argument("--stdio", action="store_true", help="serve one session over stdio")

    p_bench = sub.add_parser("bench", help="trajectory benchmark (TUM files)")
    p_bench.add_argument("--gt", required=True, help="ground-truth TUM file")
    p_bench.add_argument("--est", required=True, help="estimated TUM file")
    p_bench.add_argument("--align", choices=("sim3", "se3", "none"), default="sim3")
    p_bench.add_argument("--rpe-delta", type=int, default=1)
    p_bench.add_argument("--max-dt", type=float, default=0.02)
    p_bench.add_argument("--traj-name", default=None, help="trajectory column label")
    p_bench.add_argument("--algo-name", default=None, help="algorithm column label")
    p_bench.add_argument("--out", default=None, help="write report to .md or .json file")

    p_render = sub.add_parser("render", help="render one frame from a scene file")
    p_render.add_argument("--scene", required=True, help="scene JSON file")
    p_render.add_argument("--water", default=None, help="water optics config JSON")
    p_render.add_argument("--pose", default="0,0,7.7,0,0,0",
                          help="vehicle pose x,y,z,roll,pitch,yaw")
    p_render.add_argument("--out", default="frame.ppm", help="RGB output (PPM)")
    p_render.add_argument("--depth-out", default=None, help="depth output (16-bit PGM)")

    p_val = sub.add_parser("validate", help="validate config files")
    p_val.add_argument("--vehicle", default=None)
    p_val.add_argument("--scenario", default=None)
    p_val.add_argument("--water", default=None)
    p_val.add_argument("--scene", default=None)

    return parser


def cmd_run(args) -> int:
    from .config import load_scenario_config, load_vehicle_config, load_water_config
    from .scenario import PipeInspectionEnv, scripted_follower
    from .sim import Simulation

    vehicle = load_vehicle_config(args.vehicle)
    scenario = load_scenario_config(args.scenario)
    optics, intrinsics = load_water_config(args.water)
    scenario.seed = args.seed
    sim = Simulation(dynamics=vehicle.dynamics, thrusters=vehicle.thrusters,
                     water=vehicle.water, dt=vehicle.physics_dt,
                     disturbance=vehicle.disturbance)
    env = PipeInspectionEnv(sim, scenario, vehicle.mpc, optics=optics,
                            intrinsics=intrinsics, render=args.render)
    env.reset(seed=args.seed)
    os.makedirs(args.out, exist_ok=True)

    frames_dir = os.path.join(args.out, "frames")
    if args.render:
        os.makedirs(frames_dir, exist_ok=True)
    max_e_p = 0.0
    rewards = []
    while not env.status.terminated:
        action = scripted_follower(sim.state, scenario.layout)
        frame, r, status, info = env.step(action)
        rewards.append(r)
        max_e_p = max(max_e_p, info["e_p"])
        if frame is not None:
            from .camera import write_pgm16, write_ppm

            stem = os.path.join(frames_dir, f"step{status.step:04d}")
            write_ppm(stem + ".ppm", frame.rgb)
            write_pgm16(stem + ".pgm", frame.depth)

    tum_path = os.path.join(args.out, "gt.tum")
    csv_path = os.path.join(args.out, "scores.csv")
    env.write_logs(tum_path, csv_path)
    if args.synth_est:
        from .traj import read_tum, synth_odometry, write_tum

        est = synth_odometry(read_tum(tum_path), drift=0.002, noise_sigma=0.005,
                             seed=args.seed)
        write_tum(est, os.path.join(args.out, "synth_est.tum"))
    print(f"episode finished: reason={env.status.reason} steps={env.status.step} "
          f"cumulative_reward={env.status.cumulative_reward:.3f} max_e_p={max_e_p:.3f} m")
    print(f"wrote {tum_path} and {csv_path}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .protocol import serve_stdio, serve_tcp

    if args.stdio:
        serve_stdio()
        return EXIT_OK
    server = serve_tcp(args.host, args.port)
    print(f"hydrosim serving on {server.server_address[0]}:{server.server_address[1]}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_bench(args) -> int:
    from .traj import ReportEntry, evaluate, format_report, read_tum

    gt = read_tum(args.gt)
    est = read_tum(args.est)
    report = evaluate(est, gt, align=args.align, rpe_delta=args.rpe_delta, max_dt=args.max_dt)
    entry = ReportEntry(
        trajectory=args.traj_name or os.path.splitext(os.path.basename(args.gt))[0],
        algorithm=args.algo_name or os.path.splitext(os.path.basename(args.est))[0],
        report=report,
    )
    markdown = format_report([entry])
    print(markdown)
    if args.out:
        fmt = "json" if args.out.endswith(".json") else "markdown"
        with open(args.out, "w") as f:
            f.write(format_report([entry], fmt=fmt) + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_render(args) -> int:
    from .camera import CameraIntrinsics, WaterOptics, capture, write_pgm16, write_ppm
    from .config import load_water_config
    from .scene import load_scene

    scene = load_scene(args.scene)
    if args.water:
        optics, intrinsics = load_water_config(args.water)
    else:
        optics, intrinsics = WaterOptics(), CameraIntrinsics()
    pose = np.array([float(x) for x in args.pose.split(",")])
    if pose.shape != (6,):
        raise ValueError("--pose needs 6 comma-separated numbers")
    frame = capture(scene, optics, intrinsics, pose)
    write_ppm(args.out, frame.rgb)
    outputs = [args.out]
    if args.depth_out:
        write_pgm16(args.depth_out, frame.depth)
        outputs.append(args.depth_out)
    print("wrote " + " and ".join(outputs))
    return EXIT_OK


def cmd_validate(args) -> int:
    from .config import validate_files

    targets = {k: getattr(args, k) for k in ("vehicle", "scenario", "water", "scene")
               if getattr(args, k)}
    if not targets:
        print("nothing to validate; pass --vehicle/--scenario/--water/--scene", file=sys.stderr)
        return EXIT_CONFIG
    validate_files(**targets)
    for kind, path in targets.items():
        print(f"{kind}: {path} OK")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("HYDROSIM_LOG", "WARNING").upper(),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    from .config import ConfigError
    from .dynamics import DivergenceError

    commands = {
        "run": cmd_run,
        "serve": cmd_serve,
        "bench": cmd_bench,
        "render": cmd_render,
        "validate": cmd_validate,
    }
    try:
        return commands[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
