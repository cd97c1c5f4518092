"""Command-line entry points: capture, process, evaluate, serve."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .capture import CaptureConfig, CameraIntrinsics, load_scene, simulate_scan
from .errors import CloudSketchError
from .evaluation import EvalConfig, IcpConfig, evaluate, read_correspondences
from .formats.obj import read_obj
from .formats.ply import read_ply, write_ply
from .formats.script import read_script
from .formats.trajectory import read_trajectory
from .geometry import Aabb
from .service import SessionService
from .toolbox import EditSession, apply_script

REPORT_DECIMALS = 9


def _parse_crop(text: str) -> Aabb:
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("crop needs x0,y0,z0,x1,y1,z1")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError("crop bounds must be numbers")
    lo, hi = np.array(values[:3]), np.array(values[3:])
    if np.any(lo > hi):
        raise argparse.ArgumentTypeError("crop min exceeds max")
    return Aabb(lo, hi)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudsketch",
        description="Capture, edit, and evaluate workcell point clouds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capture", help="simulate a scan of a mesh scene")
    cap.add_argument("--scene", required=True, help="scene config JSON")
    cap.add_argument("--trajectory", required=True, help="pose log file")
    cap.add_argument("--crop", type=_parse_crop, default=None,
                     help="bounding box x0,y0,z0,x1,y1,z1")
    cap.add_argument("--out", required=True, help="output PLY path")
    cap.add_argument("--format", choices=("ascii", "binary_le"),
                     default="binary_le")

    proc = sub.add_parser("process", help="apply a session script to a cloud")
    proc.add_argument("--in", dest="input", required=True, help="input PLY")
    proc.add_argument("--script", required=True, help="session script file")
    proc.add_argument("--out", required=True, help="output PLY path")
    proc.add_argument("--format", choices=("ascii", "binary_le"),
                      default="binary_le")

    ev = sub.add_parser("evaluate", help="cloud-to-mesh accuracy report")
    ev.add_argument("--cloud", required=True, help="scan PLY")
    ev.add_argument("--mesh", required=True, help="ground-truth OBJ")
    ev.add_argument("--correspondences", required=True,
                    help="pointId qx qy qz lines")
    ev.add_argument("--samples", type=int, default=EvalConfig().mesh_samples,
                    help="mesh sample count for ICP")
    ev.add_argument("--icp-distance", type=float,
                    default=IcpConfig().max_correspondence_distance,
                    help="ICP correspondence gate in meters")
    ev.add_argument("--report", required=True, help="output report JSON")
    ev.add_argument("--heatmap", default=None, help="optional heat-map PLY")
    ev.add_argument("--per-point", action="store_true",
                    help="include per-point distances in the report")

    srv = sub.add_parser("serve", help="run the editing service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=7060)
    srv.add_argument("--cloud", default=None, help="PLY to load at startup")
    return parser


def _cmd_capture(args) -> int:
    scene = load_scene(args.scene)
    trajectory = read_trajectory(args.trajectory)
    cloud = simulate_scan(scene, trajectory, CameraIntrinsics.default(),
                          CaptureConfig(), crop=args.crop)
    write_ply(cloud, args.out, format=args.format)
    print("captured %d points -> %s" % (len(cloud), args.out))
    return 0


def _cmd_process(args) -> int:
    cloud = read_ply(args.input)
    script = read_script(args.script)
    session = EditSession(cloud)
    apply_script(session, script)
    write_ply(session.committed, args.out, format=args.format)
    print("processed %d -> %d points -> %s"
          % (len(cloud), len(session.committed), args.out))
    return 0


def _cmd_evaluate(args) -> int:
    cloud = read_ply(args.cloud)
    mesh = read_obj(args.mesh)
    corr = read_correspondences(args.correspondences)
    cfg = EvalConfig(
        mesh_samples=args.samples,
        icp=IcpConfig(max_correspondence_distance=args.icp_distance),
    )
    report, heatmap = evaluate(cloud, mesh, corr, cfg)
    payload = {
        "count": len(report.distances),
        "mean": round(report.mean, REPORT_DECIMALS),
        "median": round(report.median, REPORT_DECIMALS),
        "std": round(report.std, REPORT_DECIMALS),
        "min": round(report.min, REPORT_DECIMALS),
        "max": round(report.max, REPORT_DECIMALS),
    }
    if args.per_point:
        payload["distances"] = [
            round(float(d), REPORT_DECIMALS) for d in report.distances
        ]
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.heatmap:
        write_ply(heatmap, args.heatmap)
    print("mean error %.9f m over %d points -> %s"
          % (report.mean, payload["count"], args.report))
    return 0


def _cmd_serve(args) -> int:
    session = None
    if args.cloud:
        session = EditSession(read_ply(args.cloud))
    service = SessionService(host=args.host, port=args.port, session=session)
    host, port = service.address
    print("listening on %s:%d" % (host, port), flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


_COMMANDS = {
    "capture": _cmd_capture,
    "process": _cmd_process,
    "evaluate": _cmd_evaluate,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CloudSketchError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
