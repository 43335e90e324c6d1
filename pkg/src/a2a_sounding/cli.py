"""Command line front end.

Every subcommand accepts ``--config``, ``--seed`` and ``--out``. Failures
print a single line ``error {json}`` on stderr, where the JSON object holds
``kind``, ``message`` and, for configuration errors, ``fields``; the exit
status identifies the error class (see ``EXIT_CODES``).
"""
import argparse
import json
import sys
from pathlib import Path

from . import campaign as cp
from . import fileio
from .errors import SounderError
from .waveform import peak_sidelobe_db

EXIT_CODES = {
    "error": 1,
    "config": 3,
    "parameter": 4,
    "input": 5,
    "domain": 6,
    "geometry": 7,
    "fit": 8,
    "divergence": 9,
    "tuning": 10,
    "persistence": 11,
}


def _config(args):
    cfg = cp.load_config(args.config) if args.config else cp.default_config()
    return cfg.with_overrides(seed=args.seed, output_dir=args.out)


def _out(cfg):
    return Path(cfg.output_dir)


def cmd_probe(args):
    cfg = _config(args)
    probe = cfg.probe_waveform()
    stem = fileio.write_probe(_out(cfg) / "probe", probe)
    print(f"wrote {stem}.iq ({len(probe.samples)} samples), "
          f"peak sidelobe {peak_sidelobe_db(probe):.1f} dB below the main lobe")


def cmd_plan(args):
    cfg = _config(args)
    poses = cp.plan_to_file(cfg, _out(cfg))
    print(f"wrote {len(poses)} poses to {_out(cfg) / cp.POSES_FILE}")


def cmd_simulate(args):
    cfg = _config(args)
    poses = Path(args.poses) if args.poses else _out(cfg) / cp.POSES_FILE
    n = cp.simulate_to_files(cfg, poses, _out(cfg) / cp.CAPTURE_DIR)
    print(f"wrote {n} captures to {_out(cfg) / cp.CAPTURE_DIR}")


def cmd_extract(args):
    cfg = _config(args)
    captures = Path(args.captures) if args.captures else _out(cfg) / cp.CAPTURE_DIR
    cirs = cp.extract_from_files(cfg, captures, _out(cfg) / cp.CIRS_FILE)
    print(f"wrote {len(cirs)} CIRs to {_out(cfg) / cp.CIRS_FILE}")


def _report(stats):
    pl = stats.path_loss
    print(f"{len(stats.links)} links, {stats.skipped} without detections; "
          f"PL(d0) = {pl.pl_d0:.1f} dB, gamma = {pl.gamma:.2f}"
          f"{' (fixed)' if stats.path_loss_gamma_fixed else ''}, sigma = {pl.sigma:.2f} dB")


def cmd_analyze(args):
    cfg = _config(args)
    poses = Path(args.poses) if args.poses else _out(cfg) / cp.POSES_FILE
    cirs = Path(args.cirs) if args.cirs else _out(cfg) / cp.CIRS_FILE
    _report(cp.analyze_files(cfg, poses, cirs, _out(cfg)))


def cmd_campaign(args):
    cfg = _config(args)
    _report(cp.run_campaign(cfg).stats)
    print(f"outputs in {_out(cfg)}")


def cmd_guidance(args):
    cfg = _config(args)
    summary, _, _ = cp.run_guidance(cfg)
    line = (f"{summary['controller']}: RMS cross-track "
            f"{summary['rms_cross_track_m']:.4f} m")
    if "pid_baseline" in summary:
        line += f", PID baseline {summary['pid_baseline']['rms_cross_track_m']:.4f} m"
    print(line)


def build_parser():
    parser = argparse.ArgumentParser(prog="a2a-sounding",
                                     description="Simulated air-to-air channel sounding toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "probe": (cmd_probe, "write the probe waveform"),
        "plan": (cmd_plan, "write the receiver pose CSV"),
        "simulate": (cmd_simulate, "poses -> captures"),
        "extract": (cmd_extract, "captures -> CIR JSONL"),
        "analyze": (cmd_analyze, "CIRs + poses -> campaign statistics"),
        "campaign": (cmd_campaign, "run the whole pipeline"),
        "guidance": (cmd_guidance, "simulate a path follower on the planned path"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON configuration file (defaults if omitted)")
        p.add_argument("--seed", type=int, help="override the campaign seed")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        if name in ("simulate", "analyze"):
            p.add_argument("--poses", help="pose CSV (default <out>/poses.csv)")
        if name == "extract":
            p.add_argument("--captures", help="capture directory (default <out>/captures)")
        if name == "analyze":
            p.add_argument("--cirs", help="CIR JSONL (default <out>/cirs.jsonl)")
        p.set_defaults(func=func)
    return parser


def error_line(exc):
    kind = getattr(exc, "kind", "error")
    payload = {"kind": kind, "message": str(exc)}
    if getattr(exc, "fields", None):
        payload["fields"] = list(exc.fields)
    return "error " + json.dumps(payload, sort_keys=True)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SounderError as exc:
        print(error_line(exc), file=sys.stderr)
        return EXIT_CODES.get(exc.kind, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
