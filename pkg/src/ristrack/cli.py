"""Command-line entry point: ``ristrack <command> [--config PATH] [--out DIR] [--seed N]``."""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import controlplane as cp
from .codebook import CodebookParseError, generate_codebook, load_codebook, save_codebook
from .config import (AXIS_KEYS, CODEBOOK_CMD_KEYS, PATTERN_KEYS, ConfigError, _Section,
                     load_config, parse_geometry, parse_grid, parse_incident, parse_scenario)
from .errors import DomainError
from .simulator import (breakdown_sweep, compare, dumps_report, policy_summary, run,
                        write_trace_csv)
from .wavefield import ElementPattern, main_lobe, pattern_cut

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read(args, default: str | None) -> tuple[dict, Path]:
    ref = args.config or default
    if ref is None:
        return {}, Path(".")
    return load_config(ref)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _codebook_from(doc: dict, base: Path, allowed: set[str]):
    s = _Section(doc, "config", allowed)
    if s.get("codebook_path"):
        path = Path(s.get("codebook_path"))
        if not path.is_absolute():
            path = base / path
        if not path.exists():
            raise ConfigError(f"codebook_path: file not found: {path}")
        return load_codebook(path), s
    geom = parse_geometry(s.get("geometry"))
    case = s.get("case", "I")
    incident = parse_incident(s.get("incident"), geom, "near" if case == "I" else "far")
    thetas, phis = parse_grid(s.get("codebook"))
    return generate_codebook(geom, incident, thetas, phis), s


def cmd_codebook(args) -> int:
    doc, base = _read(args, "fig13_codebook")
    book, _ = _codebook_from(doc, base, CODEBOOK_CMD_KEYS)
    path = _out_dir(args) / "codebook.json"
    save_codebook(book, path)
    g = book.geometry
    print(f"wrote {len(book)} codewords to {path}")
    print(f"geometry {g.rows}x{g.cols}, d/lambda={g.spacing_over_lambda:g}, f={g.freq_hz / 1e9:g} GHz, "
          f"incident={book.incident}")
    return EXIT_OK


def cmd_pattern(args) -> int:
    doc, base = _read(args, "fig13_pattern")
    book, s = _codebook_from(doc, base, PATTERN_KEYS)
    ax = s.section("phi_axis", AXIS_KEYS)
    start, stop, step = ax.num("start_deg", -90.0), ax.num("stop_deg", 90.0), ax.num("step_deg", 0.5, positive=True)
    phi = np.radians(np.round(np.arange(round((stop - start) / step) + 1) * step + start, 9))
    theta = math.radians(s.num("theta_cut_deg", 90.0))
    pattern = ElementPattern(s.num("element_exponent", 0.0))
    indices = s.get("indices") or list(range(len(book)))
    out = _out_dir(args)
    g = book.geometry
    for i in indices:
        if not isinstance(i, int) or not 0 <= i < len(book):
            raise ConfigError(f"config.indices: {i!r} is not a codebook index")
        cw = book[i]
        cut = pattern_cut(g, cw.states(g), pattern, theta, phi)
        t_deg, p_deg = cw.desired.degrees
        name = out / f"pattern_{i:03d}_phi{p_deg:+06.1f}.csv"
        cut.write_csv(name)
        lobe = main_lobe(cut)
        print(f"[{i}] desired=({t_deg:.1f}, {p_deg:.1f}) deg  peak={math.degrees(lobe.peak):.2f} deg  "
              f"width_3dB={math.degrees(lobe.width):.2f} deg{' (censored)' if lobe.censored else ''}  -> {name.name}")
    return EXIT_OK


def _print_summary(name: str, summ: dict) -> None:
    snr = summ["snr_db"]
    print(f"{name:>7}: snr p5={snr['p5']:.2f} p50={snr['p50']:.2f} min={snr['min']:.2f} dB  "
          f"overhead={summ['overhead_fraction']:.3f}")


def cmd_simulate(args) -> int:
    doc, _ = _read(args, "case1_vision")
    sc = parse_scenario(doc, args.seed)
    trace = run(sc)
    path = _out_dir(args) / "trace.csv"
    write_trace_csv(trace, path)
    _print_summary(sc.policy, policy_summary(trace))
    print(f"wrote {len(trace)} samples to {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    doc, _ = _read(args, "case1_compare")
    sc = parse_scenario(doc, args.seed)
    policies = doc.get("policies", ["vision", "sweep"])
    report = compare(sc, policies, doc.get("threshold_db"))
    out = _out_dir(args)
    for name, tr in report["_traces"].items():
        write_trace_csv(tr, out / f"trace_{name}.csv")
    (out / "report.json").write_text(dumps_report(report) + "\n")
    for name, summ in report["policies"].items():
        _print_summary(name, summ)
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def cmd_breakdown(args) -> int:
    doc, _ = _read(args, "case1_breakdown")
    sc = parse_scenario(doc, args.seed)
    speeds = doc.get("speeds_deg_s", [28, 60, 100, 118, 150, 200])
    report = breakdown_sweep(sc, speeds)
    path = _out_dir(args) / "breakdown.json"
    path.write_text(dumps_report(report) + "\n")
    for row in report["speeds"]:
        print(f"{row['speed_deg_s']:>6g} deg/s  lock-loss fraction={row['lock_loss_fraction']:.3f}  "
              f"{'held' if row['lock_held'] else 'LOST'}")
    print(f"transition bracket: {report['transition_bracket_deg_s']}")
    return EXIT_OK


def _hex(data: bytes) -> str:
    return " ".join(f"{b:02X}" for b in data)


def _parse_hex(text: str) -> bytes:
    try:
        return bytes.fromhex("".join(text.split()))
    except ValueError:
        raise UsageError(f"not a hex string: {text!r}") from None


def cmd_frame(args) -> int:
    if args.action == "encode":
        op = cp.Opcode[args.opcode.upper()]
        if op == cp.Opcode.INDEX:
            if args.index is None:
                raise UsageError("index frames need --index")
            payload = int(args.index).to_bytes(2, "big")
        else:
            payload = _parse_hex(args.payload or "")
        print(_hex(cp.encode_frame(op, payload)))
        return EXIT_OK
    if not args.hex:
        raise UsageError("decode needs the frame as hex")
    frame = cp.decode_frame(_parse_hex(" ".join(args.hex)))
    op = cp.Opcode(frame.opcode)
    print(f"opcode={op.name} length={frame.length} payload={frame.payload.hex().upper()}")
    if op == cp.Opcode.INDEX and frame.length == 2:
        print(f"index={int.from_bytes(frame.payload, 'big')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ristrack", description=__doc__)
    p.add_argument("--config", help="JSON config file or bundled config name")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    # repeated on each command; SUPPRESS keeps values given before the command
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn, help_ in (("codebook", cmd_codebook, "generate a codebook file"),
                            ("pattern", cmd_pattern, "azimuth pattern cuts as CSV"),
                            ("simulate", cmd_simulate, "run one tracking scenario"),
                            ("compare", cmd_compare, "compare policies on one scenario"),
                            ("breakdown", cmd_breakdown, "lock loss versus angular speed")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
    fp = sub.add_parser("frame", parents=[common], help="control-frame codec")
    fp.add_argument("action", choices=("encode", "decode"))
    fp.add_argument("hex", nargs="*", help="frame bytes as hex (decode)")
    fp.add_argument("--opcode", choices=("index", "dynamic", "download"), default="index")
    fp.add_argument("--index", type=int)
    fp.add_argument("--payload", help="payload bytes as hex (dynamic/download)")
    fp.set_defaults(func=cmd_frame)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError, CodebookParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, cp.FrameError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
