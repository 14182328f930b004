"""Command-line interface.

Subcommands: generate, retarget, inpaint, analogy, and metrics diversity.
Every option can also come from a plain key=value config file (# starts a
comment; keys are the long flag names without the leading dashes); flags
given on the command line override the file.  Exit codes: 0 success,
1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dynstruct import block_flow, flow_magnitude, quantize_joint
from .io import DataFormatError, read_mask, read_tensor, read_video, write_video
from .metrics import SampleSet, diversity_index
from .patches import PatchSpec
from .pipelines import CueMask, PipelineConfig, analogies, generate, inpaint, retarget
from .pyramid import ScaleFactors


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _shape3(s: str):
    parts = s.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected TxHxW, got {s!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in TxHxW, got {s!r}") from None


def _steps(s: str):
    try:
        return tuple(int(p) for p in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _add_tuning(p: _Parser, *, spatial=0.82, temporal=0.87, min_t=3, min_s=15,
                patch_large="3x7x7", patch_small="3x5x5", em_large=5, em_small=1,
                alpha=None):
    p.add_argument("--config", help="key=value config file supplying any flag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spatial-factor", type=float, default=spatial)
    p.add_argument("--temporal-factor", type=float, default=temporal)
    p.add_argument("--min-t", type=int, default=min_t)
    p.add_argument("--min-s", type=int, default=min_s)
    p.add_argument("--patch-large", type=_shape3, default=_shape3(patch_large))
    p.add_argument("--patch-small", type=_shape3, default=_shape3(patch_small))
    p.add_argument("--em-large", type=int, default=em_large)
    p.add_argument("--em-small", type=int, default=em_small)
    p.add_argument("--voxel-threshold", type=int, default=3_000_000)
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--solver", choices=["patchmatch", "exhaustive"], default="patchmatch")
    p.add_argument("--pm-steps", type=_steps, default=(8, 4, 1))
    p.add_argument("--pm-passes", type=int, default=5)


def _config_from_args(args, **extra) -> PipelineConfig:
    return PipelineConfig(
        factors=ScaleFactors.of(args.spatial_factor, args.temporal_factor),
        min_t=args.min_t,
        min_s=args.min_s,
        spec_large=PatchSpec(*args.patch_large),
        spec_small=PatchSpec(*args.patch_small),
        em_iters_large=args.em_large,
        em_iters_small=args.em_small,
        voxel_threshold=args.voxel_threshold,
        alpha=args.alpha,
        solver=args.solver,
        pm_steps=args.pm_steps,
        pm_passes=args.pm_passes,
        seed=args.seed,
        **extra,
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="patchsynth",
        description="Patch nearest-neighbor video generation and manipulation",
        epilog="VGPNN_THREADS caps worker threads (default: hardware parallelism).",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    g = sub.add_parser("generate", help="sample diverse new videos from one input")
    g.add_argument("--input", required=True, help="input frame directory")
    g.add_argument("--output", required=True, help="output frame directory")
    g.add_argument("--noise-std", type=float, default=3.0)
    g.add_argument("--temporal-shrink", type=float, default=0.9)
    g.add_argument("--out-shape", type=_shape3, default=None)
    _add_tuning(g)

    r = sub.add_parser("retarget", help="resize a video without distorting content")
    r.add_argument("--input", required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--target", type=_shape3, required=True, help="target shape TxHxW")
    _add_tuning(r, alpha=1.0)

    i = sub.add_parser("inpaint", help="fill an occluded region following color cues")
    i.add_argument("--input", required=True)
    i.add_argument("--output", required=True)
    i.add_argument("--mask", required=True, help="occlusion mask (.vgt, c=1, 0/1)")
    i.add_argument("--cue", required=True, help="cue colors (.vgt, c=3, [-1,1])")
    _add_tuning(i, alpha=1.0)

    a = sub.add_parser("analogy", help="transfer a style video onto a content layout")
    a.add_argument("--content", required=True)
    a.add_argument("--style", required=True)
    a.add_argument("--output", required=True)
    a.add_argument("--flow-content", help="content flow field (.vgt, c=2)")
    a.add_argument("--flow-style", help="style flow field (.vgt, c=2)")
    a.add_argument("--block-flow", action="store_true",
                   help="estimate flow with the built-in block matcher")
    a.add_argument("--bins", type=int, default=5, help="dynamic-structure bins")
    a.add_argument("--block-size", type=int, default=7)
    a.add_argument("--search-radius", type=int, default=4)
    a.add_argument("--aux-max-scale-fraction", type=float, default=0.5)
    _add_tuning(a, spatial=0.9, temporal=0.9, min_s=20,
                patch_large="3x5x5", patch_small="3x5x5", em_large=1, em_small=1,
                alpha=1.0)

    m = sub.add_parser("metrics", help="quantitative evaluation")
    msub = m.add_subparsers(dest="metric", metavar="metric")
    d = msub.add_parser("diversity", help="diversity index of generated samples")
    d.add_argument("--input", required=True, help="input frame directory")
    d.add_argument("--samples", required=True, nargs="+", help="sample frame directories")

    return parser


def _parse_config_file(path: str) -> list[tuple[str, str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"config: cannot read {path}: {e}") from None
    pairs = []
    for ln, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise UsageError(f"config {path}:{ln}: expected key=value, got {s!r}")
        key, value = (part.strip() for part in s.split("=", 1))
        if not key:
            raise UsageError(f"config {path}:{ln}: empty key")
        pairs.append((key, value))
    return pairs


def _merge_config(argv: list[str], parser: _Parser) -> list[str]:
    """Expand --config FILE into flag tokens placed before the explicit flags."""
    if not argv:
        return argv
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return argv
    sub_actions = None
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction) and argv[0] in action.choices:
            sub_actions = action.choices[argv[0]]._actions
    flag_kinds = {}
    if sub_actions:
        for action in sub_actions:
            for opt in action.option_strings:
                flag_kinds[opt.lstrip("-")] = action.nargs == 0
    tokens = []
    for key, value in _parse_config_file(path):
        if key not in flag_kinds:
            raise UsageError(f"config: unknown key {key!r} for command {argv[0]!r}")
        if flag_kinds[key]:
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(f"--{key}")
            elif value.lower() in ("0", "false", "no", "off"):
                pass
            else:
                raise UsageError(f"config: key {key!r} expects a boolean, got {value!r}")
        else:
            tokens.extend([f"--{key}", value])
    return [argv[0]] + tokens + argv[1:]


def _load_dyn_pair(args):
    content = read_video(args.content)
    style = read_video(args.style)
    if args.block_flow:
        fc = block_flow(content, args.block_size, args.search_radius)
        fs = block_flow(style, args.block_size, args.search_radius)
    elif args.flow_content and args.flow_style:
        fc = read_tensor(args.flow_content)
        fs = read_tensor(args.flow_style)
        for name, f, v in (("flow-content", fc, content), ("flow-style", fs, style)):
            if f.shape[3] != 2 or f.shape[:3] != v.shape[:3]:
                raise DataFormatError(
                    f"{name}: expected shape {v.shape[:3] + (2,)}, got {f.shape}"
                )
    else:
        raise UsageError("analogy: provide --flow-content and --flow-style, or --block-flow")
    dyn_c, dyn_s = quantize_joint(flow_magnitude(fc), flow_magnitude(fs), args.bins)
    return content, style, dyn_c, dyn_s


def cli_main(argv) -> int:
    """Run the CLI on an argv list (without the program name); returns the exit code."""
    parser = build_parser()
    try:
        argv = _merge_config(list(argv), parser)
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        if args.command == "metrics" and args.metric is None:
            parser.print_usage(sys.stderr)
            return 1
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        if args.command == "generate":
            x = read_video(args.input)
            cfg = _config_from_args(
                args,
                noise_std=args.noise_std,
                temporal_shrink=args.temporal_shrink,
                out_shape=args.out_shape,
            )
            write_video(generate(x, cfg, args.seed), args.output)
        elif args.command == "retarget":
            x = read_video(args.input)
            cfg = _config_from_args(args)
            write_video(retarget(x, args.target, cfg), args.output)
        elif args.command == "inpaint":
            x = read_video(args.input)
            mask = read_mask(args.mask)
            cue_values = read_tensor(args.cue)
            cfg = _config_from_args(args)
            write_video(inpaint(x, CueMask(mask, cue_values), cfg), args.output)
        elif args.command == "analogy":
            content, style, dyn_c, dyn_s = _load_dyn_pair(args)
            cfg = _config_from_args(
                args, aux_max_scale_fraction=args.aux_max_scale_fraction
            )
            write_video(analogies(content, style, dyn_c, dyn_s, cfg), args.output)
        elif args.command == "metrics":
            samples = [read_video(d) for d in args.samples]
            value = diversity_index(SampleSet(read_video(args.input), samples))
            print(f"{value:.6f}")
            return 0
        else:
            print(f"error: unknown command {args.command!r}", file=sys.stderr)
            return 1
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DataFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


def main() -> int:
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
