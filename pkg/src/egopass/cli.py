"""Command-line front end: corpus synthesis, pipeline stages, challenge
generation, the login service, and attacker simulations.

Exit codes: 0 success, 2 configuration problems, 3 data problems (empty or
degenerate corpora), 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import artifacts as artifacts_io
from .attack import AttackerProfile, HttpHarness, InProcessHarness, LatencyModel, simulate_attacker
from .challenges import ARRANGEMENT, SELECTION, generate_arrangement, generate_selection
from .challenges import ArrangementPolicy
from .config import AppConfig, load_config
from .errors import (
    ConfigurationError,
    CorpusEmptyError,
    EgopassError,
    FrameReadError,
    InsufficientDataError,
    InsufficientVariationError,
)
from .ingest import FixationLog, load_frames, select_keyframes
from .pipeline import run_pipeline, run_two_day_pipeline
from .service import AuthService, ChallengeVault, LockoutPolicy
from .store import EventLog
from .synth import default_plan, make_synthetic_corpus, two_day_plan

DATA_ERRORS = (CorpusEmptyError, FrameReadError, InsufficientDataError, InsufficientVariationError)


def _ingest_config(config: AppConfig, day_tag: int = 0):
    cfg = config.ingest
    from .ingest import IngestConfig

    return IngestConfig(
        working_width=cfg.working_width,
        working_height=cfg.working_height,
        selection_mode=cfg.selection_mode,
        day_tag=day_tag,
        fps=cfg.fps,
    )


def cmd_synth(args) -> int:
    if args.two_day:
        plan = two_day_plan(frames_per_scene=args.frames_per_scene)
    else:
        junk_after = [int(x) for x in args.junk_after.split(",")] if args.junk_after else []
        plan = default_plan(
            args.scenes,
            args.frames_per_scene,
            recur=args.recur or None,
            junk_after=junk_after,
        )
    result = make_synthetic_corpus(plan, args.seed, args.out)
    for day, directory in sorted(result["days"].items()):
        print(f"day {day}: {directory}")
    print(f"ground truth: {result['ground_truth']}")
    return 0


def cmd_ingest(args) -> int:
    config = load_config(args.config)
    ingest_config = _ingest_config(config)
    frames = load_frames(args.frames, ingest_config)
    fixations = FixationLog.from_csv(args.fixations) if args.fixations else None
    keyframes = select_keyframes(frames, fixations, ingest_config)
    print(f"frames: {len(frames)}")
    print(f"keyframes: {len(keyframes)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = [
            {
                "frame_id": f.frame_id,
                "timestamp_ms": f.timestamp_ms,
                "sharpness": f.sharpness,
                "has_fixation": f.has_fixation,
            }
            for f in keyframes
        ]
        (out / "keyframes.json").write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
        print(f"wrote {out / 'keyframes.json'}")
    return 0


def _print_summary(summary: dict) -> None:
    for key in (
        "frames",
        "keyframes",
        "segments",
        "clusters",
        "noise_frames",
        "arrangement_candidates",
    ):
        print(f"{key}: {summary[key]}")


def cmd_featurize(args) -> int:
    config = load_config(args.config)
    result = run_pipeline(
        args.frames,
        args.fixations,
        _ingest_config(config),
        config.descriptor,
        config.cluster,
        out_dir=args.out,
    )
    print(f"keyframes: {len(result.keyframes)}")
    print(f"raw -> reduced: {result.pca.raw_length} -> {result.pca.n_components}")
    if args.out:
        print(f"artifacts in {args.out}")
    return 0


def cmd_timeline(args) -> int:
    config = load_config(args.config)
    if args.frames_yesterday:
        result = run_two_day_pipeline(
            {0: args.frames, 1: args.frames_yesterday},
            {0: args.fixations, 1: args.fixations_yesterday},
            _ingest_config(config),
            config.descriptor,
            config.cluster,
        )
        out = Path(args.out) if args.out else None
        if out:
            out.mkdir(parents=True, exist_ok=True)
            for day, timeline in result.timelines.items():
                artifacts_io.write_timeline(out / f"timeline_day{day}.json", timeline)
            print(f"artifacts in {out}")
        for day in sorted(result.timelines, reverse=True):
            timeline = result.timelines[day]
            print(f"day {day}: segments={len(timeline.segments)} threshold={timeline.threshold:.6g}")
        return 0
    result = run_pipeline(
        args.frames,
        args.fixations,
        _ingest_config(config),
        config.descriptor,
        config.cluster,
        out_dir=args.out,
    )
    _print_summary(result.summary())
    if args.out:
        print(f"artifacts in {args.out}")
    return 0


def cmd_generate(args) -> int:
    out_dir = Path(args.artifacts)
    if args.format == ARRANGEMENT:
        timeline = artifacts_io.read_timeline(out_dir / "timeline.json")
        challenges = [
            generate_arrangement(
                timeline,
                ArrangementPolicy(
                    n_images=args.force_length or args.n_images,
                    rng_seed=None if args.seed is None else args.seed + i,
                ),
            )
            for i in range(args.count)
        ]
    else:
        yesterday = artifacts_io.read_timeline(out_dir / "timeline_day1.json")
        today = artifacts_io.read_timeline(out_dir / "timeline_day0.json")
        challenges = [
            generate_selection(
                yesterday,
                today,
                rng_seed=None if args.seed is None else args.seed + i,
                force_n=args.force_length,
            )
            for i in range(args.count)
        ]
    from .service import challenge_client_view

    for challenge in challenges:
        audit = {
            "client_view": challenge_client_view(challenge),
            # server-side audit fields; never cross the wire
            "server_secret": {
                "ground_truth": sorted(challenge.ground_truth)
                if challenge.format == SELECTION
                else list(challenge.ground_truth),
                "k": challenge.k,
                "images": [
                    {"slot": img.slot, "frame_id": img.frame_id, "day_tag": img.day_tag}
                    for img in challenge.images
                ],
            },
        }
        print(json.dumps(audit, sort_keys=True))
    return 0


def _build_vault(args, config: AppConfig) -> ChallengeVault:
    if args.frames_yesterday:
        result = run_two_day_pipeline(
            {0: args.frames, 1: args.frames_yesterday},
            {0: args.fixations, 1: args.fixations_yesterday},
            _ingest_config(config),
            config.descriptor,
            config.cluster,
        )
        return ChallengeVault.from_two_day(result)
    result = run_pipeline(
        args.frames, args.fixations, _ingest_config(config), config.descriptor, config.cluster
    )
    return ChallengeVault.from_pipeline(result, day=0)


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config)
    vault = _build_vault(args, config)
    service = AuthService(
        vault,
        policy=config.lockout,
        n_images=config.n_images,
        selection_tau=config.selection_tau,
        rng_seed=config.rng_seed,
        pairing_code=config.pairing_code,
        event_log=EventLog(args.event_log) if args.event_log else None,
    )
    app = create_app(service)
    print(f"serving on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_attack(args) -> int:
    if args.profile == "oracle":
        profile = AttackerProfile.oracle()
    elif args.profile == "informed":
        profile = AttackerProfile(kind="informed", knowledge=args.knowledge)
    else:
        profile = AttackerProfile(kind=args.profile)

    latency = LatencyModel(mean_s=args.latency_mean, std_s=args.latency_std)
    if args.endpoint:
        harness = HttpHarness(args.endpoint, format=args.format, force_length=args.force_length)
    else:
        config = load_config(args.config)
        if args.frames:
            vault = _build_vault(args, config)
        else:
            # self-contained run on a synthetic corpus
            from .pipeline import run_pipeline_frames, run_two_day_pipeline_frames
            from .synth import render_plan

            ingest_config = _ingest_config(config)
            ingest_config.selection_mode = "fixation"
            if args.format == SELECTION:
                frames_by_day, _ = render_plan(two_day_plan(), args.seed)
                logs = {
                    day: FixationLog(entries=[(0, frames[-1].timestamp_ms + 1)])
                    for day, frames in frames_by_day.items()
                }
                vault = ChallengeVault.from_two_day(
                    run_two_day_pipeline_frames(
                        frames_by_day, logs, ingest_config, config.descriptor, config.cluster
                    )
                )
            else:
                frames_by_day, _ = render_plan(default_plan(), args.seed)
                frames = frames_by_day[0]
                log = FixationLog(entries=[(0, frames[-1].timestamp_ms + 1)])
                vault = ChallengeVault.from_pipeline(
                    run_pipeline_frames(
                        frames, log, ingest_config, config.descriptor, config.cluster
                    )
                )
        from .store import NullLog

        service = AuthService(
            vault,
            policy=LockoutPolicy(max_attempts=10**6, max_entry_time_ms=2**40),
            n_images=config.n_images,
            rng_seed=args.seed,
            event_log=NullLog(),
        )
        harness = InProcessHarness(service, format=args.format, force_length=args.force_length)

    stats = simulate_attacker(profile, harness, trials=args.trials, seed=args.seed, latency=latency)
    print(f"profile: {args.profile}" + (f" (knowledge={args.knowledge})" if args.profile == "informed" else ""))
    print(f"format: {args.format}")
    print(stats.table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egopass")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_corpus(p):
        p.add_argument("--frames", help="frame directory (today)")
        p.add_argument("--frames-yesterday", help="frame directory for the previous day")
        p.add_argument("--fixations", help="fixation CSV for --frames")
        p.add_argument("--fixations-yesterday", help="fixation CSV for --frames-yesterday")
        p.add_argument("--config", help="TOML or JSON config file")

    p = sub.add_parser("synth", help="render a synthetic ground-truth corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenes", default="ABCDEF")
    p.add_argument("--frames-per-scene", type=int, default=20)
    p.add_argument("--recur", default="B", help="scene id repeated at the end ('' for none)")
    p.add_argument("--junk-after", default="0,2,4", help="playback indices that get junk frames")
    p.add_argument("--two-day", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="load frames and select key frames")
    common_corpus(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="compute descriptors and the PCA model")
    common_corpus(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("timeline", help="run the full pipeline and write artifacts")
    common_corpus(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("generate", help="generate challenges from written artifacts")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--format", choices=[ARRANGEMENT, SELECTION], default=ARRANGEMENT)
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--n-images", type=int, default=4)
    p.add_argument("--force-length", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("serve", help="run the login service over a corpus")
    common_corpus(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8600)
    p.add_argument("--event-log", help="append-only JSONL audit log path")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("attack", help="simulate attacker effort against the service")
    common_corpus(p)
    p.add_argument(
        "--profile",
        choices=["random", "fixed_pattern", "informed", "oracle"],
        default="random",
    )
    p.add_argument("--knowledge", type=float, default=0.7)
    p.add_argument("--format", choices=[ARRANGEMENT, SELECTION], default=ARRANGEMENT)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force-length", type=int)
    p.add_argument("--latency-mean", type=float, default=2.0)
    p.add_argument("--latency-std", type=float, default=0.5)
    p.add_argument("--endpoint", help="attack a running service over HTTP instead")
    p.set_defaults(func=cmd_attack)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except DATA_ERRORS as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except EgopassError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
