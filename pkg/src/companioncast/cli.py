"""Command line entry points: simulate, verify, serve."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import EngineConfig, load_config
from .session import SessionEngine
from .timeline import TimelineDoc, parse_timeline

logger = logging.getLogger(__name__)


class _SimClock:
    """Deterministic wall clock for batch runs: wall time follows the video clock."""

    def __init__(self) -> None:
        self.t = 0.0

    def now(self) -> float:
        return self.t


def run_simulation(doc: TimelineDoc, config: EngineConfig, team: str, seed: int | None,
                   out_path: Path | None = None) -> SessionEngine:
    """Drive one full playthrough of a timeline with the configured backends.

    The clock steps from 0 to the clip's duration at config.clock_step_s, so
    identical (timeline, config, seed) inputs give byte-identical transcripts.
    """
    clock = _SimClock()
    engine = SessionEngine(
        session_id="sim",
        doc=doc,
        config=config,
        supported_team=team,
        chat_backend=config.build_chat_backend(),
        judge_backend=config.build_judge_backend(),
        tts_backend=config.build_tts_backend(),
        log_path=out_path,
        now=clock.now,
        seed=seed,
    )
    step = config.clock_step_s
    i = 1
    while (t := i * step) < doc.duration_s:
        clock.t = t
        engine.on_clock(t)
        i += 1
    clock.t = doc.duration_s
    engine.on_clock(doc.duration_s)
    engine.close()
    return engine


def cmd_simulate(args: argparse.Namespace) -> int:
    doc = parse_timeline(Path(args.timeline).read_bytes())
    config = load_config(args.config)
    out = Path(args.out)
    engine = run_simulation(doc, config, args.team, args.seed, out_path=out)
    events = engine.transcript_events()
    n_conversations = sum(1 for e in events if e.kind == "conversation_ended")
    print(f"wrote {out} ({len(events)} events, {n_conversations} conversations)")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    a = Path(args.transcript).read_bytes()
    b = Path(args.golden).read_bytes()
    if a == b:
        print(f"transcripts identical ({len(a.splitlines())} lines)")
        return 0
    a_lines = a.decode("utf-8", errors="replace").splitlines()
    b_lines = b.decode("utf-8", errors="replace").splitlines()
    print(f"transcripts differ: {len(a_lines)} vs {len(b_lines)} lines")
    for i, (la, lb) in enumerate(zip(a_lines, b_lines)):
        if la != lb:
            print(f"first difference at line {i + 1}:")
            print(f"  transcript: {la[:160]}")
            print(f"  golden:     {lb[:160]}")
            break
    else:
        longer = "transcript" if len(a_lines) > len(b_lines) else "golden"
        print(f"one is a prefix of the other ({longer} has extra lines)")
    return 1


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    frontend = Path(args.frontend) if args.frontend else None
    app = create_app(config, data_dir=Path(args.data_dir), frontend_dist=frontend)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="companioncast",
                                     description="Co-viewing engine: simulate sessions, verify transcripts, serve the API.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a full scripted playthrough of a timeline")
    sim.add_argument("--timeline", required=True, help="timeline JSON file")
    sim.add_argument("--config", required=True, help="engine config JSON file")
    sim.add_argument("--team", required=True, choices=("home", "away"), help="viewer's supported team")
    sim.add_argument("--seed", type=int, default=0, help="seed for the scripted backends")
    sim.add_argument("--out", required=True, help="where to write the JSON-lines transcript")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="byte-compare a transcript against a golden file")
    ver.add_argument("--transcript", required=True)
    ver.add_argument("--golden", required=True)
    ver.set_defaults(func=cmd_verify)

    srv = sub.add_parser("serve", help="run the HTTP + websocket session API")
    srv.add_argument("--config", required=True, help="engine config JSON file")
    srv.add_argument("--data-dir", default="data", help="directory for session event logs")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8787)
    srv.add_argument("--frontend", default=None, help="built web UI directory to serve at /app")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:  # console_scripts hook
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
