"""Line-protocol scoring server.

The parent writes one absolute image path per line to stdin and closes it;
we answer ``<path><TAB><score>`` per line on stdout, same order, score in
[0, 1], and exit 0 at end of input. An unreadable path produces
``<path><TAB>ERROR`` instead of killing the run; a model that cannot load
exits 2 immediately.

A scorer is any callable ``paths -> scores``. ``--stub`` installs the
constant 0.5 scorer for protocol-conformance testing without model weights;
``--model pkg.module:loader`` imports and calls ``loader(device=...)`` to
obtain one (this is where an AMNet-style CNN wrapper plugs in).
"""

from __future__ import annotations

import argparse
import importlib
import sys
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

Scorer = Callable[[Sequence[str]], Sequence[float]]

ERROR_SENTINEL = "ERROR"


@dataclass(frozen=True)
class AdapterConfig:
    model: Optional[str] = None     # "pkg.module:loader_callable"
    stub: bool = False
    device: Optional[str] = None
    batch_size: int = 16

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if not self.stub and not self.model:
            raise ValueError("either --stub or --model is required")


def stub_scorer(paths: Sequence[str]) -> list[float]:
    return [0.5 for _ in paths]


def load_scorer(cfg: AdapterConfig) -> Scorer:
    """Resolve the scoring callable; raises RuntimeError when unloadable."""
    if cfg.stub:
        return stub_scorer
    module_name, _, attr = cfg.model.partition(":")
    if not module_name or not attr:
        raise RuntimeError(f"model spec must be 'module:loader', got {cfg.model!r}")
    try:
        module = importlib.import_module(module_name)
        loader = getattr(module, attr)
        return loader(device=cfg.device)
    except Exception as exc:
        raise RuntimeError(f"cannot load model {cfg.model!r}: {exc}") from exc


def _readable(path: str) -> bool:
    try:
        with open(path, "rb") as fh:
            fh.read(1)
        return True
    except OSError:
        return False


def _clamp(score: float) -> float:
    return min(max(float(score), 0.0), 1.0)


def serve(cfg: AdapterConfig, stdin=None, stdout=None) -> int:
    """Run the request loop; returns the process exit code."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    try:
        scorer = load_scorer(cfg)
    except RuntimeError as exc:
        print(f"memadapter: {exc}", file=sys.stderr)
        return 2

    def flush_batch(batch: list[str]) -> None:
        readable = [p for p in batch if _readable(p)]
        scores = dict(zip(readable, scorer(readable))) if readable else {}
        for path in batch:
            if path in scores:
                stdout.write(f"{path}\t{_clamp(scores[path])!r}\n")
            else:
                stdout.write(f"{path}\t{ERROR_SENTINEL}\n")
        stdout.flush()

    batch: list[str] = []
    for raw in stdin:
        path = raw.rstrip("\n")
        if not path:
            continue
        batch.append(path)
        if len(batch) >= cfg.batch_size:
            flush_batch(batch)
            batch = []
    if batch:
        flush_batch(batch)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="memadapter",
        description="stdin/stdout line-protocol scoring adapter",
    )
    parser.add_argument("--stub", action="store_true",
                        help="constant 0.5 scorer (no model needed)")
    parser.add_argument("--model", default=None,
                        help="model loader as 'pkg.module:callable'")
    parser.add_argument("--device", default=None, help="device hint for the loader")
    parser.add_argument("--batch-size", type=int, default=16)
    args = parser.parse_args(argv)
    try:
        cfg = AdapterConfig(model=args.model, stub=args.stub,
                            device=args.device, batch_size=args.batch_size)
    except ValueError as exc:
        parser.error(str(exc))
    return serve(cfg)


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
