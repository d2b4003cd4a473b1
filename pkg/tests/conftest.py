import json
import socket
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))


def write_config(tmp_path: Path, name: str = "config.json", **fields) -> Path:
    cfg = {
        "run_id": "t",
        "dataset": "sample:causal-binary",
        "grid": {"context_levels": ["none", "full"], "scales": ["true-false", "yes-no"]},
        "output": "out/results.jsonl",
        "concurrency": 2,
    }
    cfg.update(fields)
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


@pytest.fixture
def closed_port() -> int:
    """A localhost port with nothing listening on it."""
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def scripted_config(tmp_path: Path, which: str, **fields) -> Path:
    """Config for one of the scripted mock fixtures ("binary10" or "figurative30")."""
    if which == "binary10":
        grid = {"context_levels": ["none", "minimal", "full"], "scales": ["true-false"],
                "models": ["model-3b", "model-14b"]}
    else:
        grid = {"context_levels": ["none", "full"], "framings": ["metaphor-intensity"], "scales": ["1-5"],
                "models": ["model-3b", "model-14b"]}
    base = {
        "run_id": which,
        "dataset": str(FIXTURES / f"{which}.jsonl"),
        "grid": grid,
        "provider": {"kind": "mock", "mock_table": str(FIXTURES / f"{which}_table.json")},
        "output": f"{which}/results.jsonl",
    }
    base.update(fields)
    return write_config(tmp_path, name=f"{which}.json", **base)
