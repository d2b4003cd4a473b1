import hashlib
import json

import pytest
from conftest import write_config

from surprobe.backend import MockBackend
from surprobe.errors import ConfigDigestMismatch, ConfigError
from surprobe.prompts import FactorCell, TemplateRegistry, load_sample, render
from surprobe.report import load_records, to_outcome
from surprobe.metrics import binary_accuracy
from surprobe.runner import ExperimentConfig, canonicalize, read_output, resume, run
from surprobe.scales import get_scale


def body_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


def test_six_items_two_by_two_grid(tmp_path):
    cfg = ExperimentConfig.load(write_config(tmp_path))
    s = run(cfg)
    assert (s.records_written, s.failures, s.total) == (24, 0, 24)
    header, records = read_output(cfg.output_path)
    assert header["schema"] == "surprobe.results/1" and header["expected_records"] == 24
    assert len(records) == 24 and all(r["kind"] == "result" for r in records)


def test_output_is_item_major_regardless_of_completion_order(tmp_path):
    cfg = ExperimentConfig.load(write_config(tmp_path, concurrency=8))
    run(cfg)
    _, records = read_output(cfg.output_path)
    cells = [FactorCell(**r["cell"]).key() for r in records]
    expected_cells = [c.key() for c in cfg.grid.cells()]
    assert [r["item_id"] for r in records] == sorted(r["item_id"] for r in records)
    assert cells == expected_cells * 6


def test_warm_cache_rerun_is_identical(tmp_path):
    cfg = ExperimentConfig.load(write_config(tmp_path, cache="cache.jsonl", canonical=True))
    first = run(cfg)
    a = cfg.output_path.read_bytes()
    second = run(cfg)
    assert first.cache_hits == 0 and second.cache_hits == 24
    assert cfg.output_path.read_bytes() == a


def test_timestamps_are_the_only_difference_without_canonical_mode(tmp_path):
    cfg = ExperimentConfig.load(write_config(tmp_path))
    run(cfg)
    a = [canonicalize(json.loads(line)) for line in body_lines(cfg.output_path)]
    run(cfg)
    b = [canonicalize(json.loads(line)) for line in body_lines(cfg.output_path)]
    assert a == b
    assert "started_at" in json.loads(body_lines(cfg.output_path)[1])


def test_provider_down_records_failures(tmp_path, closed_port):
    cfg = ExperimentConfig.load(write_config(tmp_path, provider={
        "kind": "completions", "endpoint": f"http://127.0.0.1:{closed_port}/v1/completions",
        "max_attempts": 1, "backoff": 0, "timeout": 2}))
    s = run(cfg)
    assert (s.records_written, s.failures) == (0, 24)
    assert s.failure_classes == {"ProviderUnreachable": 24}
    _, records = read_output(cfg.output_path)
    assert len(records) == 24 and {r["error"] for r in records} == {"ProviderUnreachable"}


class Interrupting:
    """Scores normally, then simulates Ctrl-C after ``limit`` requests."""

    kind = "mock"
    cache_namespace = "mock/seed=0"

    def __init__(self, limit):
        self.limit = limit
        self.calls = 0
        self.inner = MockBackend()

    def score(self, request):
        if self.calls >= self.limit:
            raise KeyboardInterrupt
        self.calls += 1
        return self.inner.score(request)


def test_resume_after_interruption_matches_scratch_run(tmp_path):
    cfg = ExperimentConfig.load(write_config(tmp_path, concurrency=1, canonical=True))
    with pytest.raises(KeyboardInterrupt):
        run(cfg, backend=Interrupting(10))
    _, partial = read_output(cfg.output_path)
    assert len(partial) == 10
    s = resume(cfg)
    assert (s.records_written, s.failures) == (14, 0)
    resumed = cfg.output_path.read_bytes()

    again = resume(cfg)
    assert again.records_written == 0

    scratch = ExperimentConfig.load(write_config(tmp_path, concurrency=3, canonical=True))
    run(scratch)
    assert scratch.output_path.read_bytes() == resumed


def test_resume_with_torn_last_line(tmp_path):
    cfg = ExperimentConfig.load(write_config(tmp_path, canonical=True))
    run(cfg)
    full = cfg.output_path.read_bytes()
    lines = full.split(b"\n")
    cfg.output_path.write_bytes(b"\n".join(lines[:6]) + b"\n" + lines[6][:40])
    s = resume(cfg)
    assert s.records_written == 19
    assert cfg.output_path.read_bytes() == full


def test_resume_retries_failures(tmp_path, closed_port):
    down = write_config(tmp_path, provider={"kind": "completions", "endpoint": f"http://127.0.0.1:{closed_port}/v1",
                                            "max_attempts": 1, "backoff": 0})
    cfg = ExperimentConfig.load(down)
    run(cfg)

    class Up(MockBackend):
        kind = "completions"

    s = resume(cfg, backend=Up())
    assert (s.records_written, s.failures) == (24, 0)
    assert len(load_records(cfg.output_path)) == 24


def test_resume_with_edited_grid_is_refused(tmp_path):
    run(ExperimentConfig.load(write_config(tmp_path)))
    edited = ExperimentConfig.load(write_config(tmp_path, grid={"context_levels": ["none"], "scales": ["true-false"]}))
    with pytest.raises(ConfigDigestMismatch):
        resume(edited)


def test_digest_ignores_credentials_and_operational_knobs(tmp_path):
    a = ExperimentConfig.load(write_config(tmp_path, provider={"kind": "mock", "api_key": "one"}))
    b = ExperimentConfig.load(write_config(tmp_path, provider={"kind": "mock", "api_key": "two"}, concurrency=7,
                                           cache="elsewhere.jsonl"))
    c = ExperimentConfig.load(write_config(tmp_path, seed=1))
    assert a.digest() == b.digest() != c.digest()


def test_records_are_self_contained(tmp_path):
    cfg = ExperimentConfig.load(write_config(tmp_path))
    run(cfg)
    records = load_records(cfg.output_path)
    items = {it.item_id: it for it in load_sample("causal-binary")}
    reg = TemplateRegistry()
    for r in records:
        # metrics need nothing but the record
        assert r["gold"] == {"causal": items[r["item_id"]]["causal"]} | (
            {"category": items[r["item_id"]]["category"]} if "category" in items[r["item_id"]].payload else {})
        # the prompt digest matches a fresh render
        cell = FactorCell(**r["cell"])
        text = render(r["template"], items[r["item_id"]], cell, get_scale(cell.scale), reg).context_text
        assert hashlib.sha256(text.encode()).hexdigest() == r["prompt_sha256"]
    assert 0 <= binary_accuracy([to_outcome(r) for r in records]) <= 100


def test_record_count_is_product_minus_failures(tmp_path):
    cfg = ExperimentConfig.load(write_config(
        tmp_path, dataset="sample:causal-ordinal",
        grid={"context_levels": ["none", "minimal", "full"], "framings": ["causal-strength", "probability"],
              "scales": ["1-5", "1-9"]}))
    with pytest.raises(ConfigError):
        # the probability framing exists only for 1-5
        cfg.validate()
    cfg = ExperimentConfig.load(write_config(
        tmp_path, dataset="sample:causal-ordinal",
        grid={"context_levels": ["none", "minimal", "full"], "framings": ["causal-strength", "bipolar-causality"],
              "scales": ["1-5", "1-9"]}))
    s = run(cfg)
    assert s.records_written == 6 * 3 * 2 * 2 - s.failures


def test_dataset_file_relative_to_config(tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    src = load_sample("coding")
    (data / "c.jsonl").write_text("\n".join(json.dumps(it.to_json()) for it in src) + "\n")
    cfg = ExperimentConfig.load(write_config(tmp_path, dataset="data/c.jsonl",
                                             grid={"delimiters": ["xml", "all-caps"], "scales": ["1-5", "intensity"]}))
    assert run(cfg).records_written == 6 * 2 * 2


@pytest.mark.parametrize("fields, message", [
    ({"run_id": ""}, "run_id"),
    ({"concurrency": 0}, "concurrency"),
    ({"dataset": "missing.jsonl"}, "not found"),
    ({"grid": {"scales": ["1-7"]}}, "1-7"),
    ({"grid": {"delimiters": ["markdown"]}}, "markdown"),
    ({"provider": {"kind": "carrier-pigeon"}}, "kind"),
    ({"bogus": 1}, "bogus"),
])
def test_config_errors(tmp_path, fields, message):
    with pytest.raises(ConfigError, match=message):
        ExperimentConfig.load(write_config(tmp_path, **fields)).validate()


def test_missing_required_key(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"run_id": "x"}))
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


def test_cache_path_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SURPROBE_CACHE", str(tmp_path / "env-cache.jsonl"))
    cfg = ExperimentConfig.load(write_config(tmp_path))
    run(cfg)
    assert (tmp_path / "env-cache.jsonl").exists()
