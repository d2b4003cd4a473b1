"""Scripting the mock backend to test a metric pipeline.

A mock table pins the logits for chosen items, so the expected metric
values are known before anything runs. Here two of ten binary items are
deliberately misclassified, and the accuracy table should read 80.0 in
every cell.

    python demos/04_scripted_mock.py
"""

import json
import tempfile
from pathlib import Path

from surprobe import ExperimentConfig, run
from surprobe.report import TableSpec, build_table, load_records, table_csv

statements = [
    ("The storm knocked out power.", True), ("Rain flooded the street.", True),
    ("Smoke set off the alarm.", True), ("The drought killed the crops.", True),
    ("The glass broke when it fell.", True), ("The wind toppled the fence.", True),
    ("The museum opens at nine.", False), ("Her coat is blue.", False),
    ("The report has twelve pages.", False), ("Tuesday follows Monday.", False),
]
wrong = {"s05", "s09"}

work = Path(tempfile.mkdtemp(prefix="surprobe-mock-"))
with open(work / "items.jsonl", "w", encoding="utf-8") as fh:
    for k, (text, causal) in enumerate(statements, 1):
        fh.write(json.dumps({"item_id": f"s{k:02d}", "task": "causal-binary", "statement": text,
                             "causal": causal}) + "\n")

rules = []
for k, (_, causal) in enumerate(statements, 1):
    item = f"s{k:02d}"
    says_true = causal != (item in wrong)
    rules.append({"item": item, "logits": {" True": -0.2 if says_true else -2.5,
                                           " False": -2.5 if says_true else -0.2}})
(work / "table.json").write_text(json.dumps({"rules": rules}, indent=1))

(work / "config.json").write_text(json.dumps({
    "run_id": "scripted",
    "dataset": "items.jsonl",
    "grid": {"context_levels": ["none", "minimal", "full"], "scales": ["true-false"],
             "models": ["small", "large"]},
    "provider": {"kind": "mock", "mock_table": "table.json"},
    "output": "results.jsonl",
}))

config = ExperimentConfig.load(work / "config.json")
run(config)
table = build_table(load_records(config.output_path),
                    TableSpec("binary-accuracy", ("model", "context"), average_over="scale"))
print(table_csv(table))
assert all(v == 80.0 for row in table.rows for v in row.values.values())
