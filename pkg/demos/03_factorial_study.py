"""A small factorial study end to end.

Runs the shipped SETS sample across context levels, the three dimensions
and two (mock) models, resumes it to show that nothing is recomputed, then
builds the aggregate tables and the plot data for one entity. The mock
backend's scores are pseudo-random, so the numbers only show the layout.

    python demos/03_factorial_study.py [workdir]
"""

import json
import sys
import tempfile
from pathlib import Path

from surprobe import ExperimentConfig, resume, run
from surprobe.report import TableSpec, build_table, curve_documents, emit_tables, load_records, table_csv

work = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="surprobe-demo-"))
work.mkdir(parents=True, exist_ok=True)
config_path = work / "sets.json"
config_path.write_text(json.dumps({
    "run_id": "sets-demo",
    "dataset": "sample:sets",
    "grid": {
        "context_levels": ["none", "full"],
        "framings": ["social", "ecological", "technological"],
        "scales": ["1-9"],
        "models": ["model-7b", "model-14b"],
    },
    "output": "results.jsonl",
    "cache": "cache.jsonl",
    "canonical": True,
}, indent=1))

config = ExperimentConfig.load(config_path)
plan = config.validate()
print(f"{len(plan.items)} entities x {len(plan.cells)} cells = {len(plan)} prompts")

summary = run(config)
print(f"run: {summary.records_written} records, {summary.failures} failures")
again = resume(config)
print(f"resume: {again.records_written} new records, nothing left to do\n")

records = load_records(config.output_path)

print("MAE against the expected scores, one column per dimension:")
print(table_csv(build_table(records, TableSpec("mae", ("model", "dimension")))))

print("the same grouped by context level:")
print(table_csv(build_table(records, TableSpec("mae", ("model", "context", "dimension"), pivot=1))))

paths = emit_tables(records, [TableSpec("mae", ("model", "dimension"), name="mae_by_dimension")], work / "tables",
                    full_precision=True)
print("wrote", ", ".join(p.name for p in paths))

doc = curve_documents(records, {"item": "bug-*", "context": "none"})
for item_id, curves in doc.items():
    print(f"\n{item_id}: {len(curves['series'])} curves")
    for s in curves["series"]:
        pts = " ".join(f"{v:4.1f}" for _, v in s["points"])
        print(f"  {s['model']:>9} {s['framing']:<13} argmin {s['argmin']}  [{pts}]")
print(f"\noutputs in {work}")
