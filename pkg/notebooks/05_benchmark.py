# %% [markdown]
# # Benchmarking over a corpus
#
# Runs a pipeline over every article, scores it, and writes CSV/JSON
# reports. Durations can be zeroed so that repeated runs produce
# identical files.

# %%
import tempfile
from fractions import Fraction
from pathlib import Path

from cag import GenerationConfig, PromptTemplate, SplitConfig, ratio_backend
from cag.bench import aggregate_by_category, emit_report, run_benchmark
from cag.corpus import synthetic_corpus
from cag.cwq import CwqCategory

records = synthetic_corpus({c: 2 for c in CwqCategory}, seed=5)
config = GenerationConfig(split=SplitConfig(4096, 200), output_token_limit=2_000,
                          prompt_template=PromptTemplate("{{chunk}}"))
rows = run_benchmark(records, config, ratio_backend(Fraction(1, 2)), "recursive", parallelism=4)
for r in rows:
    print(f"{r.title:16} {r.category.label:10} passes={r.iterations} "
          f"compression={r.compression_ratio:.3f} rougeL={r.rouge.rouge_l.f1:.3f}")

# %%
aggregates = aggregate_by_category(rows)
out = Path(tempfile.mkdtemp()) / "report.csv"
for path in emit_report(rows, aggregates, "csv", out, timing=False):
    print(path)
    print(path.read_text())
