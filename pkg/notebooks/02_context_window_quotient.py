# %% [markdown]
# # Sizing content against a context window
#
# CWQ is length / (window tokens x chars per token). With a 6,144-token
# window at 4 chars/token, a CWQ of 1.0 is 24,576 characters.

# %%
from cag import categorize, compute_cwq, estimate_tokens

for n in (10_000, 24_576, 24_577, 45_672, 98_305):
    v = compute_cwq(n)
    print(f"{n:>7} chars  {estimate_tokens(n):>6} tokens  cwq={float(v):.4f}  {categorize(v).label}")

# %% [markdown]
# A synthetic corpus with a chosen category mix, and its summary statistics.

# %%
from cag.corpus import CATEGORY_COUNTS_381, corpus_stats, synthetic_corpus
from cag.cwq import histogram

records = synthetic_corpus(CATEGORY_COUNTS_381, seed=0)
stats = corpus_stats(records)
print(stats.as_dict())

for lo, hi, count in histogram([compute_cwq(len(r.content)).value for r in records], 0.5):
    print(f"{lo:4.1f}-{hi:4.1f} {'#' * (count // 4)}")
