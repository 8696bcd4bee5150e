# %% [markdown]
# # ROUGE scores
#
# Tokens are lowercase alphanumeric runs. The candidate is the generated
# text and the reference is the source.

# %%
from cag import rouge_l, rouge_n, rouge_s
from cag.metrics import rouge_all

print(rouge_n("the cat sat", "the cat ran", 1))
print(rouge_l("the cat sat", "the cat ran"))
print(rouge_s("a b c", "a c b"))

# %% [markdown]
# Long texts work too. LCS is bit-parallel and skip-bigrams are counted
# with numpy.

# %%
from cag.corpus import synthetic_text

source = synthetic_text(200_000, seed=4)
summary = " ".join(source.split()[::10])
for name, score in rouge_all(summary, source).as_dict().items():
    print(name, score)
