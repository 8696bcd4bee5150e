# %% [markdown]
# # Sequential vs recursive generation
#
# Each chunk gets its own session: open, prompt, generate, close. The mock
# backends below are deterministic, so this script runs without a model.

# %%
from fractions import Fraction

from cag import (
    CountingBackend,
    GenerationConfig,
    PromptTemplate,
    SplitConfig,
    echo_backend,
    failing_backend,
    generate_recursive,
    generate_sequential,
    ratio_backend,
)
from cag.corpus import synthetic_text

text = synthetic_text(813_380, seed=19)
config = GenerationConfig(
    split=SplitConfig(4096, 0),
    max_iterations=10,
    output_token_limit=13_898,
    prompt_template=PromptTemplate("{{chunk}}"),
)

# %% [markdown]
# A compressor that keeps roughly half the words per chunk. The recursive
# pipeline keeps shrinking the text until it fits 13,898 tokens.

# %%
result = generate_recursive(text, config, ratio_backend(Fraction(1, 2)))
print("passes:", result.iterations, "chunks per pass:", result.chunk_counts)
print("final chars:", len(result.text), "compression:", round(1 - len(result.text) / len(text), 4))

# %% [markdown]
# A single sequential pass with the echo backend gives back the chunks,
# joined in order.

# %%
seq = generate_sequential("abcdef", GenerationConfig(split=SplitConfig(4, 2, ("",)), joiner="",
                                                     prompt_template=PromptTemplate("{{chunk}}")), echo_backend())
print(seq.text)

# %% [markdown]
# Failed chunks are dropped and recorded, and every session still gets closed.

# %%
counting = CountingBackend(failing_backend({1}))
res = generate_sequential("aaaabbbbcccc", GenerationConfig(split=SplitConfig(4, 0, ("",)), joiner="|",
                                                           prompt_template=PromptTemplate("{{chunk}}")), counting)
print(res.text, res.errors, counting.opens, counting.closes)
