# %% [markdown]
# # Splitting long text into chunks
#
# The splitter tries paragraph breaks first, then line breaks, then spaces.
# Pieces that are still too long get cut into fixed character windows.
# Neighbouring chunks share up to `chunk_overlap` characters of context.

# %%
from cag import SplitConfig, split_text
from cag.corpus import synthetic_text

text = synthetic_text(3_000, seed=1)
chunks = split_text(text, SplitConfig(chunk_size=800, chunk_overlap=100))
for c in chunks:
    print(c.index, c.start_offset, c.length, repr(c.text[:40]))

# %% [markdown]
# Every chunk is a verbatim slice of the source, so `start_offset` locates it.

# %%
assert all(text[c.start_offset:c.start_offset + c.length] == c.text for c in chunks)

# %% [markdown]
# Text without any separator falls through to the window cutter. Windows
# advance by `chunk_size - chunk_overlap`.

# %%
print([c.text for c in split_text("abcdefghij", SplitConfig(4, 2, ("",)))])
