# %% [markdown]
# Selective bispectra on finite groups
#
# A signal on a cyclic group, its selective bispectrum (n scalars instead of
# roughly n^2/2), invariance under translation, and exact recovery up to a shift.

# %%
import numpy as np

from gbispectrum import CGCache, build_cyclic, build_octahedral, full_index, invert_abelian, selective_bispectrum, selective_index, translate

rng = np.random.default_rng(0)
G, R = build_cyclic(16)
idx = selective_index(R)
print("C16 selective pairs:", idx.pairs)
print("selective scalars:", idx.scalar_count, " full scalars:", full_index(R).scalar_count)

# %%
f = rng.standard_normal(G.order)
b = selective_bispectrum(f, R, idx).flattened
b_shift = selective_bispectrum(translate(f, G, 5), R, idx).flattened
print("max change under a shift by 5:", np.abs(b - b_shift).max())

# %%
f_hat = invert_abelian(b, idx, R)
shifts = f_hat[G.cayley]
res = np.linalg.norm(shifts - f, axis=1) / np.linalg.norm(f)
print("best shift", res.argmin(), "relative error", res.min())

# %% [markdown]
# The octahedral group is non-abelian: some irreps have dimension 2 and 3, and the
# coefficients become matrices coupled through Clebsch-Gordan matrices.

# %%
G, R = build_octahedral()
print("octahedral irrep dims:", R.dims)
idx = selective_index(R)
print("selective scalars:", idx.scalar_count, " full scalars:", full_index(R).scalar_count)
cg = CGCache(R)
f = rng.standard_normal(G.order)
b = selective_bispectrum(f, R, idx, cg).flattened
worst = max(np.abs(selective_bispectrum(translate(f, G, g), R, idx, cg).flattened - b).max() for g in range(G.order))
print("max change over all 24 translations:", worst)
