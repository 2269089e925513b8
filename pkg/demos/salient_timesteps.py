# %% [markdown]
# When did something happen? Salient timesteps in a spatiotemporal tensor.
#
# Two spatial patterns on a 6x6x2 grid switch on at different moments, with
# Gaussian time profiles centred on frames 20 and 55. Unfolding the tensor
# along time and factorizing it gives one time feature per pattern. The
# frame where each feature peaks is its salient timestep.

# %%
import numpy as np

from latentfire import ntd1_decompose

rng = np.random.default_rng(5)
t = np.arange(80)
time_features = np.stack([np.exp(-0.5 * ((t - 20) / 3) ** 2),
                          np.exp(-0.5 * ((t - 55) / 4) ** 2)], axis=1) + 0.02
space = rng.uniform(size=(2, 6 * 6 * 2)) * (rng.uniform(size=(2, 72)) < 0.6)
x = (time_features @ space).reshape(80, 6, 6, 2)

# %% k is estimated with NMFk when left as "auto"
report = ntd1_decompose(x, "auto", k_range=(1, 4))
print(f"estimated {report.k} features, residual {report.residual_norm:.2e}")
print(f"salient timesteps: {sorted(report.salient_timesteps)} (planted 20 and 55)")
print(f"space features shape: {report.space_features.shape}")
