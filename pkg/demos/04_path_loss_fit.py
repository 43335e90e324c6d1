"""Recovering a path-loss exponent from noisy link budgets.

Run with ``python3 demos/04_path_loss_fit.py``.
"""
# %%
import numpy as np

from a2a_sounding.channel import PathLossModel, free_space_model, path_loss_db
from a2a_sounding.metrics import fit_path_loss

truth = PathLossModel(pl_d0=free_space_model().pl_d0, d0=1.0, gamma=2.05, sigma=2.0)
rng = np.random.default_rng(0)
d = rng.uniform(5.0, 40.0, 1000)
pl = path_loss_db(truth, d, shadow_draw=rng.standard_normal(d.size))

fit = fit_path_loss(zip(d, pl))
print(f"true   PL(1 m) {truth.pl_d0:.2f} dB  gamma {truth.gamma:.3f}  sigma {truth.sigma:.2f} dB")
print(f"fitted PL(1 m) {fit.pl_d0:.2f} dB  gamma {fit.gamma:.3f}  sigma {fit.sigma:.2f} dB")

# %% With fewer samples the exponent wanders from draw to draw.
for n in (20, 100, 1000):
    gammas = []
    for _ in range(10):
        dn = rng.uniform(5.0, 40.0, n)
        pln = path_loss_db(truth, dn, shadow_draw=rng.standard_normal(n))
        gammas.append(fit_path_loss(zip(dn, pln)).gamma)
    print(f"n={n:4d}: gamma {np.mean(gammas):.3f} +- {np.std(gammas):.3f} over 10 draws")
