"""How the four estimators behave as the sample size grows.

B is taken from the true model so only the diagonal step is compared.
"""
import numpy as np

from precis.core import sample_gaussian
from precis.models import build_model
from precis.estimators import estimate

model = build_model("m2", 30)
rng = np.random.default_rng(1)

print(f"{'n':>6} " + " ".join(f"{e:>8}" for e in ("rv", "rml", "sml", "pml")))
for n in (200, 800, 2000):
    errs = {e: [] for e in ("rv", "rml", "sml", "pml")}
    for _ in range(20):
        X = sample_gaussian(model.sigma, n, seed=int(rng.integers(2**32)))
        for e in errs:
            errs[e].append(np.linalg.norm(estimate(e, X, model.b_star) - model.phi_star))
    print(f"{n:>6} " + " ".join(f"{np.mean(v):8.4f}" for v in errs.values()))

# sml borrows strength along the partial-correlation graph,
# so its error should shrink fastest here
