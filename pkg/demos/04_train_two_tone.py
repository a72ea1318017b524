"""Train the forecaster on a two-sinusoid task and compare ablations.

Builds a small periodic series (period 24 plus its first harmonic, light
noise), trains the full dual-branch model for a few hundred steps, then
retrains with each branch disabled to show what each contributes.

Takes a couple of minutes of CPU. Run: python3 demos/04_train_two_tone.py
"""

import numpy as np

from dualcast import data as dd
from dualcast import model as mdl
from dualcast import pipeline as pl
from dualcast.synthetic import SyntheticPeriodicSignal

LOOKBACK, HORIZON = 48, 12

sig = SyntheticPeriodicSignal(
    period=24, repeats=20, harmonic_coeffs=(1.0, 0.5),
    residual_sigma=0.05, seed=0,
)
dataset = dd.synth_dataset(sig, channels=1)
spec = dd.WindowSpec(LOOKBACK, HORIZON)
split = dd.split(dataset, (0.6, 0.2, 0.2), window_spec=spec)
stats = dd.normalize_stats(split.train)
train_pairs, val_pairs, test_pairs = (
    list(dd.windows(dd.apply_stats(seg, stats), spec))
    for seg in (split.train, split.val, split.test)
)
print(
    f"rows {dataset.rows}, windows {len(train_pairs)}/{len(val_pairs)}/"
    f"{len(test_pairs)} (train/val/test)\n"
)

config = mdl.ModelConfig(
    lookback=LOOKBACK, horizon=HORIZON, channels=1, hidden_dim=16, num_layers=2,
)
train_config = pl.TrainConfig(batch_size=8, max_epochs=15, patience=3, base_lr=3e-3)

print("mode        epochs  best val mse   test mse")
results = {}
for mode in ("full", "time_only", "freq_only", "uniform"):
    model = mdl.ablation_variant(mdl.init_model(config), mode)
    res = pl.train(model, train_pairs, val_pairs, train_config)
    test_mse = pl.evaluate(model, test_pairs).values["mse"]
    results[mode] = test_mse
    print(
        f"{mode:<12} {len(res.history):>5} {res.best_val:>13.5f} {test_mse:>10.5f}"
    )

naive = pl.naive_baseline(test_pairs).values["mse"]
print(f"{'naive':<12} {'-':>5} {'-':>13} {naive:>10.5f}")

x, y = test_pairs[0]
model = mdl.init_model(config)
pl.train(model, train_pairs, val_pairs, train_config)
pred = mdl.forward(model, x).data
print("\nfirst test window, first 6 horizon steps (target vs forecast):")
for i in range(6):
    print(f"  t+{i + 1}: {y[i, 0]:8.4f}   {pred[i, 0]:8.4f}")
