"""Train-on-synthetic, test-on-real evaluation for generated datasets.

Classifiers are trained purely on a synthetic dataset and evaluated on a
held-out split of real data: 70% of the real data forms the baseline
training pool, the remaining 30% (stratified) is the test set, touched only
at final evaluation. Hyperparameters are tuned once on the first run's
90/10 split and frozen across all runs; reports carry weighted precision,
recall, and F1 as mean ± std over the runs.
"""

__version__ = "0.1.0"
