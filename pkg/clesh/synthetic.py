import argparse
import os
from typing import Callable, List, Tuple

import numpy as np
from scipy import special

from .parse import DatasetBundle, write_dataset

"""
Synthetic feature/SHAP pair with known patterns, for demos and end-to-end
checks. SHAP noise is 5% of each pattern's amplitude.

    age            continuous  linear
    bmi            continuous  quadratic
    glucose        continuous  sigmoid
    smoker         binary
    activity       discrete (4 levels)
    triglycerides  continuous  linear, and the interaction partner of albuminuria
    albuminuria    discrete (3 levels), level 2 only matters above mean triglycerides
    noise_*        mixed kinds, SHAP independent of the value
"""

LABEL = "Outcome"
NOISE = 0.05

Column = Tuple[str, np.ndarray, np.ndarray]


def _noisy(
    rng: np.random.Generator, signal: np.ndarray, amplitude: float
) -> np.ndarray:
    return signal + rng.normal(0.0, NOISE * amplitude, len(signal))


def _signal_columns(rng: np.random.Generator, n: int) -> List[Column]:
    age = rng.uniform(20.0, 80.0, n)
    bmi = rng.uniform(17.0, 37.0, n)
    glucose = rng.uniform(70.0, 200.0, n)
    smoker = rng.integers(0, 2, n).astype(float)
    activity = rng.integers(0, 4, n).astype(float)
    trig = rng.uniform(50.0, 300.0, n)
    albuminuria = rng.integers(0, 3, n).astype(float)

    quad = 0.006 * (bmi - 27.0) ** 2
    sig = 1.2 * special.expit(0.1 * (glucose - 126.0)) - 0.6
    levels = np.array([-0.2, 0.1, 0.3])
    above = trig > trig.mean()
    alb = levels[albuminuria.astype(int)] + 0.5 * ((albuminuria == 2) & above)
    return [
        ("age", age, _noisy(rng, 0.02 * (age - 50.0), 1.2)),
        ("bmi", bmi, _noisy(rng, quad - quad.mean(), 0.6)),
        ("glucose", glucose, _noisy(rng, sig, 1.2)),
        ("smoker", smoker, _noisy(rng, np.where(smoker == 1, 0.5, -0.3), 0.8)),
        (
            "activity",
            activity,
            _noisy(rng, np.array([-0.4, -0.1, 0.2, 0.5])[activity.astype(int)], 0.9),
        ),
        ("triglycerides", trig, _noisy(rng, 0.002 * (trig - 175.0), 0.5)),
        ("albuminuria", albuminuria, _noisy(rng, alb, 1.0)),
    ]


def _noise_columns(rng: np.random.Generator, n: int) -> List[Column]:
    makers: List[Callable[[], np.ndarray]] = [
        lambda: rng.normal(0.0, 1.0, n),
        lambda: rng.integers(0, 2, n).astype(float),
        lambda: rng.integers(0, 5, n).astype(float),
        lambda: rng.uniform(0.0, 10.0, n),
    ]
    out = []
    for i, scale in enumerate(np.linspace(0.06, 0.01, 8)):
        values = makers[i % len(makers)]()
        out.append((f"noise_{i + 1}", values, rng.normal(0.0, scale, n)))
    return out


def make_synthetic_bundle(n_samples: int = 500, seed: int = 0) -> DatasetBundle:
    rng = np.random.default_rng(seed)
    columns = _signal_columns(rng, n_samples) + _noise_columns(rng, n_samples)
    return DatasetBundle(
        feature_names=tuple(name for name, _, _ in columns),
        label_name=LABEL,
        features=np.column_stack([values for _, values, _ in columns]),
        shap_values=np.column_stack([shap for _, _, shap in columns]),
    )


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Write the synthetic dataset as features.csv and shap.csv"
    )
    parser.add_argument("directory", metavar="DIRECTORY")
    parser.add_argument("--n-samples", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    os.makedirs(args.directory, exist_ok=True)
    bundle = make_synthetic_bundle(args.n_samples, args.seed)
    write_dataset(
        bundle,
        os.path.join(args.directory, "features.csv"),
        os.path.join(args.directory, "shap.csv"),
    )
    print(
        f"wrote {bundle.n_samples} samples x {bundle.n_features} features "
        f"to {args.directory}"
    )


if __name__ == "__main__":
    main()
