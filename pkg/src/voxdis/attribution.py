"""Shapley-value feature attribution and baseline-vs-adversarial deltas.

The explained score is the pre-sigmoid condition logit; the reference point
is a single background vector (the train-split feature mean), so absent
coalition members take background values.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .dsp.features import FEATURE_NAMES, N_FEATURES
from .errors import ConfigError
from .autodiff import rng_for

MAX_EXACT_FEATURES = 12


def _masked_inputs(masks: np.ndarray, instance: np.ndarray,
                   background: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Rows equal to background, with active features switched to the
    instance value where the mask is 1."""
    out = np.tile(background, (masks.shape[0], 1))
    for col, feat in enumerate(active):
        rows = masks[:, col] == 1
        out[rows, feat] = instance[feat]
    return out


def shapley_exact(score_fn, instance, background, active_set) -> np.ndarray:
    """Classic Shapley values over active_set by full coalition enumeration.

    Features outside active_set stay at their instance values. score_fn maps
    a [n, 54] matrix to n scalars. Cost is 2^|active_set| evaluations.
    """
    instance = np.asarray(instance, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    active = np.asarray(list(active_set), dtype=np.int64)
    k = len(active)
    if k > MAX_EXACT_FEATURES:
        raise ConfigError(f"exact enumeration limited to {MAX_EXACT_FEATURES} features, got {k}")
    masks = ((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1).astype(np.int64)
    inputs = _masked_inputs(masks, instance, background, active)
    # off-set features keep instance values in this oracle
    inactive = np.setdiff1d(np.arange(instance.size), active)
    inputs[:, inactive] = instance[inactive]
    values = np.asarray(score_fn(inputs), dtype=np.float64)
    value_of = {tuple(m): v for m, v in zip(masks, values)}

    sizes = masks.sum(axis=1)
    weight = {s: factorial(s) * factorial(k - s - 1) / factorial(k) for s in range(k)}
    phi = np.zeros(k)
    for i in range(k):
        without = masks[masks[:, i] == 0]
        for m in without:
            s = int(m.sum())
            with_i = m.copy()
            with_i[i] = 1
            phi[i] += weight[s] * (value_of[tuple(with_i)] - value_of[tuple(m)])
    return phi


def shapley_kernel_weight(m: int, s: int) -> float:
    """Kernel weight for a coalition of size s out of m (endpoints excluded)."""
    return (m - 1) / (comb(m, s) * s * (m - s))


@dataclass
class KernelShapResult:
    values: np.ndarray                # length 54, zeros for inactive features
    base_value: float                 # score at the background point
    full_value: float                 # score at the instance
    additivity_residual: float        # |base + sum(values) - full|
    ridge_fallback: bool = False

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.values != 0.0)


def _sample_masks(m: int, budget: int, rng: np.random.Generator) -> np.ndarray:
    """Coalition masks excluding empty/full; unique masks first, then repeats."""
    if 2 ** m - 2 <= budget:
        masks = ((np.arange(1, 2 ** m - 1)[:, None] >> np.arange(m)) & 1).astype(np.int64)
        return masks
    sizes = np.arange(1, m)
    probs = np.array([shapley_kernel_weight(m, s) * comb(m, s) for s in sizes])
    probs = probs / probs.sum()
    seen = set()
    rows = []
    attempts = 0
    while len(rows) < budget and attempts < budget * 4:
        attempts += 1
        s = int(rng.choice(sizes, p=probs))
        mask = np.zeros(m, dtype=np.int64)
        mask[rng.choice(m, size=s, replace=False)] = 1
        key = tuple(mask)
        if key in seen and attempts < budget * 2:
            continue                    # without replacement while budget allows
        seen.add(key)
        rows.append(mask)
    return np.asarray(rows)


def kernel_shap(score_fn, instance, background, n_samples: int = 2048,
                seed: int = 0) -> KernelShapResult:
    """Kernel-weighted least squares Shapley estimate over all 54 features.

    Active features are those whose instance value differs from the
    background; when the budget covers full enumeration the estimate equals
    exact Shapley values. The empty and full coalitions enter through the
    efficiency constraint sum(phi) = f(x) - f(b), enforced exactly.
    """
    instance = np.asarray(instance, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if n_samples < instance.size + 2:
        raise ConfigError(f"n_samples must be >= {instance.size + 2}")
    active = np.flatnonzero(instance != background)
    values = np.zeros(instance.size)
    endpoints = np.asarray(score_fn(np.stack([background, instance])), dtype=np.float64)
    base_value, full_value = float(endpoints[0]), float(endpoints[1])
    m = len(active)
    if m == 0:
        return KernelShapResult(values, base_value, full_value,
                                abs(full_value - base_value))
    if m == 1:
        values[active[0]] = full_value - base_value
        return KernelShapResult(values, base_value, full_value, 0.0)

    rng = rng_for(seed, 6)
    masks = _sample_masks(m, n_samples, rng)
    inputs = _masked_inputs(masks, instance, background, active)
    v = np.asarray(score_fn(inputs), dtype=np.float64)
    w = np.asarray([shapley_kernel_weight(m, int(s)) for s in masks.sum(axis=1)])

    # Efficiency-constrained weighted least squares: eliminate the last
    # active feature via phi_last = (full - base) - sum(others).
    z = masks.astype(np.float64)
    target = v - base_value - z[:, -1] * (full_value - base_value)
    design = z[:, :-1] - z[:, [-1]]
    sw = np.sqrt(w)
    a = design * sw[:, None]
    b = target * sw
    ridge_fallback = False
    gram = a.T @ a
    rhs = a.T @ b
    try:
        phi_rest = np.linalg.solve(gram, rhs)
        if not np.all(np.isfinite(phi_rest)):
            raise np.linalg.LinAlgError("non-finite solution")
    except np.linalg.LinAlgError:
        ridge_fallback = True
        phi_rest = np.linalg.solve(gram + 1e-8 * np.eye(gram.shape[0]), rhs)
    phi = np.empty(m)
    phi[:-1] = phi_rest
    phi[-1] = (full_value - base_value) - phi_rest.sum()
    values[active] = phi
    residual = abs(base_value + values.sum() - full_value)
    return KernelShapResult(values, base_value, full_value, residual, ridge_fallback)


@dataclass
class AttributionResult:
    mean_abs: np.ndarray              # per-feature mean |phi| over recordings
    base_value: float                 # mean background score
    per_recording: np.ndarray         # [n, 54] Shapley matrices
    max_residual: float
    any_ridge_fallback: bool


def attribute_set(score_fn, instances: np.ndarray, background,
                  n_samples: int = 2048, seed: int = 0) -> AttributionResult:
    """Kernel SHAP for every row of instances against one background."""
    rows = []
    residual = 0.0
    ridge = False
    base = 0.0
    for i, x in enumerate(np.asarray(instances, dtype=np.float64)):
        r = kernel_shap(score_fn, x, background, n_samples=n_samples,
                        seed=seed * 100003 + i)
        rows.append(r.values)
        residual = max(residual, r.additivity_residual)
        ridge = ridge or r.ridge_fallback
        base = r.base_value
    per = np.asarray(rows)
    return AttributionResult(mean_abs=np.abs(per).mean(axis=0), base_value=base,
                             per_recording=per, max_residual=residual,
                             any_ridge_fallback=ridge)


@dataclass
class DeltaReport:
    feature_names: tuple
    baseline_mean_abs: np.ndarray
    adversarial_mean_abs: np.ndarray
    delta: np.ndarray                 # adversarial - baseline
    suppressed: list                  # top-k most negative (name, delta)
    enhanced: list                    # top-k most positive (name, delta)


def delta_analysis(baseline_score_fn, adversarial_score_fn, test_features,
                   background, n_samples: int = 2048, seed: int = 0,
                   top_k: int = 5) -> DeltaReport:
    """Change in mean |Shapley| per feature between two models on one test set.

    Negative delta marks a feature the adversarial model relies on less
    (suppressed); positive marks an enhanced feature. The two top-k lists
    are disjoint by construction.
    """
    base = attribute_set(baseline_score_fn, test_features, background,
                         n_samples=n_samples, seed=seed)
    adv = attribute_set(adversarial_score_fn, test_features, background,
                        n_samples=n_samples, seed=seed)
    delta = adv.mean_abs - base.mean_abs
    order = np.argsort(delta)
    suppressed = [(FEATURE_NAMES[i], float(delta[i])) for i in order[:top_k]
                  if delta[i] < 0.0]
    enhanced = [(FEATURE_NAMES[i], float(delta[i])) for i in order[::-1][:top_k]
                if delta[i] > 0.0]
    return DeltaReport(feature_names=FEATURE_NAMES,
                       baseline_mean_abs=base.mean_abs,
                       adversarial_mean_abs=adv.mean_abs,
                       delta=delta, suppressed=suppressed, enhanced=enhanced)
