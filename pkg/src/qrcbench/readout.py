"""Input generation, linear readout training and capacity scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .dynamics import SYMMETRIC, UNIT_INTERVAL
from .operators import input_rng

PINV_RCOND = 1e-12


def generate_inputs(length: int, encoding: str, seed: int) -> np.ndarray:
    """I.i.d. uniform input series on the encoding's interval, seed-reproducible."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = input_rng(seed)
    if encoding == UNIT_INTERVAL:
        return rng.uniform(0.0, 1.0, size=length)
    if encoding == SYMMETRIC:
        return rng.uniform(-1.0, 1.0, size=length)
    raise ValueError(f"unknown encoding {encoding!r}")


@dataclass
class ReadoutModel:
    """Trained linear readout y = w . x + b."""

    weights: np.ndarray
    bias: float
    degenerate: bool = False

    def predict(self, design: np.ndarray) -> np.ndarray:
        return design @ self.weights + self.bias


def train_readout(design: np.ndarray, targets: np.ndarray, ridge: float = 0.0) -> ReadoutModel:
    """Least-squares fit of weights and bias, jointly, via pseudoinverse.

    ridge = 0 uses the SVD pseudoinverse with a relative cutoff of 1e-12;
    ridge > 0 solves the regularized normal equations with the bias column
    left unpenalized.
    """
    design = np.asarray(design, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if design.ndim != 2 or design.shape[0] == 0:
        raise ValueError("design matrix must be non-empty and 2D")
    if design.shape[0] != targets.shape[0]:
        raise ValueError("design matrix rows and target length differ")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")

    if np.ptp(targets) == 0.0:
        return ReadoutModel(
            weights=np.zeros(design.shape[1]), bias=float(targets[0]), degenerate=True
        )

    augmented = np.hstack([design, np.ones((design.shape[0], 1))])
    if ridge == 0.0:
        coefs = np.linalg.pinv(augmented, rcond=PINV_RCOND) @ targets
    else:
        gram = augmented.T @ augmented
        penalty = np.eye(augmented.shape[1]) * ridge
        penalty[-1, -1] = 0.0
        coefs = np.linalg.solve(gram + penalty, augmented.T @ targets)
    return ReadoutModel(weights=coefs[:-1], bias=float(coefs[-1]))


@dataclass(frozen=True)
class CapacityScore:
    value: float
    degenerate: bool


def capacity_detail(predictions: np.ndarray, targets: np.ndarray) -> CapacityScore:
    """Squared Pearson correlation, clamped to [0, 1]; zero variance scores 0."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape or predictions.size < 2:
        raise ValueError("predictions and targets must share a length >= 2")
    dp = predictions - predictions.mean()
    dt = targets - targets.mean()
    vp = float(dp @ dp)
    vt = float(dt @ dt)
    if vp == 0.0 or vt == 0.0:
        return CapacityScore(0.0, True)
    cov = float(dp @ dt)
    return CapacityScore(min(max(cov * cov / (vp * vt), 0.0), 1.0), False)


def capacity(predictions: np.ndarray, targets: np.ndarray) -> float:
    return capacity_detail(predictions, targets).value


def normalized_legendre(degree: int, x: np.ndarray) -> np.ndarray:
    """Legendre polynomial of ``degree`` normalized to unit second moment
    under the uniform probability measure on [-1, 1] (degree 1 is sqrt(3) x)."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    coefs = np.zeros(degree + 1)
    coefs[degree] = 1.0
    return np.sqrt(2 * degree + 1) * npleg.legval(np.asarray(x, dtype=float), coefs)


def delayed_power_target(
    inputs: np.ndarray, washout: int, n_rows: int, tau: int, q: int = 1
) -> np.ndarray:
    """Targets u_{k - tau}^q aligned with post-washout design rows."""
    if tau < 0 or q < 1:
        raise ValueError("tau must be >= 0 and q >= 1")
    if washout < tau:
        raise ValueError(f"washout {washout} shorter than delay {tau}")
    seg = inputs[washout - tau : washout - tau + n_rows]
    return seg**q if q > 1 else seg.copy()


def legendre_product_target(
    inputs: np.ndarray, washout: int, n_rows: int, profile
) -> np.ndarray:
    """Targets prod_tau P_q(s_{k - tau}) for a {tau: q} delay profile."""
    out = np.ones(n_rows)
    for tau, q in profile:
        if washout < tau:
            raise ValueError(f"washout {washout} shorter than delay {tau}")
        seg = inputs[washout - tau : washout - tau + n_rows]
        out = out * normalized_legendre(q, seg)
    return out
