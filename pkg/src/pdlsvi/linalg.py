"""Incremental ridge regression primitives: regularized Gram inverses kept
up to date by rank-one updates, quadratic-form exploration bonuses, and
least-squares solves against accumulated targets."""

from dataclasses import dataclass

import numpy as np


@dataclass
class GramInverse:
    """Inverse of a regularized Gram matrix Lambda = sum phi phi^T + lam*I.

    Only the inverse is stored; the matrix itself is never materialized.
    `count` tracks how many rank-one terms have been folded in.
    """

    inv: np.ndarray
    lam: float
    count: int = 0


@dataclass
class RidgeAccumulator:
    """Right-hand sides sum_tau phi_tau * target_tau, one per objective."""

    reward: np.ndarray
    utility: np.ndarray


def gram_inverse_init(d: int, lam: float) -> GramInverse:
    """Inverse of lam*I, the Gram matrix with no data."""
    if d <= 0:
        raise ValueError(f"feature dimension must be positive, got {d}")
    if lam <= 0:
        raise ValueError(f"ridge parameter must be positive, got {lam}")
    return GramInverse(inv=np.eye(d) / lam, lam=float(lam))


def gram_inverse_rank_one_update(g: GramInverse, phi: np.ndarray) -> GramInverse:
    """Fold one feature vector into the inverse (Sherman-Morrison).

    (Lambda + phi phi^T)^{-1} = inv - (inv phi)(inv phi)^T / (1 + phi^T inv phi).
    The denominator is >= 1 because Lambda is positive definite, so this is
    numerically safe for any phi.
    """
    u = g.inv @ phi
    denom = 1.0 + phi @ u
    inv = g.inv - np.outer(u, u) / denom
    # symmetrize: rank-one updates drift off symmetric over many steps
    inv = (inv + inv.T) / 2.0
    return GramInverse(inv=inv, lam=g.lam, count=g.count + 1)


def bonus_quadratic_form(g: GramInverse, phi: np.ndarray) -> float:
    """sqrt(phi^T Lambda^{-1} phi), the width of the confidence set along phi."""
    q = phi @ g.inv @ phi
    # q can dip epsilon-negative from rounding; the true form is >= 0
    return float(np.sqrt(max(q, 0.0)))


def bonus_quadratic_form_batch(g: GramInverse, phis: np.ndarray) -> np.ndarray:
    """Row-wise sqrt(phi^T Lambda^{-1} phi) for a stack of features (n, d)."""
    q = np.einsum("ij,ij->i", phis @ g.inv, phis)
    return np.sqrt(np.maximum(q, 0.0))


def ridge_solve(g: GramInverse, acc: RidgeAccumulator, objective: str) -> np.ndarray:
    """Ridge weights Lambda^{-1} * sum_tau phi_tau target_tau for one objective."""
    if objective == "reward":
        return g.inv @ acc.reward
    if objective == "utility":
        return g.inv @ acc.utility
    raise ValueError(f"unknown objective {objective!r}")
