"""Exact Plackett-Luce probabilities, gradients, sampling, and mode.

The Plackett-Luce (PL) distribution over rankings of K items is parameterized
by positive weights v_i. A ranking pi = (pi_1, ..., pi_n), n <= K, listing
items best-first, has probability

    P(pi | v) = prod_{i=1}^{n-1}  v_{pi_i} / (v_{pi_i} + ... + v_{pi_n}).

Weights are handled in log-domain throughout: scores w_i with v_i = exp(w_i),
so positivity is automatic and the log-probability becomes

    log P(pi | w) = sum_{i=1}^{n-1} [ w_{pi_i} - logsumexp(w_{pi_i..pi_n}) ].

For n < K this is simultaneously the marginal probability that the n ranked
items appear first in that order, and the PL probability of the ranking under
the weights restricted to the ranked items; both views coincide, so partial
rankings need no special handling beyond restricting the score vector.

Gradients of the negative log-likelihood are computed in one stable pass.
With position-ordered scores u_i = w_{pi_i} and suffix logsumexps
L_i = logsumexp(u_i, ..., u_n):

    d(-log P)/d(u_m) = exp(u_m + C_{min(m, n-1)}) - [m <= n-1],
    C_j = log sum_{i<=j} exp(-L_i),

where every exponentiated quantity is bounded by n, so no overflow occurs
for finite scores. Items outside the ranking receive zero gradient.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import CapacityError

__all__ = [
    "enumerate_rankings",
    "log_probability",
    "mode_ranking",
    "nll_and_gradient_matrix",
    "nll_gradient",
    "sample_ranking",
]

MAX_ENUMERATION_ITEMS = 8


def _as_scores(scores) -> np.ndarray:
    w = np.asarray(scores, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise ValueError(f"scores must be a non-empty 1-D sequence, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("scores must be finite")
    return w


def _as_ranking(ranking, num_items: int, min_length: int = 2) -> np.ndarray:
    order = np.asarray(ranking)
    if order.ndim != 1 or order.size < min_length:
        raise ValueError(f"ranking must be a 1-D sequence of length >= {min_length}")
    if not np.issubdtype(order.dtype, np.integer):
        raise ValueError("ranking must contain integer item indices")
    order = order.astype(np.intp)
    if order.min(initial=0) < 0 or order.max(initial=-1) >= num_items:
        raise ValueError(f"ranking indices must lie in [0, {num_items})")
    if np.unique(order).size != order.size:
        raise ValueError("ranking indices must be pairwise distinct")
    return order


def _running_logsumexp(values: np.ndarray, reverse: bool) -> np.ndarray:
    # Row-wise running logsumexp along axis 1 via one exp/cumsum/log pass
    # after a per-row max shift. Safe while the row spread stays far from
    # the exp underflow edge; callers guard that and fall back otherwise.
    if reverse:
        values = values[:, ::-1]
    top = np.max(values, axis=1, keepdims=True)
    out = top + np.log(np.cumsum(np.exp(values - top), axis=1))
    return out[:, ::-1] if reverse else out


def nll_and_gradient_matrix(position_scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched NLL and gradient for rankings given as position-ordered scores.

    Parameters
    ----------
    position_scores : (m, n) array
        Row r holds the scores of ranking r's items in ranking order
        (best first). All rankings in the batch share the length n >= 2.

    Returns
    -------
    nll : (m,) array of negative log-probabilities.
    grad : (m, n) array, d(nll)/d(position score).
    """
    W = np.asarray(position_scores, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] < 2:
        raise ValueError(f"position_scores must be (m, n>=2), got shape {W.shape}")
    n = W.shape[1]
    # L[:, i] = logsumexp over the ranking suffix starting at position i;
    # C[:, j] = log sum_{i<=j} exp(-L_i). Spreads under 600 keep every
    # shifted exp normal (the suffix sums stretch a spread by at most
    # log n), so the single-pass scan loses nothing; wider or non-finite
    # rows take the slower element-wise accumulate.
    if np.all(np.ptp(W, axis=1) <= 600.0):
        L = _running_logsumexp(W, reverse=True)
        C = _running_logsumexp(-L, reverse=False)
    else:
        L = np.logaddexp.accumulate(W[:, ::-1], axis=1)[:, ::-1]
        C = np.logaddexp.accumulate(-L, axis=1)
    nll = np.sum(L[:, :-1] - W[:, :-1], axis=1)
    stage = np.minimum(np.arange(n), n - 2)
    grad = np.exp(W + C[:, stage])
    grad[:, :-1] -= 1.0
    return nll, grad


def log_probability(ranking, scores) -> float:
    """log P(ranking | scores) under the PL model, marginal for partial rankings."""
    w = _as_scores(scores)
    order = _as_ranking(ranking, w.size)
    nll, _ = nll_and_gradient_matrix(w[order][None, :])
    return float(-nll[0])


def nll_gradient(ranking, scores) -> np.ndarray:
    """Gradient of -log P(ranking | scores) w.r.t. every score (length K)."""
    w = _as_scores(scores)
    order = _as_ranking(ranking, w.size)
    _, g = nll_and_gradient_matrix(w[order][None, :])
    full = np.zeros_like(w)
    full[order] = g[0]
    return full


def sample_ranking(scores, size: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Draw a ranking of `size` items by Gumbel perturbation.

    All K scores are perturbed with i.i.d. standard Gumbel noise and sorted
    descending; the first `size` entries are returned. For size == K this is
    an exact PL draw, and for size < K it is the joint law of the first
    `size` sequential PL choices (the top-`size` prefix marginal).
    """
    w = _as_scores(scores)
    if not 1 <= size <= w.size:
        raise ValueError(f"size must be in [1, {w.size}], got {size}")
    perturbed = w + rng.gumbel(size=w.size)
    order = np.argsort(-perturbed, kind="stable")
    return tuple(int(i) for i in order[:size])


def mode_ranking(scores) -> tuple[int, ...]:
    """Most probable full ranking: scores descending, ties by ascending index."""
    w = _as_scores(scores)
    order = np.argsort(-w, kind="stable")
    return tuple(int(i) for i in order)


def enumerate_rankings(scores) -> dict[tuple[int, ...], float]:
    """Probability of every full ranking, brute force. Guarded at K <= 8."""
    w = _as_scores(scores)
    K = w.size
    if K > MAX_ENUMERATION_ITEMS:
        raise CapacityError(
            f"enumeration over {K}! rankings exceeds the K <= {MAX_ENUMERATION_ITEMS} guard"
        )
    if K == 1:
        return {(0,): 1.0}
    perms = np.array(list(itertools.permutations(range(K))), dtype=np.intp)
    nll, _ = nll_and_gradient_matrix(w[perms])
    probs = np.exp(-nll)
    return {tuple(int(i) for i in perm): float(p) for perm, p in zip(perms, probs)}
