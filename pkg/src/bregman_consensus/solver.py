"""Alternating closed-form consensus solver.

Each instance i carries two copies of its probability vector: a left copy
used wherever the vector appears as a first divergence argument and a right
copy for second-argument occurrences, tied together by a coupling penalty
``lam``.  The objective minimized over all copies is::

    J = sum_i d(pi_i, yr_i)
      + alpha * sum_{i,j} s_ij d(yl_i, yr_j)
      + lam   * sum_i d(yl_i, yr_i)

with the pair sum running over ordered pairs, the similarity read
symmetrically and the diagonal absent.  Both half-steps have closed forms:

* right copies are weighted arithmetic means of ``pi_j``, the neighbours'
  left copies and the instance's own left copy;
* left copies are weighted means in the gradient (dual) space, mapped back
  through the gradient inverse.

Within a half-step the per-instance updates are mutually independent (right
updates read only left copies and ``pi``; left updates read only right
copies), so sweeps write into fresh buffers that are swapped at a barrier,
and every inner summation runs in fixed ascending-index order.  Results are
therefore identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .divergences import DivergenceSpec
from .ensemble_inputs import SimilarityMatrix
from .exceptions import ArgumentError, DivisionDegenerateError, ShapeError

_TRACE_GUARD = 1e-300  # denominator guard for the relative objective test


@dataclass
class SolverConfig:
    """Hyperparameters of one solve.

    ``alpha`` weights the cluster-ensemble term, ``lam`` is the global
    left/right coupling penalty (one value shared by every instance), and
    convergence fires when the relative objective change drops below
    ``epsilon``.
    """

    divergence: DivergenceSpec
    alpha: float = 1.0
    lam: float = 0.1
    epsilon: float = 1e-10
    max_iters: int = 1000
    threads: int = 1

    def __post_init__(self):
        if self.alpha < 0:
            raise ArgumentError(f"alpha must be nonnegative, got {self.alpha}")
        if self.lam < 0:
            raise ArgumentError(f"lam must be nonnegative, got {self.lam}")
        if self.epsilon <= 0:
            raise ArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise ArgumentError(f"max_iters must be positive, got {self.max_iters}")
        if self.threads < 1:
            raise ArgumentError(f"threads must be positive, got {self.threads}")


@dataclass
class SolverState:
    """Evolving left/right copies plus the objective trace."""

    y_left: np.ndarray
    y_right: np.ndarray
    iteration: int
    objective_trace: list
    copy_history: Optional[list] = field(default=None, repr=False)


@dataclass
class Labeling:
    """Final consolidated labeling."""

    probabilities: np.ndarray
    labels: np.ndarray
    iterations_used: int
    converged: bool


class _Graph:
    """Symmetrized CSR view of a similarity matrix, fixed ascending order."""

    def __init__(self, similarity: SimilarityMatrix):
        self.n = similarity.n
        self.indptr, self.indices, self.data = similarity.symmetrized_csr()
        self.row_sum = self.weighted_sum(np.ones((self.n, 1)), 0, self.n)[:, 0]

    def weighted_sum(self, Y: np.ndarray, lo: int, hi: int) -> np.ndarray:
        """Per-row sums sum_j s_rj * Y[j] for rows lo..hi-1.

        Each row reduces its own contiguous slice sequentially, so the result
        is bitwise independent of how rows are chunked across workers.  Empty
        rows contribute zero; reduceat sees only nonempty rows' offsets, whose
        consecutive gaps are exactly the nonempty rows' slices.
        """
        start, end = self.indptr[lo], self.indptr[hi]
        out = np.zeros((hi - lo, Y.shape[1]))
        if start == end:
            return out
        prod = self.data[start:end, None] * Y[self.indices[start:end]]
        counts = np.diff(self.indptr[lo : hi + 1])
        nonempty = np.flatnonzero(counts > 0)
        offsets = np.asarray(self.indptr[lo:hi] - start)[nonempty]
        out[nonempty] = np.add.reduceat(prod, offsets, axis=0)
        return out


def _chunks(n: int, threads: int):
    bounds = np.linspace(0, n, num=min(threads, n) + 1, dtype=np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _right_block(graph, pi, y_left, alpha, lam, out, lo, hi):
    nbr = graph.weighted_sum(y_left, lo, hi)
    gamma = alpha * graph.row_sum[lo:hi]
    denom = (1.0 + gamma + lam)[:, None]
    out[lo:hi] = (pi[lo:hi] + alpha * nbr + lam * y_left[lo:hi]) / denom


def _left_block(grad_right, graph, spec, y_left, y_right, alpha, lam, out, lo, hi):
    nbr = graph.weighted_sum(grad_right, lo, hi)
    gamma = alpha * graph.row_sum[lo:hi]
    denom = gamma + lam
    active = denom > 0.0
    dual = np.where(
        active[:, None],
        (alpha * nbr + lam * grad_right[lo:hi]) / np.where(active, denom, 1.0)[:, None],
        grad_right[lo:hi],  # placeholder; inactive rows keep their old copy below
    )
    updated = spec.grad_inv(dual)
    if spec.simplex_domain:
        updated = updated / updated.sum(axis=1, keepdims=True)
    out[lo:hi] = np.where(active[:, None], updated, y_left[lo:hi])


def _sweep(block_fn, n, threads, executor):
    if executor is None or threads <= 1:
        block_fn(0, n)
        return
    futures = [executor.submit(block_fn, lo, hi) for lo, hi in _chunks(n, threads)]
    for f in futures:
        f.result()  # barrier; also re-raises worker errors


def _objective(y_left, y_right, pi, similarity, config, lam=None):
    spec = config.divergence
    lam = config.lam if lam is None else lam
    total = float(np.sum(spec.bregman(pi, y_right)))
    if config.alpha > 0.0 and similarity.nnz:
        r, c, v = similarity.rows, similarity.cols, similarity.vals
        pair = np.sum(v * spec.bregman(y_left[r], y_right[c])) + np.sum(
            v * spec.bregman(y_left[c], y_right[r])
        )
        total += config.alpha * float(pair)
    if lam > 0.0:
        total += lam * float(np.sum(spec.bregman(y_left, y_right)))
    return total


def objective_j0(Y, pi, similarity, config) -> float:
    """Single-copy objective: fit term plus the similarity-weighted pair term."""
    Y = np.asarray(Y, dtype=np.float64)
    return _objective(Y, Y, pi, similarity, config, lam=0.0)


def objective_j(state: SolverState, pi, similarity, config) -> float:
    """Split objective over the state's left and right copies."""
    return _objective(state.y_left, state.y_right, pi, similarity, config)


def update_right(j: int, state: SolverState, pi, similarity, config) -> np.ndarray:
    """Closed-form minimizer for instance ``j``'s right copy, left copies fixed."""
    graph = _Graph(similarity)
    out = np.empty_like(state.y_right)
    _right_block(graph, np.asarray(pi, dtype=np.float64), state.y_left,
                 config.alpha, config.lam, out, j, j + 1)
    return out[j]


def update_left(i: int, state: SolverState, similarity, config) -> np.ndarray:
    """Closed-form minimizer for instance ``i``'s left copy, right copies fixed.

    The minimization runs in the dual space: the gradient of the new left
    copy is the weighted mean of the right copies' gradients, with weights
    ``alpha * s_ij`` and ``lam``.  When both weights vanish the subproblem is
    vacuous and the old copy is returned unchanged.
    """
    spec = config.divergence
    graph = _Graph(similarity)
    out = np.empty_like(state.y_left)
    _left_block(spec.grad(state.y_right), graph, spec, state.y_left, state.y_right,
                config.alpha, config.lam, out, i, i + 1)
    return out[i]


def _finalize(y_left, y_right, spec):
    y = 0.5 * (y_left + y_right)
    labels = np.argmax(y, axis=1)  # np.argmax breaks ties toward the lowest index
    if spec.nonnegative_domain:
        v = y
    else:
        v = np.maximum(y, 0.0)  # signed domains: clamp before scaling
    sums = v.sum(axis=1, keepdims=True)
    k = y.shape[1]
    probs = np.where(sums > 0.0, v / np.where(sums > 0.0, sums, 1.0), 1.0 / k)
    return probs, labels


def run(pi, similarity: SimilarityMatrix, config: SolverConfig,
        record_copies: bool = False):
    """Run the alternating solve to convergence.

    Every copy starts at the uniform vector 1/k.  Each iteration performs a
    full right sweep followed by a full left sweep, then appends the
    objective to the trace; the loop stops when the relative objective change
    falls below ``config.epsilon`` or after ``config.max_iters`` iterations.
    The final vectors are the averages of the two copies, normalized per row.

    Parameters
    ----------
    pi : (n, k) array
        Averaged classifier probabilities.
    similarity : SimilarityMatrix
        Co-association weights over the same n instances.
    config : SolverConfig
    record_copies : bool
        When true, ``state.copy_history`` holds an (y_left, y_right) snapshot
        per iteration, including the initial one.

    Returns
    -------
    (Labeling, SolverState)
    """
    spec = config.divergence
    pi = np.asarray(pi, dtype=np.float64)
    if pi.ndim != 2:
        raise ShapeError(f"pi must be 2-D, got shape {pi.shape}")
    n, k = pi.shape
    if k != spec.dimension:
        raise ShapeError(f"pi has {k} columns but divergence dimension is {spec.dimension}")
    if similarity.n != n:
        raise ShapeError(f"similarity is over {similarity.n} instances, pi over {n}")
    spec.check_domain(pi)
    pi = spec.clamp(pi)

    graph = _Graph(similarity)
    y_left = np.full((n, k), 1.0 / k)
    y_right = np.full((n, k), 1.0 / k)
    trace = [_objective(y_left, y_right, pi, similarity, config)]
    history = [(y_left.copy(), y_right.copy())] if record_copies else None

    executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    converged = False
    iteration = 0
    try:
        for iteration in range(1, config.max_iters + 1):
            new_right = np.empty_like(y_right)
            _sweep(
                lambda lo, hi: _right_block(graph, pi, y_left, config.alpha,
                                            config.lam, new_right, lo, hi),
                n, config.threads, executor)
            y_right = new_right

            grad_right = spec.grad(y_right)
            new_left = np.empty_like(y_left)
            _sweep(
                lambda lo, hi: _left_block(grad_right, graph, spec, y_left, y_right,
                                           config.alpha, config.lam, new_left, lo, hi),
                n, config.threads, executor)
            y_left = new_left

            value = _objective(y_left, y_right, pi, similarity, config)
            trace.append(value)
            if history is not None:
                history.append((y_left.copy(), y_right.copy()))
            previous = trace[-2]
            if abs(value - previous) / max(previous, _TRACE_GUARD) < config.epsilon:
                converged = True
                break
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    probs, labels = _finalize(y_left, y_right, spec)
    labeling = Labeling(probabilities=probs, labels=labels,
                        iterations_used=iteration, converged=converged)
    state = SolverState(y_left=y_left, y_right=y_right, iteration=iteration,
                        objective_trace=trace, copy_history=history)
    return labeling, state


# -- threshold for copy coalescence ------------------------------------------


def _grad_j0(Y, pi, graph, config):
    spec = config.divergence
    G = spec.grad(Y)
    H = spec.hess_diag(Y)
    grad = H * (Y - pi)
    if config.alpha > 0.0:
        rs = graph.row_sum[:, None]
        nbr_g = graph.weighted_sum(G, 0, graph.n)
        nbr_y = graph.weighted_sum(Y, 0, graph.n)
        grad += config.alpha * (rs * G - nbr_g)  # first-argument occurrences
        grad += config.alpha * H * (rs * Y - nbr_y)  # second-argument occurrences
    return grad


def _project_simplex(v):
    """Euclidean projection of each row onto the probability simplex."""
    n, k = v.shape
    u = np.sort(v, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = u - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(n), rho] / (rho + 1.0)
    return np.maximum(v - theta[:, None], 0.0)


def _project_domain(Y, spec):
    if spec.simplex_domain:
        Y = _project_simplex(Y)
        Y = spec.clamp(Y)
        return Y / Y.sum(axis=1, keepdims=True)
    return spec.clamp(Y)


def minimize_j0(pi, similarity, config, y0=None, max_iters=20000, tol=1e-12):
    """Projected-gradient minimizer of the single-copy objective.

    Used as the fallback when no externally computed minimizer is supplied to
    :func:`lambda_threshold`; Armijo backtracking on the exact objective.
    """
    spec = config.divergence
    pi = spec.clamp(np.asarray(pi, dtype=np.float64))
    graph = _Graph(similarity)
    Y = _project_domain(pi.copy() if y0 is None else np.asarray(y0, dtype=np.float64), spec)
    value = objective_j0(Y, pi, similarity, config)
    step = 1.0
    for _ in range(max_iters):
        g = _grad_j0(Y, pi, graph, config)
        improved = False
        trial = step
        for _ in range(60):  # backtrack until the projected step descends
            Y_new = _project_domain(Y - trial * g, spec)
            v_new = objective_j0(Y_new, pi, similarity, config)
            if v_new < value:
                improved = True
                break
            trial *= 0.5
        if not improved:
            break
        move = float(np.abs(Y_new - Y).max())
        drop = value - v_new
        Y, value = Y_new, v_new
        step = min(trial * 2.0, 1e6)
        if move < tol and drop < tol * max(1.0, abs(value)):
            break
    return Y


def lambda_threshold(pi, similarity, config, state: SolverState, j0_minimizer=None):
    """Coupling weight above which left and right copies coincide.

    If the converged copies already coincide (max per-row divergence at most
    1e-9) the run's own ``lam`` is returned.  Otherwise the bound is the
    objective gap to a single-copy minimizer divided by the accumulated
    divergence between the copies::

        (J0(y*) - J(yl*, yr*; lam=0)) / sum_i d(yl_i, yr_i)

    ``j0_minimizer`` may supply y* directly; otherwise a projected-gradient
    minimization of the single-copy objective computes it.
    """
    spec = config.divergence
    per_row = np.atleast_1d(spec.bregman(state.y_left, state.y_right))
    if float(per_row.max()) <= 1e-9:
        return config.lam
    y_star = j0_minimizer if j0_minimizer is not None else minimize_j0(pi, similarity, config)
    numerator = objective_j0(y_star, pi, similarity, config) - _objective(
        state.y_left, state.y_right, pi, similarity, config, lam=0.0
    )
    denominator = float(per_row.sum())
    if denominator < 1e-15:
        raise DivisionDegenerateError(
            f"copies reported distinct but divergence sum is {denominator}"
        )
    return max(numerator / denominator, 0.0)
