"""Multi-start quasi-Newton maximization over smooth real parameterizations.

Objectives are written in batched form, ``f(X) -> values`` for ``X`` of
shape ``(m, n)``, so a central-difference gradient costs one vectorized call.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import schur
from scipy.optimize import minimize

FD_STEP = 1e-5


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for every multi-start search.

    ``tolerance`` is the convergence tolerance handed to the local search and
    the slack allowed when comparing optimizer values.  ``agreement`` is how
    close two restarts must land for the result to be flagged converged.
    ``ancilla_dims`` overrides the default ancilla sizes, e.g.
    ``{"A_anc": 3, "B_anc": 2}``.
    """

    restarts: int = 20
    max_iterations: int = 500
    tolerance: float = 1e-6
    seed: int = 42
    ancilla_dims: dict | None = None
    agreement: float = 1e-4

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")

    def ancilla(self, label: str, default: int) -> int:
        if self.ancilla_dims and label in self.ancilla_dims:
            return int(self.ancilla_dims[label])
        return default

    def to_json(self) -> dict:
        return {
            "restarts": self.restarts,
            "max_iterations": self.max_iterations,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "ancilla_dims": dict(self.ancilla_dims) if self.ancilla_dims else None,
        }


@dataclass
class SearchResult:
    value: float
    x: np.ndarray
    values: list[float] = field(default_factory=list)
    converged: bool = False


def central_gradient(f_batch: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = FD_STEP):
    n = x.size
    steps = np.eye(n) * h
    pts = np.concatenate([x + steps, x - steps, x[None, :]])
    vals = f_batch(pts)
    return vals[-1], (vals[:n] - vals[n:2 * n]) / (2 * h)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("CAPLAB_THREADS", "1")))
    except ValueError:
        return 1


def _local_max(f_batch, x0, config: OptimizerConfig):
    def fun(x):
        v, g = central_gradient(f_batch, x)
        return -v, -g

    res = minimize(
        fun, x0, jac=True, method="BFGS",
        options={"maxiter": config.max_iterations, "gtol": config.tolerance},
    )
    x = res.x
    return float(f_batch(x[None, :])[0]), x


def multistart_maximize(
    f_batch: Callable[[np.ndarray], np.ndarray],
    n_params: int,
    config: OptimizerConfig,
    starts: Sequence[np.ndarray] = (),
    sampler: Callable[[np.random.Generator], np.ndarray] | None = None,
) -> SearchResult:
    """Maximize ``f_batch`` from the given starts plus random restarts.

    Restart ``i`` draws its initial point from ``default_rng(seed + i)``, so
    the result does not depend on execution order.  Supplied ``starts`` are
    run in addition to ``config.restarts`` random ones.
    """
    if sampler is None:
        def sampler(rng):
            return rng.standard_normal(n_params)

    inits = [np.asarray(s, dtype=float) for s in starts]
    inits += [sampler(np.random.default_rng(config.seed + i)) for i in range(config.restarts)]

    workers = min(worker_count(), len(inits))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda x0: _local_max(f_batch, x0, config), inits))
    else:
        results = [_local_max(f_batch, x0, config) for x0 in inits]
    # starting points count too: the search never reports worse than where it began
    for x0 in inits:
        results.append((float(f_batch(x0[None, :])[0]), x0))

    values = [v for v, _ in results[: len(inits)]]
    best_v, best_x = max(results, key=lambda r: r[0])
    agree = sum(1 for v in values if abs(v - best_v) <= config.agreement)
    return SearchResult(best_v, best_x, values, converged=agree >= 2 or len(values) == 1)


# ----------------------------------------------------------------------------
# parameterizations

def to_states(x: np.ndarray, dim: int) -> np.ndarray:
    """Real coordinates (..., 2*dim) -> normalized complex vectors (..., dim)."""
    z = x[..., :dim] + 1j * x[..., dim:2 * dim]
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def from_state(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.concatenate([v.real, v.imag])


def hermitian_from_params(x: np.ndarray, n: int) -> np.ndarray:
    """n*n real coordinates (...) -> Hermitian matrices (..., n, n)."""
    batch = x.shape[:-1]
    h = np.zeros(batch + (n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    k = len(iu[0])
    h[..., np.arange(n), np.arange(n)] = x[..., :n]
    off = x[..., n:n + k] + 1j * x[..., n + k:n + 2 * k]
    h[..., iu[0], iu[1]] = off
    h[..., iu[1], iu[0]] = off.conj()
    return h


def params_from_hermitian(h: np.ndarray) -> np.ndarray:
    n = h.shape[0]
    iu = np.triu_indices(n, 1)
    return np.concatenate([np.real(np.diag(h)), h[iu].real, h[iu].imag])


def unitaries_from_params(x: np.ndarray, n: int) -> np.ndarray:
    """exp(iH) for a stack of Hermitian generators given by real coordinates."""
    h = hermitian_from_params(x, n)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def generator_of(u: np.ndarray) -> np.ndarray:
    """A Hermitian H with exp(iH) = u (complex Schur form is diagonal for normal u)."""
    t, z = schur(u, output="complex")
    return (z * np.angle(np.diag(t))) @ z.conj().T
