"""Solver configuration and fit reports."""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParameterError

DIVERGENCES = ("kl", "hellinger")

# mode-specific defaults used when eta / max_iters are left as None
DENSITY_DEFAULTS = {"eta": 0.1, "max_iters": 500}
SPD_DEFAULTS = {"eta": 0.01, "max_iters": 300}


@dataclass
class SdlConfig:
    """Parameters shared by the density and SPD dictionary learners.

    ``eta`` and ``max_iters`` default per mode (0.1 / 500 for densities,
    0.01 / 300 for SPD matrices). ``eta`` is the initial step size; with
    backtracking it is halved on rejection and doubled after a step that
    was accepted outright. ``inner_iters`` caps the warm-started coding
    iterations inside one outer learning iteration; ``code_max_iters``
    caps stand-alone coding.
    """

    num_atoms: int = 8
    eta: float = None
    tol: float = 1e-8
    max_iters: int = None
    divergence: str = "kl"
    smoothing_eps: float = 1e-10
    seed: int = 0
    sparsity_threshold: float = 0.01
    backtracking: bool = True
    code_tol: float = None
    code_max_iters: int = 2000
    inner_iters: int = 50
    kmeans_iters: int = 50
    fd_gradient: bool = False

    def __post_init__(self):
        if int(self.num_atoms) < 1:
            raise ParameterError(f"num_atoms must be >= 1, got {self.num_atoms}")
        if self.eta is not None and not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.max_iters is not None and int(self.max_iters) < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.divergence not in DIVERGENCES:
            raise ParameterError(f"divergence must be one of {DIVERGENCES}, got {self.divergence!r}")
        if not self.smoothing_eps > 0:
            raise ParameterError("smoothing_eps must be positive")
        if int(self.inner_iters) < 1 or int(self.code_max_iters) < 1:
            raise ParameterError("iteration caps must be >= 1")
        if not 0 < self.sparsity_threshold < 1:
            raise ParameterError("sparsity_threshold must lie in (0, 1)")

    def resolved(self, mode):
        """Copy with mode defaults filled in (``mode`` is 'density' or 'spd')."""
        defaults = DENSITY_DEFAULTS if mode == "density" else SPD_DEFAULTS
        out = SdlConfig(**asdict(self))
        if out.eta is None:
            out.eta = defaults["eta"]
        if out.max_iters is None:
            out.max_iters = defaults["max_iters"]
        if out.code_tol is None:
            out.code_tol = out.tol
        return out

    def to_dict(self):
        return asdict(self)


@dataclass
class FitReport:
    """Summary of a density dictionary fit."""

    objective_trace: list
    objective: float
    sparsity: float
    iterations: int
    wall_time: float
    converged: bool
    bound_trace: list = field(default_factory=list)

    def check(self):
        assert np.all(np.isfinite(self.objective_trace))
        assert 0.0 <= self.sparsity <= 100.0


@dataclass
class SpdFitReport:
    """Summary of an SPD dictionary fit."""

    objective_trace: list
    objective: float
    sparsity: float
    recon_error: float
    iterations: int
    wall_time: float
    converged: bool
    min_atom_eigenvalue: float = np.nan


@dataclass
class KktReport:
    """Per-sample optimality diagnostics for simplex-constrained codes.

    ``dual`` holds the estimated multiplier ``r_i`` (mean partial
    derivative over the active set), ``spread`` the largest deviation of an
    active partial derivative from it and ``slack`` the smallest excess of
    an inactive partial derivative over it (``+inf`` when every atom is
    active). ``pair_divergence[i, j]`` is ``D(f_i, g_j)`` and
    ``surrogate[i] = sum_j w_ij D(f_i, g_j)`` bounds the per-sample
    objective from above.
    """

    dual: np.ndarray
    spread: np.ndarray
    slack: np.ndarray
    active: np.ndarray
    degenerate: np.ndarray
    pair_divergence: np.ndarray
    surrogate: np.ndarray
    objective: float
    bound: float

    @property
    def max_spread(self):
        return float(np.max(self.spread))

    @property
    def min_slack(self):
        return float(np.min(self.slack))

    @property
    def bound_holds(self):
        return bool(self.objective <= self.bound + 1e-12 * max(1.0, abs(self.bound)))
