"""Time integration of the ZK initial-boundary value problem.

Semi-discrete form: u_t = -(alpha u_x + u_xxx + u_xyy + eps(u_xxxx+u_yyyy))
- u u_x on the interior unknowns, with walls u = 0, outflow u_x(L,.) = 0,
and for eps > 0 the extra regularization conditions u_yy(x,+-B) = 0 and
u_xx(0,.) = 0.

The y-direction second derivative is the Dirichlet tridiagonal, so the
whole linear part block-diagonalizes under the type-I discrete sine
transform in y: each transverse mode m evolves by an nx-by-nx matrix

    A_m = D3 + (alpha - xi_m) D1 + eps (D4x + xi_m^2 I).

Time stepping is Crank-Nicolson on the linear part (one dense inverse per
mode, reused across steps) with the conservative nonlinearity (u^2/2)_x
treated explicitly by second-order Adams-Bashforth extrapolation to the
half step; the first step uses a single explicit Euler predictor.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.fft import dst, idst

from . import calculus, spectral
from .geometry import (Field, Grid, RECTANGLE, TRUNCATED_STRIP, build_grid,
                       enforce_dirichlet, sample_field)

BLOWUP_THRESHOLD = 1.0e6

_CONFIG_DEFAULTS = {
    "dt": 1e-3,
    "domain_kind": RECTANGLE,
    "alpha": 1,
    "epsilon": 0.0,
    "linear": False,
    "initial": "zero",
    "scale_weighted": None,
    "snapshot_stride": 10 ** 9,
    "trace_stride": 10,
    "linear_solver_tol": 1e-10,
}


@dataclass(frozen=True)
class SimConfig:
    """Validated simulation configuration (flat, JSON-serializable)."""

    L: float
    B: float
    nx: int
    ny: int
    dt: float
    t_end: float
    alpha: int = 1
    epsilon: float = 0.0
    linear: bool = False
    domain_kind: str = RECTANGLE
    initial: object = "zero"
    scale_weighted: float | None = None
    snapshot_stride: int = 10 ** 9
    trace_stride: int = 10
    linear_solver_tol: float = 1e-10

    def __post_init__(self):
        for name in ("L", "B", "dt", "t_end"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v!r}")
        if self.alpha not in (0, 1):
            raise ValueError(f"alpha must be 0 or 1, got {self.alpha!r}")
        if not (isinstance(self.epsilon, (int, float)) and self.epsilon >= 0
                and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a finite non-negative real, got {self.epsilon!r}")
        if not isinstance(self.linear, bool):
            raise ValueError(f"linear must be a bool, got {self.linear!r}")
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 8):
                raise ValueError(f"{name} must be an integer >= 8, got {v!r}")
        for name in ("snapshot_stride", "trace_stride"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        if not (self.linear_solver_tol > 0):
            raise ValueError(
                f"linear_solver_tol must be positive, got {self.linear_solver_tol!r}")
        if self.scale_weighted is not None and not (
                isinstance(self.scale_weighted, (int, float)) and self.scale_weighted > 0):
            raise ValueError(
                f"scale_weighted must be positive when given, got {self.scale_weighted!r}")
        if self.domain_kind not in (RECTANGLE, TRUNCATED_STRIP):
            raise ValueError(f"domain_kind invalid: {self.domain_kind!r}")
        if self.n_steps < 1:
            raise ValueError("t_end must cover at least one step")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def grid(self) -> Grid:
        return build_grid(self.L, self.B, self.nx, self.ny, self.domain_kind)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        return d


def config_from_dict(raw: dict) -> SimConfig:
    """Build a SimConfig from a flat mapping; unknown keys are rejected."""
    known = set(SimConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    required = {"L", "B", "nx", "ny", "t_end"}
    missing = required - set(raw)
    if missing:
        raise ValueError(f"missing required config keys: {sorted(missing)}")
    merged = dict(_CONFIG_DEFAULTS)
    merged.update(raw)
    return SimConfig(**merged)


# ---------------------------------------------------------------------------
# initial data

def initial_field(config: SimConfig, grid: Grid | None = None) -> Field:
    """Sample the configured initial datum onto the grid, Dirichlet-clean."""
    g = grid if grid is not None else config.grid()
    spec_ = config.initial
    if isinstance(spec_, dict):
        if set(spec_) != {"file"}:
            raise ValueError(f"initial: file reference must be {{'file': path}}, got {spec_!r}")
        fld = read_snapshot(spec_["file"])[1]
        if fld.grid.shape != g.shape:
            raise ValueError("initial: snapshot grid does not match config grid")
        fld = Field(g, fld.values)
    elif spec_ == "zero":
        fld = sample_field(g, lambda x, y: np.zeros_like(x))
    elif isinstance(spec_, str) and spec_.startswith("mode:"):
        try:
            k, l, n = (int(s) for s in spec_[5:].split(","))
        except Exception as exc:
            raise ValueError(f"initial: cannot parse mode tag {spec_!r}") from exc
        mode = spectral.stationary_mode(k, l, n, g.B)
        if abs(mode.triple.L - g.L) > 1e-9 * g.L:
            raise ValueError(
                f"initial: grid L={g.L} does not host the critical length "
                f"{mode.triple.L} of mode {spec_!r}")
        fld = sample_field(g, mode)
    elif isinstance(spec_, str) and spec_.startswith("cos-product:"):
        amp = float(spec_.split(":", 1)[1])
        fld = sample_field(g, lambda x, y: amp * (1.0 - np.cos(2.0 * np.pi * x / g.L))
                           * np.cos(np.pi * y / (2.0 * g.B)))
    elif isinstance(spec_, str) and spec_.startswith("cos-bump:"):
        try:
            amp_s, r_s = spec_.split(":", 1)[1].split(",")
            amp, r = float(amp_s), float(r_s)
        except Exception as exc:
            raise ValueError(f"initial: cannot parse cos-bump tag {spec_!r}") from exc
        if not (0 < r <= g.B):
            raise ValueError(f"initial: bump radius {r} outside (0, B]")
        if g.domain_kind == TRUNCATED_STRIP and g.B < 4.0 * r:
            raise ValueError(
                f"initial: strip truncation needs B >= 4x the bump radius "
                f"(B={g.B}, r={r})")

        def bump(x, y):
            q = np.clip(1.0 - (y / r) ** 2, 0.0, None) ** 3
            return amp * (1.0 - np.cos(2.0 * np.pi * x / g.L)) * q

        fld = sample_field(g, bump)
    else:
        raise ValueError(f"initial: unknown tag {spec_!r}")
    fld = enforce_dirichlet(fld)
    if config.scale_weighted is not None:
        w = calculus.weighted_energy(fld)
        if w == 0.0:
            raise ValueError("scale_weighted: initial datum is identically zero")
        fld = Field(fld.grid, fld.values * math.sqrt(config.scale_weighted / w),
                    dirichlet_clean=True)
    return fld


# ---------------------------------------------------------------------------
# discrete operators in x and the transverse eigenvalues

def _d1_matrix(n: int, h: float) -> np.ndarray:
    d = np.zeros((n, n))
    idx = np.arange(n - 1)
    d[idx, idx + 1] = 1.0
    d[idx + 1, idx] = -1.0
    return d / (2.0 * h)


def _d3_matrix(n: int, h: float) -> np.ndarray:
    """Third derivative with u(0)=0 biased closure and u_x(L)=0 mirror."""
    d = np.zeros((n, n))
    for i in range(1, n - 1):
        if i - 2 >= 0:
            d[i, i - 2] = -1.0
        d[i, i - 1] = 2.0
        d[i, i + 1] = -2.0
        if i + 2 <= n - 1:
            d[i, i + 2] = 1.0
    d[0, 0:4] = (10.0, -12.0, 6.0, -1.0)
    d[n - 1, n - 3:n] = (-1.0, 2.0, 1.0)
    return d / (2.0 * h ** 3)


def _d4x_matrix(n: int, h: float) -> np.ndarray:
    """Fourth derivative with u_xx(0)=0 reflection and u_x(L)=0 mirror."""
    lap = np.zeros((n, n))
    idx = np.arange(n)
    lap[idx, idx] = -2.0
    lap[idx[:-1], idx[:-1] + 1] = 1.0
    lap[idx[1:], idx[1:] - 1] = 1.0
    lap /= h ** 2
    d4 = lap @ lap
    d4[n - 1, n - 1] += 2.0 / h ** 4
    return d4


def transverse_eigenvalues(ny: int, hy: float) -> np.ndarray:
    """Eigenvalues xi_m of -D_yy (Dirichlet tridiagonal), DST-I ordering."""
    m = np.arange(1, ny + 1)
    return 4.0 * np.sin(np.pi * m / (2.0 * (ny + 1))) ** 2 / hy ** 2


class LinearPart:
    """The assembled linear spatial operator, block-diagonal in y-modes."""

    def __init__(self, grid: Grid, alpha: int, epsilon: float):
        if alpha not in (0, 1):
            raise ValueError(f"alpha must be 0 or 1, got {alpha}")
        if epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {epsilon}")
        if grid.nx < 5 or grid.ny < 3:
            raise ValueError("grid too coarse for the operator stencils")
        self.grid = grid
        self.alpha = alpha
        self.epsilon = epsilon
        self.xi = transverse_eigenvalues(grid.ny, grid.hy)
        self.d1 = _d1_matrix(grid.nx, grid.hx)
        self.d3 = _d3_matrix(grid.nx, grid.hx)
        self.d4x = _d4x_matrix(grid.nx, grid.hx) if epsilon > 0 else None

    def blocks(self) -> np.ndarray:
        """Stacked per-mode matrices A_m, shape (ny, nx, nx)."""
        nx = self.grid.nx
        coef = (self.alpha - self.xi)[:, None, None]
        a = self.d3[None, :, :] + coef * self.d1[None, :, :]
        if self.epsilon > 0:
            eye = np.eye(nx)
            a = a + self.epsilon * (self.d4x[None, :, :]
                                    + (self.xi ** 2)[:, None, None] * eye[None, :, :])
        return a

    def to_modes(self, interior: np.ndarray) -> np.ndarray:
        """(nx, ny) physical interior -> (ny, nx) transverse-mode stack."""
        return dst(interior, type=1, axis=1).T

    def from_modes(self, modes: np.ndarray) -> np.ndarray:
        return idst(modes.T, type=1, axis=1)

    def apply_interior(self, interior: np.ndarray) -> np.ndarray:
        """A u on the interior, via one DST round trip per call."""
        modes = self.to_modes(interior)
        out = np.matmul(self.blocks(), modes[:, :, None])[:, :, 0]
        return self.from_modes(out)

    def apply(self, fld: Field) -> Field:
        """A u as a Field (boundary layer zeroed)."""
        if fld.grid.shape != self.grid.shape:
            raise ValueError("field grid does not match operator grid")
        return fld.with_interior(self.apply_interior(fld.interior.copy()))


def assemble_linear_part(grid: Grid, alpha: int, epsilon: float = 0.0) -> LinearPart:
    """alpha*Dx + Dxxx + Dxyy + eps*(Dx4 + Dy4) with the IBVP closures."""
    return LinearPart(grid, alpha, epsilon)


# ---------------------------------------------------------------------------
# trace and trajectory containers

TRACE_COLUMNS = ("t", "l2_sq", "weighted", "flux0", "grad_x_sq", "grad_y_sq", "cubic")


@dataclass(frozen=True)
class EnergyTrace:
    """Sampled energy functionals along a run."""

    t: np.ndarray
    l2_sq: np.ndarray
    weighted: np.ndarray
    flux0: np.ndarray
    grad_x_sq: np.ndarray
    grad_y_sq: np.ndarray
    cubic: np.ndarray
    i0_initial: float | None = None

    def __len__(self) -> int:
        return self.t.size

    def column(self, name: str) -> np.ndarray:
        if name not in TRACE_COLUMNS:
            raise KeyError(name)
        return getattr(self, name)


@dataclass(frozen=True)
class Trajectory:
    """Simulation output: config echo, snapshots, energy trace."""

    config: SimConfig
    grid: Grid
    snapshots: list
    trace: EnergyTrace
    aborted_at: float | None = None

    @property
    def final(self) -> Field:
        return self.snapshots[-1][1]


def _sample_functionals(fld: Field) -> tuple:
    g = fld.grid
    v = fld.values
    l2_sq = calculus.integrate(v * v, g)
    weighted = calculus.weighted_energy(fld)
    flux0 = calculus.trace_flux(fld)
    ux, uy = calculus.gradient_full(fld)
    gx = calculus.integrate(ux * ux, g)
    gy = calculus.integrate(uy * uy, g)
    cubic = calculus.integrate(v ** 3, g)
    return l2_sq, weighted, flux0, gx, gy, cubic


# ---------------------------------------------------------------------------
# stepping

class Stepper:
    """Holds the factorized Crank-Nicolson system and nonlinear history.

    The implicit system is time-independent, so each mode's matrix is
    inverted once up front and reused; a direct solve meets any
    ``linear_solver_tol`` by construction (the knob is kept for configs
    that swap in an iterative solver).
    """

    def __init__(self, config: SimConfig, grid: Grid | None = None):
        self.config = config
        self.grid = grid if grid is not None else config.grid()
        self.linear_part = assemble_linear_part(self.grid, config.alpha, config.epsilon)
        blocks = self.linear_part.blocks()
        nx = self.grid.nx
        eye = np.eye(nx)
        half = 0.5 * config.dt
        self.solve_mats = np.linalg.inv(eye[None, :, :] + half * blocks)
        self.rhs_mats = eye[None, :, :] - half * blocks
        if config.linear:
            self.lin_mats = np.matmul(self.solve_mats, self.rhs_mats)
        else:
            self.lin_mats = None
        self._nonlin_prev: np.ndarray | None = None

    def reset_history(self):
        self._nonlin_prev = None

    def _nonlin(self, interior: np.ndarray) -> np.ndarray:
        """(u^2/2)_x in conservative form; walls carry u = 0."""
        h = self.grid.hx
        u2 = interior * interior
        out = np.empty_like(interior)
        out[0, :] = u2[1, :] / (2.0 * h)
        out[-1, :] = -u2[-2, :] / (2.0 * h)
        out[1:-1, :] = (u2[2:, :] - u2[:-2, :]) / (2.0 * h)
        return out

    def advance(self, interior: np.ndarray) -> np.ndarray:
        """One IMEX step on the interior unknowns."""
        lp = self.linear_part
        dt = self.config.dt
        if self.config.linear:
            modes = lp.to_modes(interior)
            return lp.from_modes(np.matmul(self.lin_mats, modes[:, :, None])[:, :, 0])
        n_now = self._nonlin(interior)
        if self._nonlin_prev is None:
            predicted = interior - 0.5 * dt * (lp.apply_interior(interior) + n_now)
            n_half = self._nonlin(predicted)
        else:
            n_half = 1.5 * n_now - 0.5 * self._nonlin_prev
        self._nonlin_prev = n_now
        modes = lp.to_modes(interior)
        forcing = lp.to_modes(n_half)
        b = np.matmul(self.rhs_mats, modes[:, :, None])[:, :, 0] - dt * forcing
        return lp.from_modes(np.matmul(self.solve_mats, b[:, :, None])[:, :, 0])

    def step(self, fld: Field) -> Field:
        """One step from a clean state Field (fresh nonlinear history)."""
        if not fld.dirichlet_clean:
            raise ValueError("step requires a dirichlet_clean state")
        out = self.advance(fld.interior.copy())
        if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > BLOWUP_THRESHOLD:
            raise BlowupError(self.config.dt, float(np.max(np.abs(out[np.isfinite(out)]),
                                                           initial=0.0)))
        return fld.with_interior(out)


class BlowupError(RuntimeError):
    """Raised when the state exceeds the blow-up threshold or turns non-finite."""

    def __init__(self, t: float, magnitude: float):
        super().__init__(f"solution blew up at t={t}: max |u| ~ {magnitude:.3e}")
        self.t = t
        self.magnitude = magnitude


def step(state: Field, config: SimConfig) -> Field:
    """Single IMEX step (convenience wrapper; assembles the system anew)."""
    return Stepper(config, state.grid).step(state)


def simulate(config: SimConfig) -> Trajectory:
    """Run the IBVP from t=0 to t_end; deterministic given the config.

    On blow-up the trajectory is returned with the partial trace and
    ``aborted_at`` set instead of raising.
    """
    grid = config.grid()
    u0 = initial_field(config, grid)
    stepper = Stepper(config, grid)
    rows = []
    snapshots = [(0.0, u0)]
    i0 = calculus.norms(u0, with_i0=True).i0
    rows.append((0.0,) + _sample_functionals(u0))
    interior = u0.interior.copy()
    aborted_at = None
    n_steps = config.n_steps
    for n in range(1, n_steps + 1):
        interior = stepper.advance(interior)
        t = n * config.dt
        bad = not np.all(np.isfinite(interior))
        if bad or np.max(np.abs(interior)) > BLOWUP_THRESHOLD:
            aborted_at = t
            break
        if n % config.trace_stride == 0 or n == n_steps:
            fld = u0.with_interior(interior)
            rows.append((t,) + _sample_functionals(fld))
        if n % config.snapshot_stride == 0 and n != n_steps:
            snapshots.append((t, u0.with_interior(interior)))
    if aborted_at is None:
        snapshots.append((n_steps * config.dt, u0.with_interior(interior)))
    cols = list(zip(*rows))
    trace = EnergyTrace(*(np.asarray(c, dtype=float) for c in cols), i0_initial=i0)
    return Trajectory(config=config, grid=grid, snapshots=snapshots,
                      trace=trace, aborted_at=aborted_at)


@dataclass(frozen=True)
class SweepResult:
    """Regularization sweep output: one trajectory per epsilon."""

    epsilons: tuple
    trajectories: list
    pairwise_distances: list
    distances_to_limit: list


def simulate_regularized_sweep(config: SimConfig, epsilons) -> SweepResult:
    """Run the same problem for a decreasing list of regularization strengths.

    Reports the pairwise terminal distances d_i = ||u_{eps_i}(T) -
    u_{eps_{i+1}}(T)|| and, when the last entry is the smallest, each
    state's distance to that terminal state (the passage-to-the-limit
    view).  A trailing epsilon of exactly 0 is allowed.
    """
    eps = [float(e) for e in epsilons]
    if len(eps) < 2:
        raise ValueError("need at least two epsilons")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if any(e < 0 for e in eps):
        raise ValueError("epsilons must be >= 0")
    trajectories = [simulate(replace(config, epsilon=e)) for e in eps]
    grid = trajectories[0].grid

    def dist(a: Field, b: Field) -> float:
        d = a.values - b.values
        return math.sqrt(calculus.integrate(d * d, grid))

    finals = [tr.final for tr in trajectories]
    pairwise = [dist(a, b) for a, b in zip(finals, finals[1:])]
    to_limit = [dist(f, finals[-1]) for f in finals[:-1]]
    return SweepResult(epsilons=tuple(eps), trajectories=trajectories,
                       pairwise_distances=pairwise, distances_to_limit=to_limit)


# ---------------------------------------------------------------------------
# snapshot files (external interface)

SNAPSHOT_MAGIC = b"ZKSNAP1\n"


def write_snapshot(path, t: float, fld: Field) -> None:
    """Binary grid dump.

    Layout (little-endian): 8-byte magic "ZKSNAP1\\n"; float64 L, B;
    int64 nx, ny; float64 t; then (nx+2)*(ny+2) float64 node values in
    row-major order (x index outermost), boundary layer included.
    """
    g = fld.grid
    header = struct.pack("<ddqqd", g.L, g.B, g.nx, g.ny, t)
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(header)
        fh.write(np.ascontiguousarray(fld.values, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[float, Field]:
    with open(path, "rb") as fh:
        magic = fh.read(len(SNAPSHOT_MAGIC))
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a zklab snapshot")
        L, B, nx, ny, t = struct.unpack("<ddqqd", fh.read(40))
        count = (nx + 2) * (ny + 2)
        data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    grid = build_grid(L, B, int(nx), int(ny))
    values = data.reshape(nx + 2, ny + 2)
    return t, Field(grid, values)
