"""Pathwise simulation of the bilinear stochastic systems.

Discrete time iterates ``x(n+1) = A x(n) + sum_k B_k x(n) xi_{n+1,k}`` with
i.i.d. unit-variance scalar noise; continuous time applies Euler-Maruyama to
``dx = A x dt + sum_k B_k x dw_k``.  Empirical covariances are accumulated in
fixed-size path blocks, each drawing from its own substream keyed by
``(seed, block index)``, so estimates are reproducible bit-for-bit and blocks
could be farmed out to workers without changing the result (partial sums are
merged in block order).

The x and y paths of a pair share the noise draws and differ only in their
initial vectors; when the initial vectors coincide the paths coincide, and the
simulation exploits that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import propagate_continuous, propagate_discrete
from .kronsum import STABLE_STATUSES, StabilityStatus, StabilityVerdict, classify_stability, stability_threshold
from .matrices import SystemSpec, as_complex_vector

#: Paths per RNG substream; fixed so results do not depend on worker count.
BLOCK_PATHS = 16384

#: Steps of noise drawn per RNG call, and the overflow-check stride.
_STEP_CHUNK = 256

#: Default constant c in the continuous-mode tolerance max(4*SE, c*dt).
DT_BIAS_CONST = 10.0

#: Absolute floor (scaled by the exact value) that keeps zero-variance
#: deterministic entries from failing on arithmetic dust.
_ATOL_FLOOR = 1e-13

_NOISES = ("gaussian", "rademacher")


class SimulationOverflowError(RuntimeError):
    """A path left double-precision range; the whole estimate is abandoned.

    Dropping bad paths would bias unstable-case statistics, so the run fails
    instead, reporting the step and the number of offending paths.
    """

    def __init__(self, step, bad_paths: int):
        super().__init__(
            f"{bad_paths} path(s) overflowed by step {step}; estimate aborted"
        )
        self.step = step
        self.bad_paths = bad_paths


@dataclass(frozen=True)
class SimulationConfig:
    """Path count, seed, noise family, and horizon for one simulation run.

    ``horizon`` is a step count in discrete mode and a final time in
    continuous mode; ``dt`` applies to continuous mode only.
    """

    paths: int
    seed: int
    noise: str = "gaussian"
    dt: float | None = None
    horizon: float = 0

    def __post_init__(self):
        if self.paths < 2:
            raise ValueError(f"need at least 2 paths for standard errors, got {self.paths}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.noise not in _NOISES:
            raise ValueError(f"noise must be one of {_NOISES}, got {self.noise!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")


@dataclass(frozen=True)
class EmpiricalMoments:
    """Sample moments at each checkpoint, with per-entry standard errors."""

    mode: str
    checkpoints: tuple
    mean_outer: tuple[np.ndarray, ...]       # sample mean of x y* (d-by-d)
    std_error: tuple[np.ndarray, ...]        # per-entry SE of mean_outer (real d-by-d)
    second_moment: tuple[float, ...]         # sample mean of |x|^2
    second_moment_se: tuple[float, ...]
    paths: int
    dt: float | None = None


def _substream(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(block,)))


def _draw_noise(rng: np.random.Generator, kind: str, shape) -> np.ndarray:
    """Mean-0 variance-1 real draws: standard normal or Rademacher +/-1."""
    if kind == "gaussian":
        return rng.standard_normal(shape)
    return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0


def _run_block(rng, kind, n, x, y, same, a_step, noise_mats, noise_scale, slot_of, acc):
    """Advance one block of paths through n steps, accumulating at checkpoints.

    ``a_step`` is the per-step drift multiplier (A itself in discrete mode,
    I + dt*A for the Euler-Maruyama step); noise enters as
    ``noise_scale * B_k x zeta_k``.  Work buffers are reused across steps.
    Overflow is checked at every checkpoint and every chunk boundary;
    non-finite values persist through the linear updates, so nothing escapes
    detection.
    """
    if 0 in slot_of:
        acc.add(slot_of[0], x, x if same else y)
    nx = np.empty_like(x)
    tmp = np.empty_like(x)
    ny = None if same else np.empty_like(y)
    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while step < n:
            chunk = min(_STEP_CHUNK, n - step)
            zeta = _draw_noise(rng, kind, (chunk, len(noise_mats), x.shape[1]))
            if noise_scale != 1.0:
                zeta *= noise_scale
            for j in range(chunk):
                step += 1
                np.matmul(a_step, x, out=nx)
                for k, b in enumerate(noise_mats):
                    np.matmul(b, x, out=tmp)
                    tmp *= zeta[j, k]
                    nx += tmp
                if not same:
                    np.matmul(a_step, y, out=ny)
                    for k, b in enumerate(noise_mats):
                        np.matmul(b, y, out=tmp)
                        tmp *= zeta[j, k]
                        ny += tmp
                    y, ny = ny, y
                x, nx = nx, x
                if step in slot_of:
                    _check_finite(x, step)
                    if not same:
                        _check_finite(y, step)
                    acc.add(slot_of[step], x, x if same else y)
            _check_finite(x, step)
            if not same:
                _check_finite(y, step)


class _MomentAccumulator:
    """Running sums for E[x y*], its per-entry variance, and E|x|^2, E|x|^4."""

    def __init__(self, d: int, n_checkpoints: int):
        self.s1 = [np.zeros((d, d), dtype=np.complex128) for _ in range(n_checkpoints)]
        self.s2 = [np.zeros((d, d)) for _ in range(n_checkpoints)]
        self.r1 = [0.0] * n_checkpoints
        self.r2 = [0.0] * n_checkpoints

    def add(self, slot: int, x: np.ndarray, y: np.ndarray) -> None:
        self.s1[slot] += x @ y.conj().T
        ax2 = np.abs(x) ** 2
        ay2 = np.abs(y) ** 2
        self.s2[slot] += ax2 @ ay2.T
        sq = np.sum(ax2, axis=0)
        self.r1[slot] += float(np.sum(sq))
        self.r2[slot] += float(np.sum(sq ** 2))

    def finalize(self, mode, checkpoints, paths: int, dt) -> EmpiricalMoments:
        means, ses, r_mean, r_se = [], [], [], []
        for s1, s2, r1, r2 in zip(self.s1, self.s2, self.r1, self.r2):
            mean = s1 / paths
            var = np.maximum(s2 / paths - np.abs(mean) ** 2, 0.0) * (paths / (paths - 1))
            ses.append(np.sqrt(var / paths))
            means.append(mean)
            rm = r1 / paths
            rv = max(r2 / paths - rm ** 2, 0.0) * (paths / (paths - 1))
            r_mean.append(rm)
            r_se.append(math.sqrt(rv / paths))
        return EmpiricalMoments(
            mode=mode,
            checkpoints=tuple(checkpoints),
            mean_outer=tuple(means),
            std_error=tuple(ses),
            second_moment=tuple(r_mean),
            second_moment_se=tuple(r_se),
            paths=paths,
            dt=dt,
        )


def _initial_pair(spec: SystemSpec, u, v):
    u = as_complex_vector(u, "initial vector u")
    v = as_complex_vector(v, "initial vector v")
    if u.shape[0] != spec.d or v.shape[0] != spec.d:
        raise ValueError(
            f"initial vectors must have dimension {spec.d}, got {u.shape[0]} and {v.shape[0]}"
        )
    return u, v, bool(np.array_equal(u, v))


def _check_finite(x: np.ndarray, step) -> None:
    good = np.all(np.isfinite(x), axis=0)
    if not good.all():
        raise SimulationOverflowError(step, int(np.count_nonzero(~good)))


def simulate_discrete(
    spec: SystemSpec, u, v, cfg: SimulationConfig, checkpoints=None
) -> EmpiricalMoments:
    """Empirical E[x(n) y*(n)] and E|x(n)|^2 at the requested step checkpoints.

    The same noise draws feed the x and y recursions within each path.
    Deterministic for a fixed config; overflow aborts the estimate.
    """
    u, v, same = _initial_pair(spec, u, v)
    n = int(cfg.horizon)
    if n != cfg.horizon:
        raise ValueError(f"discrete horizon must be an integer step count, got {cfg.horizon}")
    if checkpoints is None:
        checkpoints = [n]
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if any(c < 0 or c > n for c in checkpoints):
        raise ValueError(f"checkpoints must lie in [0, {n}]")
    slot_of = {c: i for i, c in enumerate(checkpoints)}

    acc = _MomentAccumulator(spec.d, len(checkpoints))
    for block, start in enumerate(range(0, cfg.paths, BLOCK_PATHS)):
        bsize = min(BLOCK_PATHS, cfg.paths - start)
        rng = _substream(cfg.seed, block)
        x = np.tile(u[:, None], (1, bsize))
        y = x if same else np.tile(v[:, None], (1, bsize))
        _run_block(rng, cfg.noise, n, x, y, same, spec.a, spec.noise_mats, 1.0, slot_of, acc)
    return acc.finalize("discrete", checkpoints, cfg.paths, None)


def simulate_continuous(
    spec: SystemSpec, u, v, cfg: SimulationConfig, checkpoints=None
) -> EmpiricalMoments:
    """Euler-Maruyama estimate of E[x(t) y*(t)] and E|x(t)|^2 at time checkpoints.

    The update is ``x += A x dt + sum_k B_k x sqrt(dt) z_k`` with independent
    standard normal (or Rademacher) ``z``.  The scheme's covariance bias is
    O(dt); comparisons against exact propagation should allow max(4*SE, c*dt).
    Checkpoints must sit on the step grid.
    """
    u, v, same = _initial_pair(spec, u, v)
    if cfg.dt is None:
        raise ValueError("continuous simulation requires cfg.dt")
    horizon = float(cfg.horizon)
    steps = int(round(horizon / cfg.dt)) if horizon > 0 else 0
    dt = horizon / steps if steps > 0 else float(cfg.dt)
    if checkpoints is None:
        checkpoints = [horizon]
    times = sorted(set(float(t) for t in checkpoints))
    slot_of = {}
    for i, t in enumerate(times):
        idx = int(round(t / dt)) if dt > 0 else 0
        if idx < 0 or idx > steps or abs(idx * dt - t) > 1e-9 * max(1.0, horizon):
            raise ValueError(f"checkpoint {t} does not lie on the step grid (dt={dt})")
        slot_of[idx] = i

    acc = _MomentAccumulator(spec.d, len(times))
    a_step = np.eye(spec.d, dtype=np.complex128) + dt * spec.a
    sdt = math.sqrt(dt)
    for block, start in enumerate(range(0, cfg.paths, BLOCK_PATHS)):
        bsize = min(BLOCK_PATHS, cfg.paths - start)
        rng = _substream(cfg.seed, block)
        x = np.tile(u[:, None], (1, bsize))
        y = x if same else np.tile(v[:, None], (1, bsize))
        _run_block(rng, cfg.noise, steps, x, y, same, a_step, spec.noise_mats, sdt, slot_of, acc)
    return acc.finalize("continuous", times, cfg.paths, dt)


@dataclass(frozen=True)
class MomentComparison:
    """Entrywise comparison of empirical moments against exact propagation."""

    checkpoints: tuple
    exact: tuple[np.ndarray, ...]
    abs_diff: tuple[np.ndarray, ...]
    tolerance: tuple[np.ndarray, ...]
    entry_pass: tuple[np.ndarray, ...]
    all_passed: bool


def compare_to_exact(
    moments: EmpiricalMoments, spec: SystemSpec, u, v, dt_bias_const: float = DT_BIAS_CONST
) -> MomentComparison:
    """Check each empirical covariance entry against the exact value.

    Discrete tolerance is four standard errors; continuous adds the
    ``c * dt`` discretization-bias allowance.  A tiny floor scaled by the
    exact magnitude keeps deterministic zero-variance entries from failing on
    last-bit arithmetic differences.
    """
    if moments.mode == "discrete":
        traj = propagate_discrete(spec, u, v, int(max(moments.checkpoints)), route="direct")
        exact = [traj.values[int(c)] for c in moments.checkpoints]
    else:
        grid = [float(c) for c in moments.checkpoints]
        traj = propagate_continuous(spec, u, v, grid, route="kronecker")
        exact = list(traj.values)
    diffs, tols, passes = [], [], []
    ok = True
    for mean, se, ex in zip(moments.mean_outer, moments.std_error, exact):
        tol = 4.0 * se
        if moments.mode == "continuous":
            tol = np.maximum(tol, dt_bias_const * moments.dt)
        tol = np.maximum(tol, _ATOL_FLOOR * max(1.0, float(np.max(np.abs(ex)))))
        diff = np.abs(mean - ex)
        entry = diff <= tol
        ok = ok and bool(entry.all())
        diffs.append(diff)
        tols.append(tol)
        passes.append(entry)
    return MomentComparison(
        checkpoints=moments.checkpoints,
        exact=tuple(exact),
        abs_diff=tuple(diffs),
        tolerance=tuple(tols),
        entry_pass=tuple(passes),
        all_passed=ok,
    )


@dataclass(frozen=True)
class StabilityTrend:
    """Fitted growth of E|x|^2 at geometric checkpoints, beside the certified verdict.

    ``fitted_rate`` is a per-step ratio in discrete mode (threshold 1) and an
    exponential rate in continuous mode (threshold 0).  ``agrees`` records
    whether trend and verdict point the same way; sampling noise means this is
    informational, not a guarantee.
    """

    mode: str
    checkpoints: tuple
    second_moments: tuple[float, ...]
    std_errors: tuple[float, ...]
    fitted_rate: float | None
    rate_threshold: float
    verdict: StabilityVerdict
    agrees: bool | None


def _geometric_checkpoints(limit: int) -> list[int]:
    cps = []
    c = 1
    while c < limit:
        cps.append(c)
        c *= 2
    cps.append(limit)
    return sorted(set(cps))


def stability_probe(
    spec: SystemSpec, mode: str, cfg: SimulationConfig, u=None
) -> StabilityTrend:
    """Estimate the decay/growth rate of E|x|^2 and compare with the certified verdict."""
    if u is None:
        u = np.ones(spec.d, dtype=np.complex128) / math.sqrt(spec.d)
    if mode == "discrete":
        n = int(cfg.horizon)
        if n < 2:
            raise ValueError("discrete stability probe needs a horizon of at least 2 steps")
        cps = _geometric_checkpoints(n)
        moments = simulate_discrete(spec, u, u, cfg, checkpoints=cps)
        xs = np.asarray(cps, dtype=float)
    elif mode == "continuous":
        horizon = float(cfg.horizon)
        if cfg.dt is None or horizon <= 0:
            raise ValueError("continuous stability probe needs dt and a positive horizon")
        steps = int(round(horizon / cfg.dt))
        if steps < 2:
            raise ValueError("continuous stability probe needs at least 2 time steps")
        dt = horizon / steps
        idxs = _geometric_checkpoints(steps)
        cps = [i * dt for i in idxs]
        moments = simulate_continuous(spec, u, u, cfg, checkpoints=cps)
        xs = np.asarray(cps, dtype=float)
    else:
        raise ValueError(f"mode must be 'discrete' or 'continuous', got {mode!r}")

    r = np.asarray(moments.second_moment)
    verdict = classify_stability(spec, mode, allow_exact_fallback=True)
    threshold = stability_threshold(mode)
    if np.any(r <= 0):
        rate = None
        agrees = None
    else:
        slope = float(np.polyfit(xs, np.log(r), 1)[0])
        rate = math.exp(slope) if mode == "discrete" else slope
        if verdict.status is StabilityStatus.INDETERMINATE:
            agrees = None
        else:
            agrees = (rate < threshold) == (verdict.status in STABLE_STATUSES)
    return StabilityTrend(
        mode=mode,
        checkpoints=moments.checkpoints,
        second_moments=moments.second_moment,
        std_errors=moments.second_moment_se,
        fitted_rate=rate,
        rate_threshold=threshold,
        verdict=verdict,
        agrees=agrees,
    )
