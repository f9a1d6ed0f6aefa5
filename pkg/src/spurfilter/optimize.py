"""
Bounded one-dimensional maximization and the expansion-radius design loop.

A uniform scan brackets the best candidate, then Brent's method
(golden-section steps with parabolic interpolation) refines it. The probe
sequence depends only on the inputs, so reruns reproduce the history
exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .acoustics import AirProperties, MicrophoneModel
from .errors import ConfigurationError, GeometryError, ObjectiveError, SolverError, SpurFilterError
from .fem import PERTURBATION, LossMode, SolveConfig, Termination, filter_mesh, required_element_size, tl_at
from .geometry import FilterGeometry, build_profile, mesh_divisions, validate_geometry
from .tmm import DuctLoss, Topology, tl_tmm_at

_GOLDEN = 0.5 * (3.0 - math.sqrt(5.0))
F0_RANGE = (10e3, 100e3)


class Engine(str, Enum):
    FEM = "FEM"
    TMM = "TMM"


@dataclass
class MaximizeResult:
    """Outcome of :func:`maximize_scalar`; unpacks as ``(x_star, f_star, history)``."""

    x_star: float
    f_star: float
    history: list
    converged: bool
    flat: bool

    @property
    def evaluations(self) -> int:
        return len(self.history)

    def __iter__(self):
        return iter((self.x_star, self.f_star, self.history))


def maximize_scalar(objective, bounds, rel_tol: float = 1e-5, scan_points: int = 16,
                    budget: int = 200, jobs: int = 1) -> MaximizeResult:
    """
    Maximize ``objective`` over the closed interval ``bounds``.

    Parameters
    ----------
    objective : callable
        Function of one float. Must be reentrant when ``jobs > 1``.
    bounds : (float, float)
        ``lo < hi``.
    rel_tol : float
        Target accuracy of the argmax as a fraction of ``hi - lo``.
    scan_points : int
        Points of the uniform bracketing scan, endpoints included.
    budget : int
        Maximum number of objective evaluations.
    jobs : int
        Worker threads for the scan; the refinement is sequential.

    Raises
    ------
    ObjectiveError
        If the objective returns NaN or an infinity.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigurationError(f"bounds must satisfy lo < hi, got {bounds!r}")
    if not rel_tol >= 1e-12:
        raise ConfigurationError("rel_tol must be >= 1e-12")
    if scan_points < 3:
        raise ConfigurationError("scan_points must be >= 3")
    if budget < scan_points:
        raise ConfigurationError("budget must cover the bracketing scan")

    history = []

    def record(x, y):
        if not math.isfinite(y):
            raise ObjectiveError(x, y)
        history.append((x, y))
        return y

    try:
        return _maximize(objective, lo, hi, rel_tol, scan_points, budget, jobs, history, record)
    except SpurFilterError as exc:
        # keep the probes made so far for the audit trail
        exc.history = list(history)
        raise


def _maximize(objective, lo, hi, rel_tol, scan_points, budget, jobs, history, record):
    span = hi - lo
    xs = [lo + span * i / (scan_points - 1) for i in range(scan_points)]
    xs[-1] = hi
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            ys = list(pool.map(lambda x: float(objective(x)), xs))
    else:
        ys = [float(objective(x)) for x in xs]
    for x, y in zip(xs, ys):
        record(x, y)

    best = max(range(scan_points), key=lambda i: (ys[i], -i))
    scale = max(1.0, max(abs(y) for y in ys))
    if max(ys) - min(ys) <= 1e-12 * scale:
        return MaximizeResult(xs[best], ys[best], history, converged=True, flat=True)

    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, scan_points - 1)]
    converged = _brent(lambda x: -record(x, float(objective(x))), a, b, xs[best], -ys[best],
                       rel_tol * span / 3.0, budget - scan_points)
    x_star, f_star = max(history, key=lambda item: item[1])
    return MaximizeResult(x_star, f_star, history, converged=converged, flat=False)


def _brent(g, a, b, x, fx, tol, budget) -> bool:
    """Minimize ``g`` on ``[a, b]`` from the interior guess ``x``; True on convergence."""
    w = v = x
    fw = fv = fx
    d = e = 0.0
    for it in range(budget + 1):
        xm = 0.5 * (a + b)
        tol1 = tol + 1e-15 * abs(x)
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            return True
        if it == budget:
            return False
        golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            e_prev, e = e, d
            if abs(p) < abs(0.5 * q * e_prev) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = math.copysign(tol1, xm - x)
                golden = False
        if golden:
            e = (a - x) if x >= xm else (b - x)
            d = _GOLDEN * e
        u = x + d if abs(d) >= tol1 else x + math.copysign(tol1, d)
        fu = g(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return False


@dataclass
class DesignResult:
    """Optimized expansion radius with the full probe history ``[(a1, tl), ...]``."""

    a1_star: float
    tl_star: float
    evaluations: int
    converged: bool
    history: list
    f0: float
    engine: Engine
    bounds: tuple
    flat: bool = False
    geometry: FilterGeometry | None = None
    notes: list = field(default_factory=list)

    def history_csv(self) -> str:
        lines = ["a1_m,tl_db"]
        lines += [f"{a!r},{t!r}" for a, t in self.history]
        return "\n".join(lines) + "\n"


def _tmm_loss(cfg: SolveConfig) -> DuctLoss:
    return DuctLoss.ZWIKKER_KOSTEN if cfg.loss_mode is LossMode.BOUNDARY_LAYER else DuctLoss.NONE


def design_filter(f0: float, template: FilterGeometry, bounds, air: AirProperties,
                  mic: MicrophoneModel | None, cfg: SolveConfig, engine: Engine = Engine.FEM,
                  rel_tol: float = 1e-5, scan_points: int = 16, budget: int = 200,
                  jobs: int = 1) -> DesignResult:
    """
    Choose ``a1`` within ``bounds`` to maximize the TL at ``f0``.

    The FEM engine keeps the mesh cell counts of the widest candidate for
    every probe so that the objective varies smoothly with ``a1``. A probe
    whose solve fails is repeated once at ``f0 * (1 + 1e-9)`` before the
    design aborts with SolverError.
    """
    engine = Engine(engine)
    validate_geometry(template, require_a1=False)
    if not F0_RANGE[0] <= f0 <= F0_RANGE[1]:
        raise ConfigurationError(f"f0={f0:g} Hz outside [{F0_RANGE[0]:g}, {F0_RANGE[1]:g}] Hz")
    lo, hi = float(bounds[0]), float(bounds[1])
    a0 = template.a0
    if not (lo >= a0 * (1 - 1e-12) and hi <= 10.0 * a0 * (1 + 1e-12) and lo < hi):
        raise GeometryError(f"a1 bounds [{lo:g}, {hi:g}] m must lie within [a0, 10*a0] = [{a0:g}, {10 * a0:g}] m")
    lo = max(lo, a0)
    if cfg.nodal_plane_termination is Termination.MIC_IMPEDANCE and mic is None:
        raise ConfigurationError("MIC_IMPEDANCE termination requires a microphone model")
    load = mic if cfg.nodal_plane_termination is Termination.MIC_IMPEDANCE else None
    notes = []

    if engine is Engine.FEM:
        f_mesh = f0 * (1.0 + PERTURBATION)
        h = required_element_size(air, f_mesh, cfg)
        widest = mesh_divisions(build_profile(template.with_a1(hi)), h)

        def evaluate(a1, f):
            geom = template.with_a1(a1)
            # the straight duct (a1 == a0) splits its height differently
            own = mesh_divisions(build_profile(geom), h)
            divisions = tuple(max(w, n) for w, n in zip(widest, own))
            mesh = filter_mesh(geom, air, cfg, f_mesh, divisions=divisions)
            return tl_at(geom, air, load, cfg, f, mesh=mesh)
    else:
        loss = _tmm_loss(cfg)

        def evaluate(a1, f):
            return tl_tmm_at(template.with_a1(a1), air, load, f, loss, Topology.FOLDED)

    def objective(a1):
        try:
            return evaluate(a1, f0)
        except SolverError as first:
            f2 = f0 * (1.0 + PERTURBATION)
            try:
                value = evaluate(a1, f2)
            except SolverError as second:
                raise SolverError(f"probe a1={a1:.9g} m failed twice: {first}; {second}") from None
            notes.append(f"a1={a1!r}: perturbed to {f2:.12g} Hz")
            return value

    res = maximize_scalar(objective, (lo, hi), rel_tol=rel_tol, scan_points=scan_points,
                          budget=budget, jobs=jobs)
    return DesignResult(
        a1_star=res.x_star, tl_star=res.f_star, evaluations=res.evaluations,
        converged=res.converged, history=res.history, f0=f0, engine=engine,
        bounds=(lo, hi), flat=res.flat, geometry=template.with_a1(res.x_star), notes=notes,
    )
