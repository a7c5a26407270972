"""Named beam problems, config plumbing and CSV artifact emission.

The built-in examples cover the stiff forced beam (``example1``), its
free decay with the long-time energy asymptote (``example1_free``), the
variable-damping beam against an undamped closed form (``example2`` and,
for orders above one, ``example3``) and the quadrature convergence study
(``convergence``).  Everything a run resolves — coefficient expressions,
contour parameters, per-window certificates — lands in '#'-metadata
headers so an artifact alone is enough to reproduce the run.
"""

import io
import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np
import tomli

from .chebseries import chebcoeffs, l2_norm
from .contour import hyperbolic_params, parabolic_params, TimeWindow
from .csvio import content_hash, format_float, write_csv
from .expressions import expr_callable, parse_expr
from .pencil import BeamPencil, Forcing, InitialData, UndampedError, power_z
from .resolvent_bounds import (
    BoundParams,
    asymptote_angle,
    r_star,
    select_parabola_delta,
    select_sector_delta,
)
from .solver import (
    energy_asymptote,
    evaluate,
    solve_laplace,
    solve_time_range,
)

__all__ = [
    "Artifact",
    "EXAMPLE_NAMES",
    "ProblemConfig",
    "RunResult",
    "config_from_toml",
    "config_to_toml",
    "emit_contour_dump",
    "emit_region_curves",
    "run_config",
    "run_example",
]

EXAMPLE_NAMES = (
    "example1",
    "example1_free",
    "example2",
    "example3",
    "convergence",
)

# Dimensionless constants of the stiff physical beam (rho_A = 0.818,
# E0 = 5.04e7, E1 = 2.27e5, I = 8.33e-6, unit length and time scales; see
# pencil.nondimensionalize).
A_EXAMPLE1 = "821.18728606356974"
B_EXAMPLE1 = "3.6986014669926649"

_EXAMPLE2_DAMPING = "1.01+tanh(10*x)"
_EXAMPLE2_PROFILE = "(1+x)^2*(1-x)^2"
_EXAMPLE2_FORCING = "24-pi^2*(1+x)^2*(1-x)^2"


@dataclass
class ProblemConfig:
    """One solver run: coefficients as mini-language strings plus knobs."""

    label: str = "problem"
    a: str = "1"
    b: str = "1"
    rho: str = "1"
    nu: float = 0.5
    convention: str = "caputo"
    bc_left: str = "clamped"
    bc_right: str = "clamped"
    y0: str = ""
    y1: str = ""
    forcing_kind: str = "zero"
    forcing_omega: float = 0.0
    forcing_amplitude: float = 1.0
    forcing_profile: str = ""
    t0: float = 1.0
    t1: float = 10.0
    num_times: int = 41
    time_spacing: str = "linear"
    target_accuracy: float = 1e-8
    contour: str = "auto"
    N: int = 0
    delta: float = 0.0
    nx: int = 101

    def times(self):
        if self.time_spacing == "linear":
            return np.linspace(self.t0, self.t1, self.num_times)
        if self.time_spacing == "log":
            return np.geomspace(self.t0, self.t1, self.num_times)
        raise ValueError(f"unknown time_spacing {self.time_spacing!r}")

    def xgrid(self):
        return np.linspace(-1.0, 1.0, self.nx)


_STRING_FIELDS = {
    "label", "a", "b", "rho", "convention", "bc_left", "bc_right",
    "y0", "y1", "forcing_kind", "forcing_profile", "time_spacing",
    "contour",
}
_INT_FIELDS = {"num_times", "N", "nx"}


def config_from_toml(text):
    """Parse flat ``key = value`` TOML into a ProblemConfig.

    Expression values are quoted strings; unknown keys are an error (they
    are always a typo of a known knob).
    """
    data = tomli.loads(text)
    known = {f.name for f in fields(ProblemConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _STRING_FIELDS:
            kwargs[key] = str(value)
        elif key in _INT_FIELDS:
            kwargs[key] = int(value)
        else:
            kwargs[key] = float(value)
    return ProblemConfig(**kwargs)


def config_to_toml(config):
    """Canonical flat TOML (17-digit floats); the hash input."""
    out = io.StringIO()
    for f in fields(ProblemConfig):
        value = getattr(config, f.name)
        if f.name in _STRING_FIELDS:
            out.write(f'{f.name} = "{value}"\n')
        elif f.name in _INT_FIELDS:
            out.write(f"{f.name} = {int(value)}\n")
        else:
            out.write(f"{f.name} = {format_float(value)}\n")
    return out.getvalue()


def _coefficient(src):
    """Expression string -> vectorized callable, normalized via the AST."""
    return expr_callable(parse_expr(src))


def build_problem(config):
    """``(pencil, init, forcing)`` for a config.

    Raises UndampedError when ``b`` is identically zero (callers branch
    to a closed-form reference) and ValueError for non-positive
    coefficients or malformed expressions.
    """
    pencil = BeamPencil(
        a=_coefficient(config.a),
        b=_coefficient(config.b),
        rho=_coefficient(config.rho),
        nu=config.nu,
        bc_left=config.bc_left,
        bc_right=config.bc_right,
        fractional_type=config.convention,
    )
    init = InitialData(
        y0=_coefficient(config.y0) if config.y0 else None,
        y1=_coefficient(config.y1) if config.y1 else None,
    )
    if config.forcing_kind == "zero":
        forcing = Forcing()
    else:
        forcing = Forcing(
            kind=config.forcing_kind,
            omega=config.forcing_omega,
            amplitude=config.forcing_amplitude,
            profile=_coefficient(config.forcing_profile),
        )
    return pencil, init, forcing


# -- artifacts -----------------------------------------------------------------


@dataclass(frozen=True)
class Artifact:
    """One rendered CSV: file name plus its full text."""

    name: str
    text: str


@dataclass
class RunResult:
    """Outcome of a front-end operation.

    ``ok`` means every certificate was met: each window's adaptive
    quadrature loop reached its target and every node solve passed its
    residual budget (parabolic nodes outside the certified region pass
    by the documented residual/tail heuristic and are counted in
    ``summary``, not failed).
    """

    ok: bool
    summary: dict
    artifacts: list = field(default_factory=list)


def _config_metadata(config):
    meta = {"label": config.label,
            "config_hash": content_hash(config_to_toml(config))}
    for f in fields(ProblemConfig):
        if f.name == "label":
            continue
        meta[f.name] = getattr(config, f.name)
    return meta


def _window_metadata(meta, solves, target):
    certified = True
    meta["windows"] = len(solves)
    for i, ls in enumerate(solves, start=1):
        quad = ls.quadrature_estimate
        quad_ok = quad is None or quad <= target / 2.0
        certified = certified and quad_ok
        meta[f"window_{i}"] = (
            f"t0={format_float(ls.win.t0)} t1={format_float(ls.win.t1)} "
            f"kind={ls.contour.kind} N={ls.contour.N} "
            f"eta={format_float(ls.eta)} "
            f"quadrature_estimate={'none' if quad is None else format_float(quad)} "
            f"uncertified_nodes={int(ls.node_uncertified.sum())} "
            f"linear_solves={ls.solve_count}"
        )
    meta["all_certificates_met"] = certified
    return certified


def _solution_rows(times, Y, Yt):
    for i, t in enumerate(times):
        yield [t, *Y[i], *Yt[i]]


def _solution_artifact(config, meta, times, xg, Y, Yt, name=None):
    columns = (["t"] + [f"y{i}" for i in range(len(xg))]
               + [f"yt{i}" for i in range(len(xg))])
    meta = dict(meta)
    meta["xgrid"] = xg
    text = write_csv(None, meta, columns, _solution_rows(times, Y, Yt))
    return Artifact(name or f"{config.label}_solution.csv", text)


def _energy_artifact(config, meta, times, energies, asym, name=None):
    meta = dict(meta)
    columns = ["t", "E"]
    if asym is not None:
        meta["e1"] = asym.e1
        meta["exponent"] = asym.exponent
        meta["correction_exponent"] = asym.correction_exponent
        columns.append("asymptote")
        rows = [[t, e, asym.e1 * t**asym.exponent]
                for t, e in zip(times, energies)]
    else:
        rows = [[t, e] for t, e in zip(times, energies)]
    text = write_csv(None, meta, columns, rows)
    return Artifact(name or f"{config.label}_energy.csv", text)


def _reference_artifact(config, profile_src, omega, meta):
    """Closed-form separable reference ``profile(x) cos(omega t)``."""
    times = config.times()
    xg = config.xgrid()
    prof = _coefficient(profile_src)(xg)
    Y = np.cos(omega * times)[:, None] * prof[None, :]
    Yt = -omega * np.sin(omega * times)[:, None] * prof[None, :]
    meta = dict(meta)
    meta["reference_profile"] = profile_src
    meta["reference_omega"] = omega
    meta["xgrid"] = xg
    columns = (["t"] + [f"y{i}" for i in range(len(xg))]
               + [f"yt{i}" for i in range(len(xg))])
    text = write_csv(None, meta, columns, _solution_rows(times, Y, Yt))
    return Artifact(f"{config.label}_reference.csv", text)


def run_config(config, threads=None, reference=None):
    """Solve one config and render its solution + energy artifacts.

    ``reference``, if given, is a callable ``t -> coefficient row`` of a
    closed-form solution; the summary then reports the max-over-times
    L2 deviation of the computed solution from it.

    An identically-zero damping expression is rejected by the pencil; if
    the config is of the example-2 family (it declares the matching
    closed form), the reference curve is emitted instead of a solve.
    """
    meta = _config_metadata(config)
    try:
        pencil, init, forcing = build_problem(config)
    except UndampedError:
        if (config.forcing_profile == _EXAMPLE2_FORCING
                and config.y0 == _EXAMPLE2_PROFILE):
            meta["undamped"] = True
            art = _reference_artifact(config, _EXAMPLE2_PROFILE, np.pi, meta)
            return RunResult(
                ok=True,
                summary={"label": config.label, "undamped_closed_form": True},
                artifacts=[art],
            )
        raise
    times = config.times()
    xg = config.xgrid()
    ts, solves = solve_time_range(
        pencil, init, forcing, times, config.target_accuracy,
        contour_kind=config.contour, N=config.N or None,
        delta=config.delta or None, threads=threads,
    )
    certified = _window_metadata(meta, solves, config.target_accuracy)
    Y = ts.y_values(xg)
    Yt = ts.y_t_values(xg)

    asym = None
    if (config.forcing_kind == "zero" and not config.y1
            and 0.0 < config.nu < 1.0):
        try:
            asym = energy_asymptote(pencil, init)
        except ValueError:
            asym = None

    summary = {
        "label": config.label,
        "nu": config.nu,
        "windows": [
            {
                "t0": ls.win.t0,
                "t1": ls.win.t1,
                "kind": ls.contour.kind,
                "N": ls.contour.N,
                "eta": ls.eta,
                "quadrature_estimate": ls.quadrature_estimate,
                "uncertified_nodes": int(ls.node_uncertified.sum()),
            }
            for ls in solves
        ],
        "all_certificates_met": certified,
    }
    if reference is not None:
        dev = 0.0
        for i, t in enumerate(times):
            ref_row = np.asarray(reference(t))
            m = max(len(ref_row), ts.y.shape[1])
            diff = np.zeros(m, dtype=complex)
            diff[: ts.y.shape[1]] = ts.y[i]
            diff[: len(ref_row)] -= ref_row
            dev = max(dev, l2_norm(diff, lam=0))
        meta["max_l2_deviation_from_reference"] = dev
        summary["max_l2_deviation_from_reference"] = dev

    arts = [
        _solution_artifact(config, meta, times, xg, Y, Yt),
        _energy_artifact(config, meta, times, ts.energy, asym),
    ]
    return RunResult(ok=certified, summary=summary, artifacts=arts)


# -- closed-form references ----------------------------------------------------


def example1_steady_reference(config):
    """Steady response ``Im[e^{i omega t} / D(i omega)] sin(pi (x-1))``.

    ``D(z) = z^2 + pi^4 (a + b z^nu)`` is the modal symbol of the
    constant-coefficient beam on the forcing profile (an eigenfunction of
    the fourth derivative); the transform of ``sin(omega t)`` leaves the
    conjugate pole pair whose residues sum to exactly this curve.
    """
    a = float(parse_expr(config.a).value)
    b = float(parse_expr(config.b).value)
    omega = config.forcing_omega
    D = ((1j * omega) ** 2
         + np.pi**4 * (a + b * power_z(1j * omega, config.nu)))
    prof = chebcoeffs(lambda x: np.sin(np.pi * (x - 1.0)))
    amp = config.forcing_amplitude

    def coeff_row(t):
        return amp * np.imag(np.exp(1j * omega * t) / D) * prof

    return coeff_row


# -- the named examples --------------------------------------------------------


def _example1_config(**overrides):
    base = ProblemConfig(
        label="example1",
        a=A_EXAMPLE1,
        b=B_EXAMPLE1,
        rho="1",
        nu=0.64,
        bc_left="simply_supported",
        bc_right="simply_supported",
        forcing_kind="sin",
        forcing_omega=5.0,
        forcing_profile="sin(pi*(x-1))",
        t0=0.1,
        t1=5.0,
        num_times=20,
        time_spacing="linear",
        target_accuracy=1e-9,
        contour="auto",
    )
    return replace(base, **overrides)


def _example1_free_config(nu, **overrides):
    base = ProblemConfig(
        label=f"example1_free_nu{nu:g}",
        a=A_EXAMPLE1,
        b=B_EXAMPLE1,
        rho="1",
        nu=nu,
        bc_left="simply_supported",
        bc_right="simply_supported",
        y0="sin(2*pi*x)^2*(1+x)*(1-x)^2",
        t0=1.0,
        t1=1e4,
        num_times=81,
        time_spacing="log",
        target_accuracy=1e-9,
        contour="auto",
    )
    return replace(base, **overrides)


def _example2_config(nu, label="example2", **overrides):
    base = ProblemConfig(
        label=f"{label}_nu{nu:g}",
        a="1",
        b=_EXAMPLE2_DAMPING,
        rho="1",
        nu=nu,
        bc_left="clamped",
        bc_right="clamped",
        y0=_EXAMPLE2_PROFILE,
        forcing_kind="cos",
        forcing_omega=float(np.pi),
        forcing_profile=_EXAMPLE2_FORCING,
        t0=0.05,
        t1=6.0,
        num_times=60,
        time_spacing="linear",
        target_accuracy=1e-8,
        contour="auto",
    )
    return replace(base, **overrides)


def convergence_study_problem(nu=0.8):
    """The variable-coefficient study problem used by ``convergence``."""
    config = ProblemConfig(
        label=f"convergence_nu{nu:g}",
        a="cosh(x)",
        b="sin(pi*x)+2",
        rho="tanh(x)+2",
        nu=nu,
        bc_left="clamped",
        bc_right="simply_supported",
        y0="sin(2*pi*x)*(1-x^2)*(1-x)",
        forcing_kind="cos",
        forcing_omega=20.0,
        forcing_profile="sin(pi*x)",
        t0=1.0,
        t1=10.0,
        target_accuracy=1e-9,
    )
    return config


def _max_l2_difference(ts_a, ts_b):
    m = max(ts_a.y.shape[1], ts_b.y.shape[1])
    best = 0.0
    for i in range(ts_a.y.shape[0]):
        diff = np.zeros(m, dtype=complex)
        diff[: ts_a.y.shape[1]] = ts_a.y[i]
        diff[: ts_b.y.shape[1]] -= ts_b.y[i]
        best = max(best, l2_norm(diff, lam=0))
    return best


def run_convergence(nu=0.8, N_values=(20, 40, 60, 80, 120, 160, 240),
                    N_reference=480, accuracy=1e-9, threads=None):
    """Error-vs-N table for both contour families on the study problem.

    The error of the N-node run is estimated against a fixed larger-N
    reference of the same family: max over 21 times in the window of the
    L2 norm of the difference.
    """
    config = convergence_study_problem(nu)
    pencil, init, forcing = build_problem(config)
    win = TimeWindow(config.t0, config.t1)
    times = np.linspace(config.t0, config.t1, 21)

    errors = {}
    for kind in ("hyperbolic", "parabolic"):
        ref = solve_laplace(pencil, init, forcing, win, accuracy,
                            contour_kind=kind, N=N_reference,
                            threads=threads)
        ts_ref = evaluate(ref, times)
        errs = []
        for N in N_values:
            ls = solve_laplace(pencil, init, forcing, win, accuracy,
                               contour_kind=kind, N=N, threads=threads)
            errs.append(_max_l2_difference(evaluate(ls, times), ts_ref))
        errors[kind] = errs

    meta = _config_metadata(config)
    meta["N_reference"] = N_reference
    meta["accuracy"] = accuracy
    rows = [[N, errors["hyperbolic"][i], errors["parabolic"][i]]
            for i, N in enumerate(N_values)]
    text = write_csv(None, meta, ["N", "hyperbolic", "parabolic"], rows)
    summary = {
        "label": config.label,
        "N": list(N_values),
        "hyperbolic": errors["hyperbolic"],
        "parabolic": errors["parabolic"],
        "all_certificates_met": True,
    }
    return RunResult(ok=True, summary=summary,
                     artifacts=[Artifact("convergence.csv", text)])


# -- region curves and contour dump --------------------------------------------


def emit_region_curves(nu, M, eps_values=(0.0, 1.0, 5.0, 10.0),
                       n_theta=2000):
    """Sample ``r*(theta, eps)`` on the admissible upper-half rays.

    Columns: theta then one radius column per eps.  theta runs from just
    above pi/2 to just below the admissible limit (the asymptote angle
    for nu < 1, pi otherwise), so unbounded curves are represented by
    large finite radii near the end of the grid.
    """
    bp = BoundParams(M=M, nu=nu)
    hi = min(np.pi, asymptote_angle(nu))
    guard = 1e-4
    thetas = np.linspace(np.pi / 2.0 + guard, hi - guard, n_theta)
    columns = ["theta"] + [f"r_eps{eps:g}" for eps in eps_values]
    rows = []
    for theta in thetas:
        rows.append([theta] + [r_star(bp, theta, eps) for eps in eps_values])
    meta = {
        "label": "region_curves",
        "nu": nu,
        "M": M,
        "eps_values": list(eps_values),
    }
    text = write_csv(None, meta, columns, rows)
    return RunResult(ok=True, summary={"label": "region_curves", "nu": nu,
                                       "M": M,
                                       "all_certificates_met": True},
                     artifacts=[Artifact("regions.csv", text)])


def emit_contour_dump(config, threads=None):
    """Contour nodes/weights the config's first window would use.

    Columns ``(j, Re z_j, Im z_j, Re w_j, Im w_j)``; the contour is
    derived exactly as ``solve`` would (region selection included), with
    ``config.N`` honored when nonzero (default 48 for a plottable dump).
    """
    pencil, _, _ = build_problem(config)
    bp = BoundParams.from_pencil(pencil)
    win = TimeWindow(config.t0, min(config.t1, 10.0 * config.t0))
    beta = 2.0
    kind = config.contour
    if kind == "auto":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            probe = select_sector_delta(bp, beta / win.t1)
        kind = ("hyperbolic" if probe < np.pi / 2.0 - 0.12
                else "parabolic")
    N = config.N or 48
    if kind == "hyperbolic":
        delta = config.delta or select_sector_delta(bp, beta / win.t1)
        contour = hyperbolic_params(delta, beta / win.t1, win, beta, N)
    else:
        if config.delta:
            delta, sigma = config.delta, 0.0
        else:
            delta, sigma = select_parabola_delta(bp, win.t0)
        contour = parabolic_params(delta, sigma, win, N,
                                   min(config.target_accuracy / 10.0, 1e-4))
    meta = _config_metadata(config)
    meta["kind"] = contour.kind
    meta["contour_N"] = contour.N
    meta["h"] = contour.h
    meta["mu"] = contour.mu
    meta["sigma"] = contour.sigma
    meta["delta"] = delta
    text = write_csv(None, meta, ["j", "re_z", "im_z", "re_w", "im_w"],
                     contour.rows())
    return RunResult(ok=True,
                     summary={"label": config.label, "kind": contour.kind,
                              "N": contour.N,
                              "all_certificates_met": True},
                     artifacts=[Artifact("contour.csv", text)])


# -- the example driver --------------------------------------------------------


def _merge(result, piece):
    result.ok = result.ok and piece.ok
    result.artifacts.extend(piece.artifacts)
    result.summary["runs"].append(piece.summary)


def run_example(name, nu=None, omega=None, accuracy=None, contour=None,
                N=None, t0=None, t1=None, b=None, delta=None, threads=None):
    """Run a named example with optional overrides; no disk access.

    Returns a RunResult whose artifacts are the CSVs the run produced;
    ``ok`` is False as soon as any sub-run misses a certificate.
    """
    if name not in EXAMPLE_NAMES:
        raise ValueError(
            f"unknown example {name!r}; expected one of {EXAMPLE_NAMES}"
        )
    overrides = {}
    if accuracy is not None:
        overrides["target_accuracy"] = accuracy
    if contour is not None:
        overrides["contour"] = contour
    if N is not None:
        overrides["N"] = N
    if t0 is not None:
        overrides["t0"] = t0
    if t1 is not None:
        overrides["t1"] = t1
    if b is not None:
        overrides["b"] = b
    if delta is not None:
        overrides["delta"] = delta

    result = RunResult(ok=True, summary={"example": name, "runs": []})

    if name == "example1":
        for om in ([omega] if omega is not None else [5.0, 25.0, 100.0]):
            config = _example1_config(forcing_omega=float(om), **overrides)
            config.label = f"example1_omega{om:g}"
            if nu is not None:
                config.nu = nu
            piece = run_config(config, threads=threads,
                               reference=example1_steady_reference(config))
            _merge(result, piece)
    elif name == "example1_free":
        for nv in ([nu] if nu is not None else [0.32, 0.64]):
            config = _example1_free_config(float(nv), **overrides)
            _merge(result, run_config(config, threads=threads))
    elif name in ("example2", "example3"):
        default_nus = [0.5, 0.7, 1.0] if name == "example2" else [1.2, 1.8]
        for nv in ([nu] if nu is not None else default_nus):
            config = _example2_config(float(nv), label=name, **overrides)
            _merge(result, run_config(config, threads=threads))
        if name == "example2" and b is None:
            ref_config = _example2_config(1.0, label=name, **overrides)
            ref_config.label = "example2"
            meta = _config_metadata(ref_config)
            meta["undamped"] = True
            result.artifacts.append(
                _reference_artifact(ref_config, _EXAMPLE2_PROFILE, np.pi,
                                    meta))
    else:
        kwargs = {}
        if accuracy is not None:
            kwargs["accuracy"] = accuracy
        if N is not None:
            kwargs["N_reference"] = N
        piece = run_convergence(nu=0.8 if nu is None else nu,
                                threads=threads, **kwargs)
        _merge(result, piece)
    result.summary["all_certificates_met"] = result.ok
    return result
