"""Command-line front end: JSON in, verdict/CSV/plot files out.

All numerical work happens in the library modules; this layer only
parses inputs, seeds one random generator per invocation, dispatches,
and serialises results.  Exit codes: 0 success, 1 negative verdict under
--assert, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field

import click
import numpy as np

from . import dwshell as dw
from . import geometry as geo
from . import lmi, mrn
from . import profile as prof
from .dwshell import ComplexMatrix
from .lti import (
    FrequencyGrid,
    StateSpaceSystem,
    rs_check_general,
    rs_check_named,
    rs_check_theta,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3


class InputError(Exception):
    pass


@dataclass
class CliConfig:
    command: str
    options: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.options.get("seed") or 0)


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {what} from {path}: {exc}") from exc


def _load_matrix(path: str) -> np.ndarray:
    d = _load_json(path, "matrix")
    try:
        return ComplexMatrix.from_dict(d).m
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad matrix file {path}: {exc}") from exc


def _load_system(path: str) -> StateSpaceSystem:
    d = _load_json(path, "state-space system")
    try:
        return StateSpaceSystem.from_dict(d)
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad state-space file {path}: {exc}") from exc


def _load_region(path: str) -> geo.Region:
    d = _load_json(path, "region")
    try:
        return geo.region_from_dict(d)
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad region file {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _shape_params(opt) -> dict:
    return {
        "gamma": opt.get("gamma"),
        "alpha": opt.get("alpha"),
        "beta": opt.get("beta"),
    }


def dispatch(config: CliConfig) -> int:
    """Run one analysis command; returns the process exit status."""
    try:
        handler = _HANDLERS[config.command]
    except KeyError:
        raise InputError(f"unknown command {config.command!r}")
    try:
        return handler(config.options)
    except InputError:
        raise
    except lmi.SolverFailure as exc:
        click.echo(f"solver failure: {exc}", err=True)
        return EXIT_SOLVER
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _cmd_srg(opt) -> int:
    m = _load_matrix(opt["matrix"])
    rng = np.random.default_rng(int(opt.get("seed") or 0))
    pts = dw.srg_theta_sample(
        m,
        float(opt.get("theta") or 0.0),
        int(opt.get("samples") or 4096),
        int(opt.get("directions") or 1024),
        rng=rng,
    )
    lines = ["re,im"] + [f"{float(p.real)!r},{float(p.imag)!r}" for p in pts]
    _write_text(opt.get("out"), "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_dwshell(opt) -> int:
    m = _load_matrix(opt["matrix"])
    rng = np.random.default_rng(int(opt.get("seed") or 0))
    cloud = dw.dw_sample(
        m,
        int(opt.get("samples") or 4096),
        int(opt.get("directions") or 1024),
        rng=rng,
    )
    _write_text(opt.get("out"), cloud.to_csv())
    if opt.get("plot"):
        _plot_cloud(cloud, opt["plot"])
    return EXIT_OK


def _cmd_mrn(opt) -> int:
    m = _load_matrix(opt["matrix"])
    rng = np.random.default_rng(int(opt.get("seed") or 0))
    result: dict
    if opt.get("shape"):
        verdict = mrn.mrn_check_named(m, opt["shape"], rng=rng, **_shape_params(opt))
    elif opt.get("region"):
        region = _load_region(opt["region"])
        spec = mrn.UncertaintySpec(
            region, m.shape[0], opt.get("mode") or "theta",
            float(opt.get("theta") or 0.0),
        )
        if spec.mode == "general":
            verdict = mrn.mrn_check_general(m, spec, rng=rng)
        else:
            verdict = mrn.mrn_check_theta(m, spec, rng=rng)
    else:
        raise InputError("mrn needs either --shape or --region")
    result = verdict.to_dict()
    if opt.get("samples"):
        if not opt.get("region") and opt.get("shape"):
            region = _shape_region(opt)
            spec = mrn.UncertaintySpec(
                region, m.shape[0], "theta", _shape_axis(opt)
            )
        bf = mrn.mrn_bruteforce(m, spec, n_samples=int(opt["samples"]), rng=rng)
        result["bruteforce"] = bf.to_dict()
    _write_text(opt.get("out"), json.dumps(result, indent=1) + "\n")
    if opt.get("assert_") and not verdict.holds:
        return EXIT_NEGATIVE
    return EXIT_OK


def _shape_region(opt) -> geo.Region:
    shape = opt["shape"]
    if shape == "disc":
        return geo.Disc(float(opt["gamma"]))
    if shape == "cone":
        return geo.Cone(float(opt["alpha"]), float(opt["beta"]))
    if shape == "sector":
        return geo.Sector(float(opt["gamma"]), float(opt["alpha"]), float(opt["beta"]))
    raise InputError(f"unknown shape {shape!r}")


def _shape_axis(opt) -> float:
    if opt["shape"] == "disc":
        return 0.0
    return (float(opt["alpha"]) + float(opt["beta"])) / 2.0


def _cmd_rs(opt) -> int:
    sys_ = _load_system(opt["ss"])
    grid = FrequencyGrid.parse(opt.get("grid") or "log:1e-3:1e3:400")
    if opt.get("shape"):
        verdict = rs_check_named(sys_, opt["shape"], grid, **_shape_params(opt))
    elif opt.get("region"):
        region = _load_region(opt["region"])
        theta = float(opt.get("theta") or 0.0)
        seed = int(opt.get("seed") or 0)
        if (opt.get("mode") or "theta") == "general":
            verdict = rs_check_general(sys_, region, theta, grid, seed=seed)
        else:
            verdict = rs_check_theta(sys_, region, theta, grid, seed=seed)
    else:
        raise InputError("rs needs either --shape or --region")
    _write_text(opt.get("out"), json.dumps(verdict.to_dict(), indent=1) + "\n")
    if opt.get("assert_") and not verdict.robustly_stable:
        return EXIT_NEGATIVE
    return EXIT_OK


def _cmd_profile(opt) -> int:
    sys_ = _load_system(opt["ss"])
    p = prof.compute_profile(
        sys_,
        n_theta=int(opt.get("ntheta") or 64),
        n_gamma=int(opt.get("ngamma") or 16),
        err=float(opt.get("tol") or 1e-3),
    )
    out = opt.get("out")
    if out:
        fmt = "json" if out.endswith(".json") else "csv"
        prof.export_profile(p, fmt, out)
    else:
        click.echo(prof.profile_to_csv(p), nl=False)
    if opt.get("plot"):
        _plot_profile(p, opt["plot"])
    return EXIT_OK


def _cmd_plot(opt) -> int:
    p = prof.import_profile(opt["input"])
    _plot_profile(p, opt["out"] or "profile.png")
    return EXIT_OK


def _plot_profile(p: prof.ThetaProfile, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(11, 5))
    ax1 = fig.add_subplot(121, projection="3d")
    ax2 = fig.add_subplot(122, projection="3d")
    comp = prof.complementary_profile(p)
    for s, c in zip(p.slices, comp):
        ct, st = math.cos(s.theta), math.sin(s.theta)
        ax1.plot(s.phi * ct, s.phi * st, s.gamma, color="tab:orange", lw=0.8)
        finite = np.isfinite(c.inv_gamma)
        ax2.plot(
            c.pi_minus_phi[finite] * ct,
            c.pi_minus_phi[finite] * st,
            c.inv_gamma[finite],
            color="tab:blue",
            lw=0.8,
        )
    ax1.set_title("angle-gain profile")
    ax2.set_title("complementary profile")
    for ax in (ax1, ax2):
        ax.set_xlabel("phi cos(theta)")
        ax.set_ylabel("phi sin(theta)")
    ax1.set_zlabel("gamma")
    ax2.set_zlabel("1/gamma")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _plot_cloud(cloud: dw.DwPointCloud, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(6, 5))
    ax = fig.add_subplot(111, projection="3d")
    ax.scatter(cloud.z.real, cloud.z.imag, cloud.nu, s=2, alpha=0.4)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_zlabel("nu")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


_HANDLERS = {
    "srg": _cmd_srg,
    "dwshell": _cmd_dwshell,
    "mrn": _cmd_mrn,
    "rs": _cmd_rs,
    "profile": _cmd_profile,
    "plot": _cmd_plot,
}


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------


def _run(command: str, **options) -> None:
    try:
        code = dispatch(CliConfig(command, options))
    except InputError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    sys.exit(code)


@click.group()
def main():
    """Feedback-robustness analysis of matrices and LTI systems."""


_common_sampling = [
    click.option("--samples", type=int, default=None, help="random sample count"),
    click.option("--directions", type=int, default=None, help="support direction count"),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--out", type=click.Path(), default=None, help="output file"),
]


def _add(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return deco


@main.command()
@click.option("--matrix", required=True, type=click.Path())
@click.option("--theta", type=float, default=0.0, show_default=True)
@_add(_common_sampling)
def srg(**kw):
    """Sample the angled scaled relative graph of a matrix."""
    _run("srg", **kw)


@main.command()
@click.option("--matrix", required=True, type=click.Path())
@click.option("--plot", type=click.Path(), default=None, help="scatter plot file")
@_add(_common_sampling)
def dwshell(**kw):
    """Sample the Davis-Wielandt shell of a matrix (CSV re_z, im_z, nu)."""
    _run("dwshell", **kw)


_shape_opts = [
    click.option("--shape", type=click.Choice(["disc", "cone", "sector"]), default=None),
    click.option("--gamma", type=float, default=None),
    click.option("--alpha", type=float, default=None),
    click.option("--beta", type=float, default=None),
    click.option("--region", type=click.Path(), default=None, help="region JSON file"),
    click.option("--mode", type=click.Choice(["theta", "general"]), default="theta"),
    click.option("--theta", type=float, default=0.0, show_default=True),
]


@main.command("mrn")
@click.option("--matrix", required=True, type=click.Path())
@_add(_shape_opts)
@click.option("--samples", type=int, default=None,
              help="also run the brute-force sampler with this many members")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--assert", "assert_", is_flag=True,
              help="exit 1 when the verdict is negative")
def mrn_cmd(**kw):
    """Matrix robust nonsingularity verdict (JSON)."""
    _run("mrn", **kw)


@main.command()
@click.option("--ss", required=True, type=click.Path(), help="state-space JSON file")
@_add(_shape_opts)
@click.option("--grid", type=str, default="log:1e-3:1e3:400", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--assert", "assert_", is_flag=True)
def rs(**kw):
    """Robust stability verdict over a frequency grid (JSON)."""
    _run("rs", **kw)


@main.command()
@click.option("--ss", required=True, type=click.Path())
@click.option("--ntheta", type=int, default=64, show_default=True)
@click.option("--ngamma", type=int, default=16, show_default=True)
@click.option("--tol", type=float, default=1e-3, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--plot", type=click.Path(), default=None, help="surface plot file")
def profile(**kw):
    """Angle-gain robustness profile (CSV or JSON by extension)."""
    _run("profile", **kw)


@main.command()
@click.option("--input", "input", required=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None)
def plot(**kw):
    """Render a stored profile to a static figure."""
    _run("plot", **kw)


if __name__ == "__main__":
    main()
