"""Command-line driver: equilibrium -> spectrum -> manifold -> experiments.

Upstream artifacts are memoized in ``<out>/cache`` keyed by a hash of the
settings they depend on.  ``report.json`` files carry no timestamps, so a
rerun with the same configuration reproduces them byte for byte; wall-clock
information goes to ``run.json``.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import experiments as ex
from .continuation import EvolveOptions, TimePath, evolve
from .equilibrium import EigenPair, Equilibrium, find_equilibrium, leading_eigenpair
from .errors import ComputationError, DomainError
from .manifold import ManifoldExpansion, expand_graph, seed_initial, winding_time
from .spatial import SpatialGrid, StateField

__all__ = ["RunConfig", "UsageError", "load_config", "run", "main"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    """Invalid configuration or command line."""


@dataclass(frozen=True)
class RunConfig:
    grid_n: int = 128
    expansion_order: int = 8
    tau: complex = complex(ex.DEFAULT_TAU, 0.0)
    rel_tol: float = 1e-9
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    blowup_threshold: float = 1e8
    snapshot_stride: int = 10
    output_dir: Path = Path("runs")
    experiment_list: tuple[str, ...] = ()

    def __post_init__(self):
        n = self.grid_n
        if not isinstance(n, int) or n < 32 or n & (n - 1):
            raise UsageError(f"grid_n must be a power of two >= 32, got {n!r}")
        if self.expansion_order < 2:
            raise UsageError(f"expansion_order must be >= 2, got {self.expansion_order}")
        unknown = [e for e in self.experiment_list if e not in ex.EXPERIMENTS]
        if unknown:
            raise UsageError(f"unknown experiment(s) {', '.join(unknown)}; choose from {', '.join(ex.EXPERIMENTS)}")
        try:
            self.evolve_options()
        except DomainError as exc:
            raise UsageError(str(exc)) from exc

    def evolve_options(self) -> EvolveOptions:
        return EvolveOptions(rel_tol=self.rel_tol, dt_init=self.dt_init, dt_min=self.dt_min,
                             blowup_threshold=self.blowup_threshold,
                             snapshot_stride=self.snapshot_stride)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["tau"] = [self.tau.real, self.tau.imag]
        d["output_dir"] = str(self.output_dir)
        d["experiment_list"] = list(self.experiment_list)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def parse_complex(text: str) -> complex:
    """'re,im' or a plain real number."""
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"cannot read {text!r} as a complex number 're,im'")


def _coerce(name: str, raw: str):
    if name not in _FIELDS:
        raise UsageError(f"unknown config key {name!r}")
    if name == "tau":
        return parse_complex(raw)
    if name == "output_dir":
        return Path(raw)
    if name == "experiment_list":
        items = [s.strip() for s in raw.replace(",", " ").split()]
        return tuple(i for i in items if i)
    default = _FIELDS[name].default
    try:
        return int(raw) if isinstance(default, int) else float(raw)
    except ValueError:
        raise UsageError(f"config key {name}: cannot parse {raw!r}") from None


def load_config(path: Path | None, overrides: dict | None = None) -> RunConfig:
    """Flat 'key = value' file ('#' starts a comment), then overrides."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"config file {path} does not exist")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            values[key] = _coerce(key, raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# memoized pipeline stages


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


def _key(**parts) -> str:
    blob = json.dumps(parts, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class Pipeline:
    def __init__(self, config: RunConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.cache = self.out / "cache"
        self.grid = SpatialGrid(config.grid_n)
        self.cache_hits: list[str] = []
        self._eq = self._pairs = self._exp = None

    def _npz(self, stage: str, **parts) -> Path:
        return self.cache / f"{stage}-{_key(stage=stage, **parts)}.npz"

    def _stage(self, stage, fn):
        try:
            return fn()
        except (DomainError, ComputationError, ValueError, FloatingPointError) as exc:
            raise StageError(stage, exc) from exc

    def equilibrium(self) -> Equilibrium:
        if self._eq is None:
            path = self._npz("equilibrium", n=self.config.grid_n)
            if path.exists():
                z = np.load(path)
                self._eq = Equilibrium(StateField(self.grid, z["profile"]), float(z["residual"]),
                                       float(z["center"]))
                self.cache_hits.append("equilibrium")
            else:
                self._eq = self._stage("equilibrium", lambda: find_equilibrium(self.grid))
                self.cache.mkdir(parents=True, exist_ok=True)
                np.savez(path, profile=self._eq.profile.values, residual=self._eq.residual,
                         center=self._eq.center_value)
        return self._eq

    def spectrum(self, k: int = 3) -> list[EigenPair]:
        if self._pairs is None:
            eq = self.equilibrium()
            path = self._npz("spectrum", n=self.config.grid_n, k=k)
            if path.exists():
                z = np.load(path)
                self._pairs = [EigenPair(float(m), StateField(self.grid, p), float(r))
                               for m, p, r in zip(z["mu"], z["phi"], z["residual"])]
                self.cache_hits.append("spectrum")
            else:
                self._pairs = self._stage("spectrum", lambda: leading_eigenpair(eq, k=k))
                np.savez(path, mu=[p.mu for p in self._pairs],
                         phi=np.array([p.phi.values for p in self._pairs]),
                         residual=[p.residual for p in self._pairs])
        return self._pairs

    def manifold(self) -> ManifoldExpansion:
        if self._exp is None:
            eq = self.equilibrium()
            pair = self.spectrum()[0]
            order = self.config.expansion_order
            path = self._npz("manifold", n=self.config.grid_n, order=order)
            if path.exists():
                z = np.load(path)
                psi = tuple(StateField(self.grid, v) for v in z["psi"])
                self._exp = ManifoldExpansion(eq, pair, order, psi, tuple(float(c) for c in z["coeffs"]))
                self.cache_hits.append("manifold")
            else:
                self._exp = self._stage("manifold", lambda: expand_graph(eq, pair, order))
                np.savez(path, psi=np.array([p.values for p in self._exp.psi]),
                         coeffs=np.array(self._exp.reduced_coeffs))
        return self._exp


# ---------------------------------------------------------------------------
# writers


def _dump(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _field_csv(path: Path, f: StateField) -> None:
    rows = zip(f.grid.points, np.real(f.values), np.imag(f.values))
    ex.write_csv(path, ("x", "re", "im"), rows)


def write_equilibrium(pipe: Pipeline) -> None:
    eq = pipe.equilibrium()
    _dump(pipe.out / "equilibrium.json", {
        "grid_n": pipe.config.grid_n,
        "supnorm": float(np.abs(eq.profile.values).max()),
        "center_value_shooting": eq.center_value,
        "residual": eq.residual,
    })
    _field_csv(pipe.out / "equilibrium.csv", eq.profile)


def write_spectrum(pipe: Pipeline) -> None:
    pairs = pipe.spectrum()
    _dump(pipe.out / "spectrum.json", {
        "grid_n": pipe.config.grid_n,
        "eigenvalues": [p.mu for p in pairs],
        "residuals": [p.residual for p in pairs],
        "mu_minus_pi2_over_4": pairs[0].mu - math.pi**2 / 4.0,
        "equilibrium_supnorm": float(np.abs(pipe.equilibrium().profile.values).max()),
    })
    rows = zip(pipe.grid.points, *[p.phi.values for p in pairs])
    ex.write_csv(pipe.out / "eigenfunctions.csv", ["x"] + [f"phi_{i + 1}" for i in range(len(pairs))], rows)


def write_manifold(pipe: Pipeline) -> None:
    exp = pipe.manifold()
    radii = (0.01, 0.02, 0.05)
    windings = [winding_time(exp, r) for r in radii]
    _dump(pipe.out / "manifold.json", {
        "grid_n": pipe.config.grid_n,
        "order": exp.order,
        "mu": exp.mu,
        "reduced_coeffs": list(exp.reduced_coeffs),
        "r_max": exp.r_max,
        "winding_radii": list(radii),
        "winding_times": [[w.real, w.imag] for w in windings],
        "two_pi_over_mu": 2.0 * math.pi / exp.mu,
    })
    rows = zip(pipe.grid.points, *[p.values for p in exp.psi])
    ex.write_csv(pipe.out / "psi.csv", ["x"] + [f"psi_{k}" for k in range(2, exp.order + 1)], rows)


def write_trajectory(out: Path, tr, config: RunConfig, path: TimePath, extra: dict) -> None:
    ex.write_csv(out / "trajectory.csv", ("s", "re_t", "im_t", "supnorm"), tr.history)
    for i, snap in enumerate(tr.snapshots):
        _field_csv(out / "snapshots" / f"snapshot_{i:05d}.csv", snap)
    ex.write_csv(out / "snapshots" / "index.csv", ("index", "s", "re_t", "im_t", "supnorm"),
                 [(i, s, t.real, t.imag, m) for i, (s, t, m) in
                  enumerate(zip(tr.arclength, tr.times, tr.supnorms))])
    record = {
        "config": config.to_dict(),
        "options": dataclasses.asdict(config.evolve_options()),
        "path": [[w.real, w.imag] for w in path.waypoints],
        "status": tr.status,
        "blowup_time": None if tr.blowup_time is None else [tr.blowup_time.real, tr.blowup_time.imag],
        "blowup_extrapolation": "zero of a quadratic fit of 1/sup over the last three accepted steps",
        "accepted_steps": tr.n_accepted,
        "rejected_steps": tr.n_rejected,
        **extra,
    }
    _dump(out / "run.json", record)


# ---------------------------------------------------------------------------
# experiment orchestration


def run_experiments(pipe: Pipeline, names: Sequence[str]) -> list[ex.ExperimentReport]:
    exp = pipe.manifold()
    opts = pipe.config.evolve_options()
    tau = pipe.config.tau.real
    root = pipe.out / "experiments"
    shared: dict = {}

    def c_const():
        if "C" not in shared:
            shared["C"] = ex.semigroup_constant(exp)
        return shared["C"]

    def t_blowup():
        if "T" not in shared:
            tr = ex.blowup_time(exp, tau, opts)
            if not tr.blew_up:
                raise ComputationError(f"seed tau={tau} did not blow up")
            shared["T"] = tr.blowup_time.real
        return shared["T"]

    def delta_star():
        if "delta_star" not in shared:
            rep = ex.exp_strip_width(exp, opts, tau=tau, t_blowup=t_blowup(), locate_singularity=False)
            shared["delta_star"] = rep.metrics["delta_star"]
        return shared["delta_star"]

    reports = []
    # producers of shared quantities run first
    order = [n for n in ex.EXPERIMENTS if n in names]
    for name in order:
        out = root / name

        def body():
            if name == "foliation":
                return ex.exp_foliation(exp, opts, radius=abs(pipe.config.tau), out_dir=out)
            if name == "blowup":
                taus = sorted({0.005, 0.01, 0.02, tau})
                rep = ex.exp_blowup(exp, opts, taus=taus, c_const=c_const(), out_dir=out)
                shared.setdefault("T", rep.metrics[f"T_{tau:g}"])
                return rep
            if name == "strip_width":
                rep = ex.exp_strip_width(exp, opts, tau=tau, t_blowup=t_blowup(), out_dir=out)
                shared.setdefault("delta_star", rep.metrics["delta_star"])
                return rep
            if name == "spall_strip":
                return ex.exp_spall_strip(exp, 0.5 * delta_star(), opts, tau=tau, t_blowup=t_blowup(),
                                          c_const=c_const(), out_dir=out)
            if name == "monodromy":
                return ex.exp_monodromy(exp, 0.5 * delta_star(), opts, tau=tau, t_blowup=t_blowup(), out_dir=out)
            if name == "blowup_rate":
                return ex.exp_blowup_rate(exp, delta_star(), opts, tau=tau, t_blowup=t_blowup(), out_dir=out)
            raise UsageError(f"unknown experiment {name}")

        reports.append(pipe._stage(f"experiment {name}", body))
    return reports


def run(config: RunConfig) -> int:
    """Run the stages needed by ``config.experiment_list``; 0 iff every verdict passes."""
    started = time.time()
    try:
        Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: output directory {config.output_dir} is not writable: {exc}", file=sys.stderr)
        return EXIT_USAGE
    pipe = Pipeline(config)
    timings = {}
    try:
        t = time.time()
        write_equilibrium(pipe)
        write_spectrum(pipe)
        timings["equilibrium+spectrum"] = time.time() - t
        reports = []
        if config.experiment_list:
            t = time.time()
            write_manifold(pipe)
            timings["manifold"] = time.time() - t
            t = time.time()
            reports = run_experiments(pipe, config.experiment_list)
            timings["experiments"] = time.time() - t
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _dump(pipe.out / "run.json", {"config": config.to_dict(), "failed_stage": exc.stage,
                                      "error": str(exc), "started": started, "finished": time.time()})
        return EXIT_FAIL

    summary = {
        "config": {k: v for k, v in config.to_dict().items() if k != "output_dir"},
        "experiments": {r.name: {"verdict": r.verdict, "checks": dict(sorted(r.checks.items()))}
                        for r in reports},
        "verdict": "pass" if all(r.passed for r in reports) else "fail",
    }
    if reports:
        _dump(pipe.out / "report.json", summary)
    _dump(pipe.out / "run.json", {
        "config": config.to_dict(),
        "options": dataclasses.asdict(config.evolve_options()),
        "calibration_seed": 0,
        "cache_hits": pipe.cache_hits,
        "timings_s": timings,
        "started": started,
        "finished": time.time(),
        "verdicts": {r.name: r.verdict for r in reports},
    })
    for r in reports:
        print(f"{r.name}: {r.verdict}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def run_evolve(config: RunConfig, path_file: Path) -> int:
    try:
        path = TimePath.load(path_file)
    except (DomainError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    pipe = Pipeline(config)
    try:
        exp = pipe.manifold()
        u0 = pipe._stage("seed", lambda: seed_initial(config.tau, exp))
        tr = pipe._stage("evolve", lambda: evolve(u0, path, config.evolve_options()))
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = pipe.out / "evolve"
    write_trajectory(out, tr, config, path, {"tau": [config.tau.real, config.tau.imag]})
    print(f"{tr.status}" + ("" if tr.blowup_time is None else f" at t = {tr.blowup_time}"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--n", type=int, dest="grid_n", help="interior grid points (power of two >= 32)")
    common.add_argument("--order", type=int, dest="expansion_order", help="manifold expansion order")
    common.add_argument("--rel-tol", type=float, dest="rel_tol", help="integrator relative tolerance")
    common.add_argument("--out", type=Path, dest="output_dir", help="output directory")
    common.add_argument("--tau", type=parse_complex, help="seed amplitude 're,im'")

    p = argparse.ArgumentParser(prog="spallstrip", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibrium", parents=[common], help="positive steady state")
    sub.add_parser("spectrum", parents=[common], help="leading eigenpairs of the linearization")
    sub.add_parser("manifold", parents=[common], help="unstable-manifold expansion")
    pe = sub.add_parser("evolve", parents=[common], help="evolve a seed along a time path")
    pe.add_argument("--path", type=Path, required=True, help="JSON array of [re, im] waypoints")
    px = sub.add_parser("experiment", parents=[common], help="run named experiments")
    px.add_argument("names", nargs="+", choices=ex.EXPERIMENTS)
    sub.add_parser("all", parents=[common], help="run every experiment")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    overrides = {k: getattr(args, k) for k in ("grid_n", "expansion_order", "rel_tol", "output_dir", "tau")}
    if args.command == "experiment":
        overrides["experiment_list"] = tuple(args.names)
    elif args.command == "all":
        overrides["experiment_list"] = ex.EXPERIMENTS
    try:
        config = load_config(args.config, overrides)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "evolve":
        return run_evolve(config, args.path)
    if args.command in ("equilibrium", "spectrum", "manifold"):
        pipe = Pipeline(config)
        try:
            pipe.out.mkdir(parents=True, exist_ok=True)
            write_equilibrium(pipe)
            if args.command != "equilibrium":
                write_spectrum(pipe)
            if args.command == "manifold":
                write_manifold(pipe)
        except StageError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
