"""End-to-end pipeline: problem -> partition -> coarse space -> preconditioner -> GMRES."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import coarse as coarse_mod
from . import krylov, mmio, partition, problems, schwarz, splitting
from ._parallel import pmap
from .sparse import SparseMatrix

log = logging.getLogger(__name__)

PROBLEM_KINDS = ("matrix", "identity", "lap1d", "lap2d", "convdiff2d")


class PipelineError(RuntimeError):
    def __init__(self, stage, exc):
        self.stage = stage
        self.cause = exc
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")


@dataclass
class ProblemSpec:
    kind: str = "lap2d"
    path: str | None = None
    nx: int = 32
    ny: int = 32
    nu: float = 1.0
    kappa: str = "constant"
    velocity: str = "recirculating"
    name: str | None = None

    def identifier(self):
        if self.name:
            return self.name
        if self.kind == "matrix":
            return Path(self.path).stem
        if self.kind == "identity":
            return f"identity-{self.nx}"
        if self.kind == "lap1d":
            return f"lap1d-{self.nx}"
        if self.kind == "lap2d":
            return f"lap2d-{self.nx}x{self.ny}"
        return f"convdiff2d-{self.nx}x{self.ny}-nu{self.nu:g}" + ("" if self.kappa == "constant" else f"-{self.kappa}")

    def build(self) -> SparseMatrix:
        if self.kind == "matrix":
            if self.path is None:
                raise ValueError("matrix problem needs a path")
            if str(self.path).endswith(".sddc"):
                return mmio.load_cache(self.path)
            return mmio.read_matrix_market(self.path)
        if self.kind == "identity":
            return SparseMatrix.identity(self.nx)
        if self.kind == "lap1d":
            return problems.generate_laplacian1d(self.nx)
        if self.kind == "lap2d":
            return problems.generate_laplacian2d(self.nx, self.ny)
        if self.kind == "convdiff2d":
            return problems.generate_convdiff2d(self.nx, self.ny, self.nu, self.kappa, self.velocity)
        raise ValueError(f"unknown problem kind {self.kind!r}")


@dataclass
class SolverConfig:
    """Every knob of a run.

    Defaults: GMRES(30) with rtol 1e-8 and at most 100 iterations, tau 0.3, at most 60
    eigenpairs per subdomain, RAS with deflated coarse correction, random right-hand
    side and zero initial guess.
    """

    nsub: int = 8
    partition_file: str | None = None
    seed: int = 0
    pou: str = "boolean"
    tau: float = coarse_mod.TAU_DEFAULT
    max_ev: int = coarse_mod.MAX_EV_DEFAULT
    kernel_tol: float = coarse_mod.KERNEL_TOL_DEFAULT
    variant: str = "ras"
    coarse: str = "deflated"
    restart: int = krylov.RESTART_DEFAULT
    rtol: float = krylov.RTOL_DEFAULT
    maxit: int = krylov.MAXIT_DEFAULT
    rhs: str = "random"
    rhs_seed: int = 0
    initial_guess: str = "zero"
    dense_threshold: int = schwarz.DENSE_THRESHOLD
    workers: int = 1
    condition: bool = False
    dump_local: str | None = None

    def as_dict(self):
        return asdict(self)


@dataclass
class RunRecord:
    identifier: str
    n: int
    nnz: int
    variant: str
    coarse: str
    tau: float
    max_ev: int
    nsub: int
    n0: int
    iterations: int
    converged: bool
    breakdown: bool
    final_residual: float
    k_c: int
    k_m: int
    residual_history: list = field(default_factory=list)
    subdomains: list = field(default_factory=list)
    condition: float | None = None
    bound: float | None = None
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    failed_stage: str | None = None

    def as_dict(self, timings=True):
        d = asdict(self)
        if not timings:
            d.pop("timings")
        return d


def make_rhs(a: SparseMatrix, seed=0):
    """Uniform random entries in [0, 1) (real and imaginary parts for complex matrices)."""
    rng = np.random.default_rng(seed)
    b = rng.uniform(size=a.n_rows)
    if a.is_complex:
        b = b + 1j * rng.uniform(size=a.n_rows)
    return b


class _Stages:
    def __init__(self):
        self.timings = {}

    def __call__(self, name, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            out = fn(*args, **kw)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc
        self.timings[name] = time.perf_counter() - t0
        return out


def build_preconditioner(a, cfg: SolverConfig, stages=None):
    """Run the setup stages; returns ``(precond, layout, graph, splittings, selections)``."""
    st = stages or _Stages()
    g = st("graph", partition.build_graph, a)
    if cfg.partition_file:
        parts = st("partition", partition.import_partition, cfg.partition_file, a.n_rows)
    else:
        parts = st("partition", partition.partition_graph, g, cfg.nsub, cfg.seed)
    layout = st("overlap", partition.extend_overlap, g, parts, cfg.pou)
    splits = st("splitting", splitting.build_all_splittings, a, layout, cfg.workers)
    if cfg.dump_local:
        st("dump", dump_local, splits, cfg.dump_local)
    selections, cs = [], None
    if cfg.coarse != "none":
        def gevp(i):
            return coarse_mod.solve_local_gevp(
                splits[i].a_ii, splits[i].a_tilde_ii, layout[i].pou, cfg.tau, cfg.max_ev,
                cfg.kernel_tol, subdomain=i,
            )
        selections = st("gevp", pmap, gevp, range(layout.n_subdomains), cfg.workers)
        cs = st("coarse", coarse_mod.assemble_coarse, a, layout, selections, cfg.kernel_tol)
    m = st("setup", schwarz.setup, a, layout, cs, cfg.variant, cfg.coarse, splits,
           cfg.dense_threshold, cfg.workers)
    return m, layout, g, splits, selections


def dump_local(splits, directory):
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for s in splits:
        mmio.write_matrix_market(
            out / f"atilde_{s.index:04d}.mtx", SparseMatrix.from_scipy(s.a_tilde_ii),
            comment=f"lumped local matrix of subdomain {s.index}",
        )


def run(problem: ProblemSpec, cfg: SolverConfig | None = None, a: SparseMatrix | None = None) -> RunRecord:
    cfg = cfg or SolverConfig()
    st = _Stages()
    if a is None:
        a = st("load", problem.build)
    if not a.is_square():
        raise PipelineError("load", ValueError(f"matrix is {a.n_rows}x{a.n_cols}, not square"))
    m, layout, g, _, selections = build_preconditioner(a, cfg, st)
    k_c, k_m = st("coloring", partition.coloring_and_multiplicity, layout, g)

    if cfg.rhs == "random":
        b = make_rhs(a, cfg.rhs_seed)
    elif cfg.rhs == "problem" and problem.kind == "convdiff2d":
        b = problems.convdiff2d_system(problem.nx, problem.ny, problem.nu, problem.kappa, problem.velocity)[1]
    else:
        raise PipelineError("rhs", ValueError(f"unsupported right-hand side {cfg.rhs!r}"))
    _, rep = st("gmres", krylov.gmres, a, b, m, cfg.restart, cfg.rtol, cfg.maxit)

    cond = bound = None
    if cfg.condition:
        herm = a.is_hermitian()
        cond = st("condition", krylov.estimate_condition, lambda x: m(a @ x), a.n_rows, a if herm else None)
        if herm and cfg.variant == "asm" and cfg.coarse == "additive":
            bound = coarse_mod.bound_rhs(k_c, k_m, cfg.tau)

    return RunRecord(
        identifier=problem.identifier(), n=a.n_rows, nnz=a.nnz, variant=cfg.variant, coarse=cfg.coarse,
        tau=cfg.tau, max_ev=cfg.max_ev, nsub=layout.n_subdomains, n0=m.n0,
        iterations=rep.iterations, converged=rep.converged, breakdown=rep.breakdown_flag,
        final_residual=rep.final_residual, k_c=k_c, k_m=k_m,
        residual_history=[float(r) for r in rep.relative_residual_history],
        subdomains=[
            {"subdomain": i, "n_interior": int(s.n_interior), "n_boundary": int(s.n_boundary),
             **({k: v for k, v in selections[i].summary().items() if k != "subdomain"} if selections else {})}
            for i, s in enumerate(layout)
        ],
        condition=cond, bound=bound, config=cfg.as_dict(), timings=st.timings,
    )


def failed_record(problem: ProblemSpec, cfg: SolverConfig, exc: PipelineError) -> RunRecord:
    """Placeholder row for a run whose preconditioner could not be built."""
    try:
        a = problem.build()
        n, nnz = a.n_rows, a.nnz
    except Exception:
        n = nnz = 0
    return RunRecord(
        identifier=problem.identifier(), n=n, nnz=nnz, variant=cfg.variant, coarse=cfg.coarse, tau=cfg.tau,
        max_ev=cfg.max_ev, nsub=cfg.nsub, n0=0, iterations=0, converged=False, breakdown=True,
        final_residual=float("nan"), k_c=0, k_m=0, config=cfg.as_dict(), failed_stage=exc.stage,
    )


def iteration_cell(rec: RunRecord) -> str:
    """Empty when the iteration cap was hit, a dagger on breakdown."""
    if rec.breakdown:
        return "†"
    if not rec.converged:
        return ""
    return str(rec.iterations)


def emit_table(records):
    """Aligned text table plus a JSON document of the full records."""
    if not records:
        raise ValueError("need at least one record")
    head = ["Identifier", "n", "nnz", "iterations", "n_0"]
    body = [[r.identifier, str(r.n), str(r.nnz), iteration_cell(r), str(r.n0)] for r in records]
    widths = [max(len(row[c]) for row in [head] + body) for c in range(len(head))]

    def fmt(row):
        cells = [row[0].ljust(widths[0])] + [row[c].rjust(widths[c]) for c in range(1, len(row))]
        return " | ".join(cells).rstrip()

    lines = [fmt(head), "-+-".join("-" * w for w in widths)] + [fmt(r) for r in body]
    doc = json.dumps([r.as_dict() for r in records], indent=2, default=_json_default)
    return "\n".join(lines), doc


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
