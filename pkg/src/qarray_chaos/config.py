"""Declarative run specifications, config hashing and figure presets.

A run spec is a YAML (or JSON) document validated against a strict schema:
unknown keys are rejected and errors point at the offending line.  Energies
are frequencies in GHz throughout.
"""

from __future__ import annotations

import hashlib
import json
from typing import List, Literal, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import SpecError

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GraphSpec(_Strict):
    kind: Literal["chain", "surface7", "grid", "edges"] = "chain"
    m: Optional[int] = Field(None, ge=2)
    rows: Optional[int] = Field(None, ge=1)
    cols: Optional[int] = Field(None, ge=1)
    edges: Optional[List[Tuple[int, int]]] = None

    @model_validator(mode="after")
    def _complete(self):
        if self.kind == "chain" and self.m is None:
            raise ValueError("chain needs m")
        if self.kind == "grid" and (self.rows is None or self.cols is None):
            raise ValueError("grid needs rows and cols")
        if self.kind == "edges" and (self.m is None or not self.edges):
            raise ValueError("edge-list graph needs m and edges")
        return self


class GridSpec(_Strict):
    """Hopping grid: explicit ``values`` or log-spaced ``start..stop``.

    ``variable`` says whether the values are hoppings ``j`` or couplings
    ``k``; for qubit arrays a ``j`` grid is converted to ``K`` through the
    nominal (mean-parameter) hopping map.  A ``k`` grid on a Bose-Hubbard
    run is converted to ``J`` with the nominal CSFQ hopping map.
    """

    values: Optional[List[float]] = None
    start: Optional[float] = Field(None, gt=0)
    stop: Optional[float] = Field(None, gt=0)
    points_per_decade: int = Field(16, ge=1)
    variable: Literal["j", "k"] = "j"

    @model_validator(mode="after")
    def _complete(self):
        if self.values is None and (self.start is None or self.stop is None):
            raise ValueError("grid needs values or start and stop")
        if self.values is not None and (len(self.values) < 1 or any(v <= 0 for v in self.values)):
            raise ValueError("grid values must be positive")
        if self.start is not None and self.stop is not None and self.stop <= self.start:
            raise ValueError("grid stop must exceed start")
        return self

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values, dtype=float)
        decades = np.log10(self.stop / self.start)
        n = int(round(decades * self.points_per_decade)) + 1
        return np.logspace(np.log10(self.start), np.log10(self.stop), max(n, 2))


class DisorderCfg(_Strict):
    kind: Optional[Literal["site-frequency", "josephson-energy"]] = None
    sigma: Optional[float] = Field(None, ge=0)
    mirror: bool = False


class TransmonCfg(_Strict):
    e_c: float = Field(0.25, gt=0)
    e_j_mean: float = Field(44.0, gt=0)
    e_j_sigma: float = Field(1.17, ge=0)


class CsfqCfg(_Strict):
    """CSFQ parameters; with ``match`` they are solved from the transmon."""

    alpha: float = 0.35
    match: bool = True
    e_cf: Optional[float] = Field(None, gt=0)
    e_jf_mean: Optional[float] = Field(None, gt=0)
    e_jf_sigma: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _complete(self):
        if not self.match and None in (self.e_cf, self.e_jf_mean, self.e_jf_sigma):
            raise ValueError("unmatched CSFQ needs e_cf, e_jf_mean and e_jf_sigma")
        return self


class BoseHubbardCfg(_Strict):
    """``u`` is the interaction of type-0 sites; type-1 sites get ``-eta * u``
    in the alternating pattern.

    With ``match_qubits`` the magnitude of ``u`` and the frequency spread
    are taken from the transmon configuration (exact anharmonicity and
    ``|d omega01 / d E_J| * sigma_EJ``), as for a matched qubit array.
    """

    u: float = -0.25
    pattern: Literal["uniform", "alternating"] = "uniform"
    eta: float = Field(1.0, gt=0)
    omega_mean: float = 5.0
    match_qubits: bool = False


class MethodsCfg(_Strict):
    kl_normalization: Literal["renormalized", "raw-midpoint"] = "renormalized"
    fit_objective: Literal["least-squares", "likelihood"] = "least-squares"
    fit_masses: Literal["midpoint", "integrated"] = "midpoint"
    fit: bool = True
    n_bins: int = Field(50, ge=2)
    bootstrap: int = Field(200, ge=0)


class ScanCfg(_Strict):
    sigmas: Optional[List[float]] = None
    etas: Optional[List[float]] = None
    grids: Optional[List[GridSpec]] = None
    method: Literal["rbar", "kl", "beta"] = "kl"
    models: Optional[List[Literal["T", "F", "A"]]] = None


class ThreeSiteCfg(_Strict):
    u: float = Field(1.0, gt=0)
    delta_omega: float = 0.1
    j: float = Field(0.01, ge=0)
    etas: List[float] = [-1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 3.0]


Experiment = Literal["single-sweep", "disorder-scan", "eta-scan", "cr-comparison", "three-site", "figure-preset"]
ModelKind = Literal["transmon-array", "csfq-array", "alternating-array", "bose-hubbard", "bose-hubbard-cr"]


class RunSpec(_Strict):
    name: str = "run"
    experiment: Experiment = "single-sweep"
    model: ModelKind = "bose-hubbard"
    graph: GraphSpec = GraphSpec(kind="chain", m=8)
    n_exc: int = Field(4, ge=0)
    grid: Optional[GridSpec] = None
    realizations: int = Field(200, ge=1)
    master_seed: int = Field(0, ge=0, lt=2 ** 64)
    disorder: DisorderCfg = DisorderCfg()
    transmon: TransmonCfg = TransmonCfg()
    csfq: CsfqCfg = CsfqCfg()
    bose_hubbard: BoseHubbardCfg = BoseHubbardCfg()
    methods: MethodsCfg = MethodsCfg()
    scan: ScanCfg = ScanCfg()
    three_site: ThreeSiteCfg = ThreeSiteCfg()
    n_cut: int = Field(50, ge=5)
    histograms: Literal["none", "extremes", "all"] = "extremes"
    figure: Optional[str] = None
    preset: Optional[str] = None
    scale: Literal["reduced", "full"] = "reduced"
    runs: List["RunSpec"] = []
    output: str = "out"

    @model_validator(mode="after")
    def _consistent(self):
        exp = self.experiment
        if exp == "figure-preset":
            if not self.runs and self.preset is None:
                raise ValueError("figure-preset needs a preset name or runs")
        elif exp in ("single-sweep", "disorder-scan", "eta-scan", "cr-comparison"):
            if self.grid is None and not (exp == "disorder-scan" and self.scan.grids):
                raise ValueError(f"{exp} needs a grid")
        if exp == "disorder-scan" and not self.scan.sigmas:
            raise ValueError("disorder-scan needs scan.sigmas")
        if exp == "eta-scan" and not self.scan.etas:
            raise ValueError("eta-scan needs scan.etas")
        if self.scan.grids and self.scan.sigmas and len(self.scan.grids) != len(self.scan.sigmas):
            raise ValueError("scan.grids must align with scan.sigmas")
        if exp == "cr-comparison" and self.n_exc < 2:
            raise ValueError("cr-comparison needs n_exc >= 2")
        return self

    def hashable(self) -> dict:
        return self.model_dump(mode="json", exclude={"output"})


RunSpec.model_rebuild()


def config_hash(spec: RunSpec) -> str:
    """SHA-256 of the canonical JSON form (output directory excluded)."""
    text = json.dumps({"schema": SCHEMA_VERSION, "spec": spec.hashable()}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# --------------------------------------------------------------------- parsing


def _locate(node, loc) -> Optional[int]:
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt, line = v, k.start_mark.line + 1
                    break
            if nxt is None:
                return line
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def _format_errors(exc: ValidationError, root) -> str:
    lines = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        field = ".".join(str(p) for p in loc) or "<root>"
        where = _locate(root, loc)
        prefix = f"line {where}: " if where else ""
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = f"unknown key {loc[-1]!r}"
        lines.append(f"{prefix}{field}: {msg}")
    return "\n".join(lines)


def parse_run_spec(text: str) -> RunSpec:
    """Parse and validate a YAML/JSON run spec; presets are expanded."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"malformed spec: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SpecError("spec must be a mapping")
    try:
        spec = RunSpec.model_validate(data)
    except ValidationError as exc:
        raise SpecError(_format_errors(exc, root)) from None
    if spec.experiment == "figure-preset" and spec.preset and not spec.runs:
        spec = preset_spec(spec.preset, spec.scale, spec.master_seed, spec.output)
    return spec


def load_run_spec(path) -> RunSpec:
    with open(path) as fh:
        return parse_run_spec(fh.read())


# --------------------------------------------------------------------- presets

U_T = -0.25
SIGMA_BH = 0.47 * 0.25
PRESETS = (
    "fig2-reduced", "fig3-reduced", "fig4a-reduced", "fig4b-reduced", "fig5-surface7", "fig5-grid33",
    "figA1-reduced", "figA4-reduced", "appendixD-table",
)


def _chain(m):
    return GraphSpec(kind="chain", m=m)


def _size(scale):
    return (8, 4, 200) if scale == "reduced" else (10, 5, 5000)


def _bh(name, graph, n, grid, r, pattern="uniform", u=U_T, eta=1.0, sigma=SIGMA_BH, model="bose-hubbard", **kw):
    return RunSpec(
        name=name, model=model, graph=graph, n_exc=n, grid=grid, realizations=r,
        disorder=DisorderCfg(kind="site-frequency", sigma=sigma),
        bose_hubbard=BoseHubbardCfg(u=u, pattern=pattern, eta=eta), **kw,
    )


def _fig2(scale):
    m, n, r = _size(scale)
    ks = [0.001, 0.002, 0.003, 0.005, 0.01, 0.02, 0.03]
    return [
        RunSpec(name="csfq", model="csfq-array", graph=_chain(m), n_exc=n, realizations=r,
                grid=GridSpec(values=ks, variable="k"), disorder=DisorderCfg(kind="josephson-energy"),
                histograms="all"),
        RunSpec(name="bh_k5mhz", model="bose-hubbard", graph=_chain(m), n_exc=n, realizations=r,
                grid=GridSpec(values=[0.005], variable="k"), disorder=DisorderCfg(kind="site-frequency"),
                histograms="all", bose_hubbard=BoseHubbardCfg(u=0.25, match_qubits=True)),
    ]


def _fig3(scale):
    m, n, r = _size(scale)
    grid = GridSpec(start=0.003, stop=0.3, points_per_decade=16)
    qubit = dict(graph=_chain(m), n_exc=n, realizations=r, grid=grid, disorder=DisorderCfg(kind="josephson-energy"))
    return [
        RunSpec(name="transmon", model="transmon-array", **qubit),
        RunSpec(name="csfq", model="csfq-array", **qubit),
        RunSpec(name="alternating", model="alternating-array", **qubit),
        RunSpec(name="bh_uniform", model="bose-hubbard", graph=_chain(m), n_exc=n, realizations=r, grid=grid,
                disorder=DisorderCfg(kind="site-frequency"), bose_hubbard=BoseHubbardCfg(u=0.25, match_qubits=True)),
        RunSpec(name="bh_alternating", model="bose-hubbard", graph=_chain(m), n_exc=n, realizations=r, grid=grid,
                disorder=DisorderCfg(kind="site-frequency"),
                bose_hubbard=BoseHubbardCfg(u=-0.25, pattern="alternating", match_qubits=True)),
    ]


def _scan_grid(sigma_over_u):
    lo = 0.025 * max(1.0, sigma_over_u) ** 1.2
    return GridSpec(start=lo, stop=lo * 20, points_per_decade=16)


def _fig4a(scale):
    m, n, r = _size(scale)
    r = 200 if scale == "reduced" else 1000
    sig = [0.25, 0.47, 1.0, 1.5, 2.0, 2.5]
    grids = [_scan_grid(s) for s in sig]
    base = dict(graph=_chain(m), n_exc=n, realizations=r, experiment="disorder-scan",
                disorder=DisorderCfg(kind="site-frequency"))
    return [RunSpec(
        name="disorder_scan", model="bose-hubbard",
        scan=ScanCfg(sigmas=[s * 0.25 for s in sig], grids=grids, method="kl", models=["F", "A"]),
        bose_hubbard=BoseHubbardCfg(u=-0.25), **base,
    )]


def _fig4b(scale):
    m, n, r = _size(scale)
    r = 200 if scale == "reduced" else 1000
    return [_bh("eta_scan", _chain(m), n, GridSpec(start=0.025, stop=0.5, points_per_decade=16), r,
                pattern="alternating", experiment="eta-scan", scan=ScanCfg(etas=[0.5, 1.0, 1.5, 2.0], method="kl"))]


def _ugrid(lo, hi, ppd):
    """Grid given in units of ``|U| = 0.25``."""
    return GridSpec(start=lo * 0.25, stop=hi * 0.25, points_per_decade=ppd)


# Windows (in units of |U|) bracketing each crossing at reduced scale; the
# 3x3 runs (D = 1287) use short windows to keep the runtime bounded.
_FIG5_WINDOWS = {
    "surface7": ((0.06, 0.3, 24), (0.08, 0.4, 24), (0.12, 0.5, 24), (0.2, 0.8, 24)),
    "grid33": ((0.06, 0.2, 10), (0.08, 0.26, 10), (0.15, 0.4, 8), (0.25, 0.7, 8)),
}


def _fig5(graph, m, n, scale, key):
    r = 300 if scale == "reduced" else 1000
    wu, wa, wcu, wca = (_ugrid(*w) for w in _FIG5_WINDOWS[key])
    if scale == "full":
        wu = wa = wcu = wca = _ugrid(0.04, 1.0, 16)
    runs = [
        _bh("uniform", graph, n, wu, r),
        _bh("alternating", graph, n, wa, r, pattern="alternating"),
        _bh("chain_uniform", _chain(m), n, wcu, r),
    ]
    if scale == "full" or key == "surface7":
        runs.append(_bh("chain_alternating", _chain(m), n, wca, r, pattern="alternating"))
    return runs


def _figA1(scale):
    m, n, r = _size(scale)
    grid = GridSpec(start=0.003, stop=0.3, points_per_decade=16)
    return [_bh("bh_uniform", _chain(m), n, grid, r)]


def _figA4(scale):
    m, n, r = (6, 3, 300) if scale == "reduced" else (10, 4, 1000)
    grid = GridSpec(start=0.005, stop=0.2, points_per_decade=8)
    return [
        _bh("uniform", _chain(m), n, grid, r, experiment="cr-comparison"),
        _bh("alternating", _chain(m), n, grid, r, pattern="alternating", experiment="cr-comparison"),
    ]


def _appendix_d(scale):
    return [RunSpec(name="three_site", experiment="three-site",
                    three_site=ThreeSiteCfg(u=1.0, delta_omega=0.1, j=0.001 if scale == "reduced" else 0.0005))]


def preset_spec(name: str, scale: str = "reduced", seed: int = 0, output: str = "out") -> RunSpec:
    """Expand a named figure preset into a composite run spec."""
    builders = {
        "fig2-reduced": _fig2,
        "fig3-reduced": _fig3,
        "fig4a-reduced": _fig4a,
        "fig4b-reduced": _fig4b,
        "fig5-surface7": lambda s: _fig5(GraphSpec(kind="surface7"), 7, 4, s, "surface7"),
        "fig5-grid33": lambda s: _fig5(GraphSpec(kind="grid", rows=3, cols=3), 9, 5, s, "grid33"),
        "figA1-reduced": _figA1,
        "figA4-reduced": _figA4,
        "appendixD-table": _appendix_d,
    }
    if name not in builders:
        raise SpecError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    runs = [r.model_copy(update={"master_seed": seed}) for r in builders[name](scale)]
    return RunSpec(name=name, experiment="figure-preset", preset=name, scale=scale, master_seed=seed,
                   runs=runs, figure=name, output=output)
