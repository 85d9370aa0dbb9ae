"""Execute run specs and persist results.

Every output file carries the config hash (a ``# config_hash=`` first line
for CSVs, a ``config_hash`` key for JSON, an XML comment for SVG).  The
manifest is a flat ``key=value`` file listing versions, wall time and the
SHA-256 of each output; ``verify_outputs`` recomputes all of them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunSpec, config_hash
from .crossover import (
    RBAR_THRESHOLD,
    BoseHubbardModel,
    DisorderSpec,
    QubitArrayModel,
    SweepCurve,
    SweepOptions,
    cr_comparison,
    crossings,
    disorder_scan,
    eta_scan,
    run_sweep,
)
from .hamiltonian import table1_site
from .lattice import ConnectivityGraph, alternating_types, from_edge_list, grid, linear_chain, surface7
from .levelstats import RBAR_P0, RBAR_P1, p0, p1
from .qubit_models import TransmonSpec, match_csfq_parameters, site_spectrum, transmon_targets
from .three_site import splitting_table

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("j", "rbar", "rbar_se", "dkl_p0", "dkl_p1", "beta", "gamma", "realizations")
HIST_COLUMNS = ("bin_lo", "bin_hi", "frequency")
MANIFEST = "manifest.txt"
SPEC_FILE = "run_spec.json"


# ------------------------------------------------------------------- models


def build_graph(g) -> tuple[ConnectivityGraph, int | None]:
    """Graph plus the column count used for checkerboard site types."""
    if g.kind == "chain":
        return linear_chain(g.m), None
    if g.kind == "surface7":
        return surface7(), None
    if g.kind == "grid":
        return grid(g.rows, g.cols), g.cols
    return from_edge_list(g.m, g.edges), None


@lru_cache(maxsize=8)
def _qubits(transmon_cfg, csfq_cfg, n_cut):
    t = TransmonSpec(transmon_cfg.e_c, transmon_cfg.e_j_mean, transmon_cfg.e_j_sigma)
    if csfq_cfg.match:
        om, dom, anh = transmon_targets(t, n_cut)
        f = match_csfq_parameters(om, dom, anh, csfq_cfg.alpha, n_cut=n_cut)
    else:
        from .qubit_models import CsfqSpec

        f = CsfqSpec(csfq_cfg.e_cf, csfq_cfg.e_jf_mean, csfq_cfg.e_jf_sigma, csfq_cfg.alpha)
    return t, f


def qubit_pair(run: RunSpec):
    """Transmon spec and the (matched) CSFQ spec of a run."""
    return _qubits(run.transmon, run.csfq, run.n_cut)


def _nominal_hop_per_k(specs, graph) -> float:
    a = np.array([table1_site(s)[0] for s in specs])
    return float(np.mean([0.5 * (a[i] * a[j]) ** 0.25 for i, j in graph.edges]))


def _bh_u_sigma(run: RunSpec):
    bh = run.bose_hubbard
    u = bh.u
    sigma = run.disorder.sigma
    if bh.match_qubits:
        t, _ = qubit_pair(run)
        _, dom, anh = transmon_targets(t, run.n_cut)
        u = np.sign(u) * anh
        sigma = dom if sigma is None else sigma
    if sigma is None:
        sigma = 0.47 * abs(u)
    return float(u), float(sigma)


def bh_model(run: RunSpec, pattern=None, u=None, eta=None, counter_rotating=None) -> BoseHubbardModel:
    g, cols = build_graph(run.graph)
    bh = run.bose_hubbard
    u0 = _bh_u_sigma(run)[0] if u is None else u
    pattern = bh.pattern if pattern is None else pattern
    eta = bh.eta if eta is None else eta
    if pattern == "alternating":
        types = alternating_types(g, cols)
        us = [u0 if t == 0 else -eta * u0 for t in types]
    else:
        us = [u0] * g.n_sites
    cr = run.model == "bose-hubbard-cr" if counter_rotating is None else counter_rotating
    return BoseHubbardModel(g, run.n_exc, tuple(us), bh.omega_mean, cr)


def qubit_model(run: RunSpec) -> QubitArrayModel:
    g, cols = build_graph(run.graph)
    t, f = qubit_pair(run)
    if run.model == "transmon-array":
        specs = [t] * g.n_sites
    elif run.model == "csfq-array":
        specs = [f] * g.n_sites
    else:
        specs = [t if k == 0 else f for k in alternating_types(g, cols)]
    return QubitArrayModel(g, run.n_exc, tuple(specs), run.n_cut)


def make_model(run: RunSpec):
    if run.model in ("bose-hubbard", "bose-hubbard-cr"):
        return bh_model(run)
    return qubit_model(run)


def grid_values(run: RunSpec, gspec=None, model=None) -> np.ndarray:
    gspec = run.grid if gspec is None else gspec
    vals = gspec.array()
    model = make_model(run) if model is None else model
    if isinstance(model, QubitArrayModel) and gspec.variable == "j":
        return vals / _nominal_hop_per_k(model.specs, model.graph)
    if isinstance(model, BoseHubbardModel) and gspec.variable == "k":
        _, f = qubit_pair(run)
        return vals * _nominal_hop_per_k([f, f], linear_chain(2))
    return vals


def disorder_for(run: RunSpec, model, sigma=None) -> DisorderSpec:
    if isinstance(model, QubitArrayModel):
        kind = run.disorder.kind or "josephson-energy"
        return DisorderSpec(kind, run.disorder.sigma if sigma is None else sigma, run.master_seed, run.disorder.mirror)
    kind = run.disorder.kind or "site-frequency"
    s = _bh_u_sigma(run)[1] if sigma is None else sigma
    return DisorderSpec(kind, s, run.master_seed, run.disorder.mirror)


def sweep_options(run: RunSpec) -> SweepOptions:
    m = run.methods
    return SweepOptions(
        n_bins=m.n_bins, kl_renormalize=m.kl_normalization == "renormalized",
        fit_objective=m.fit_objective, fit_masses=m.fit_masses, fit=m.fit, bootstrap=m.bootstrap,
    )


# ------------------------------------------------------------------ writing


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


class OutputWriter:
    """Collects output files, each tagged with the config hash."""

    def __init__(self, outdir, chash: str):
        self.dir = Path(outdir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hash = chash
        self.files: list[str] = []

    def _write(self, name: str, text: str):
        (self.dir / name).write_text(text)
        self.files.append(name)

    def csv(self, name: str, columns, rows):
        buf = io.StringIO()
        buf.write(f"# config_hash={self.hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(v) for v in r])
        self._write(name, buf.getvalue())

    def json(self, name: str, payload: dict):
        body = {"config_hash": self.hash, **payload}
        self._write(name, json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")

    def svg(self, name: str, text: str):
        self._write(name, text.replace("<svg ", f"<!-- config_hash={self.hash} -->\n<svg ", 1))


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def sweep_rows(c: SweepCurve):
    for i in range(len(c)):
        yield (c.j[i], c.rbar[i], c.rbar_se[i], c.dkl_p0[i], c.dkl_p1[i], c.beta[i], c.gamma[i], int(c.realizations[i]))


def write_sweep(w: OutputWriter, name: str, c: SweepCurve, histograms: str = "extremes"):
    w.csv(f"{name}_sweep.csv", SWEEP_COLUMNS, sweep_rows(c))
    cr = crossings(c)
    payload = {"run": name, "thresholds": {"rbar": RBAR_THRESHOLD, "kl": 0.0, "beta": 0.5}, "methods": cr.to_dict()}
    for m in ("rbar", "kl", "beta"):
        x = getattr(cr, m)
        if x is not None:
            payload["methods"][m]["bracket_j"] = [float(c.j[x.bracket[0]]), float(c.j[x.bracket[1]])]
    w.json(f"{name}_crossings.json", payload)
    idx = {"none": [], "extremes": sorted({0, len(c) - 1}), "all": range(len(c))}[histograms]
    nb = c.counts.shape[1]
    edges = np.linspace(0.0, 1.0, nb + 1)
    for i in idx:
        f = c.counts[i] / c.counts[i].sum()
        w.csv(f"{name}_hist_{i:02d}.csv", HIST_COLUMNS, zip(edges[:-1], edges[1:], f))
    return cr


# --------------------------------------------------------------------- SVG

_COLORS = ("#c0392b", "#2471a3", "#229954", "#7d3c98", "#b9770e", "#17a589", "#566573")


def svg_plot(series, hlines=(), xlog=True, xlabel="J", ylabel="", title="", width=640, height=420) -> str:
    """Minimal line plot; ``series`` is a list of ``(label, x, y, dashed)``."""
    pad_l, pad_r, pad_t, pad_b = 60, 150, 30, 45
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series] + [np.asarray(hlines, float)])
    xs, ys = xs[np.isfinite(xs) & (xs > 0 if xlog else True)], ys[np.isfinite(ys)]
    tx = np.log10 if xlog else (lambda v: v)
    x0, x1 = tx(xs.min()), tx(xs.max())
    y0, y1 = ys.min(), ys.max()
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    y0, y1 = y0 - 0.05 * (y1 - y0), y1 + 0.05 * (y1 - y0)
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(v):
        return pad_l + (tx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return pad_t + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{pad_l + pw / 2}" y="{height - 8}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{pad_t + ph / 2}" transform="rotate(-90 14 {pad_t + ph / 2})" text-anchor="middle">{ylabel}</text>',
        f'<text x="{pad_l}" y="18">{title}</text>',
    ]
    for k in range(5):
        v = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{pad_l - 5}" y="{py(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    for k in range(5):
        t = x0 + (x1 - x0) * k / 4
        v = 10 ** t if xlog else t
        out.append(f'<text x="{pad_l + pw * k / 4:.1f}" y="{pad_t + ph + 15}" text-anchor="middle">{v:.3g}</text>')
    for h in hlines:
        out.append(f'<line x1="{pad_l}" x2="{pad_l + pw}" y1="{py(h):.1f}" y2="{py(h):.1f}" stroke="gray" stroke-dasharray="2,3"/>')
    for n, (label, x, y, dashed) in enumerate(series):
        col = _COLORS[n % len(_COLORS)]
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x[ok], y[ok]))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"{dash}/>')
        ly = pad_t + 14 * (n + 1)
        out.append(f'<line x1="{width - pad_r + 10}" x2="{width - pad_r + 30}" y1="{ly - 4}" y2="{ly - 4}" stroke="{col}"{dash}/>')
        out.append(f'<text x="{width - pad_r + 35}" y="{ly}">{label}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def rbar_figure(curves: dict, title: str) -> str:
    series = [(k, c.j, c.rbar, False) for k, c in curves.items()]
    return svg_plot(series, (RBAR_P1, RBAR_THRESHOLD, RBAR_P0), xlabel="J (GHz)", ylabel="mean ratio", title=title)


def histogram_figure(curve: SweepCurve, labels, title: str) -> str:
    nb = curve.counts.shape[1]
    mid = (np.arange(nb) + 0.5) / nb
    series = [(lab, mid, curve.counts[i] / curve.counts[i].sum() * nb, False) for i, lab in enumerate(labels)]
    r = np.linspace(0, 1, 101)
    series += [("P0", r, p0(r), True), ("P1", r, p1(r), True)]
    return svg_plot(series, (), xlog=False, xlabel="r", ylabel="P(r)", title=title)


# -------------------------------------------------------------- experiments


@dataclass
class RunResult:
    name: str
    curves: dict = field(default_factory=dict)
    crossings: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _single(run: RunSpec, w: OutputWriter, workers) -> RunResult:
    model = make_model(run)
    curve = run_sweep(model, grid_values(run, model=model), run.realizations, disorder_for(run, model),
                      sweep_options(run), workers)
    cr = write_sweep(w, run.name, curve, run.histograms)
    return RunResult(run.name, {run.name: curve}, {run.name: cr})


def _scan_model(run: RunSpec, key: str) -> BoseHubbardModel:
    au = abs(_bh_u_sigma(run)[0])
    if key == "T":
        return bh_model(run, "uniform", -au)
    if key == "F":
        return bh_model(run, "uniform", au)
    return bh_model(run, "alternating", run.bose_hubbard.u if not run.bose_hubbard.match_qubits else -au)


def _disorder(run: RunSpec, w: OutputWriter, workers) -> RunResult:
    keys = run.scan.models or ["F", "A"]
    models = {k: _scan_model(run, k) for k in keys}
    sig = run.scan.sigmas
    gspecs = run.scan.grids or [run.grid] * len(sig)
    grids = {float(s): g.array() for s, g in zip(sig, gspecs)}
    res = disorder_scan(models, sig, lambda s: grids[float(s)], run.realizations, run.master_seed,
                        run.scan.method, run.disorder.kind or "site-frequency", sweep_options(run), workers)
    out = RunResult(run.name)
    for k in keys:
        for i, c in enumerate(res.curves[k]):
            nm = f"{run.name}_{k}_s{i:02d}"
            out.curves[nm] = c
            out.crossings[nm] = write_sweep(w, nm, c, "none")
    cols = ["sigma"] + [f"j_c_{k}" for k in keys]
    rows = [[s] + [res.j_c[k][i] for k in keys] for i, s in enumerate(res.sigmas)]
    payload = {"run": run.name, "method": run.scan.method, "sigmas": res.sigmas,
               "j_c": {k: v for k, v in res.j_c.items()},
               "quadratic_fits": {k: v for k, v in res.fits.items()}}
    if "A" in keys and "F" in keys:
        payload["relative_increase_pointwise"] = res.relative_increase("A", "F")
        if res.fits:
            payload["relative_increase_fit"] = res.relative_increase("A", "F", use_fit=True)
            cols.append("rel_fit")
            fit = res.relative_increase("A", "F", use_fit=True)
            rows = [r + [fit[i]] for i, r in enumerate(rows)]
        cols.append("rel_pointwise")
        rows = [r + [payload["relative_increase_pointwise"][i]] for i, r in enumerate(rows)]
    w.csv(f"{run.name}_scan.csv", cols, rows)
    w.json(f"{run.name}_scan.json", payload)
    out.extra["scan"] = res
    return out


def _eta(run: RunSpec, w: OutputWriter, workers) -> RunResult:
    def model_for(eta):
        return bh_model(run, "alternating", eta=eta)

    m0 = model_for(run.scan.etas[0])
    res = eta_scan(model_for, run.scan.etas, run.grid.array(), run.realizations, disorder_for(run, m0),
                   run.scan.method, sweep_options(run), workers)
    out = RunResult(run.name)
    for e, c in zip(res.etas, res.curves):
        nm = f"{run.name}_eta{e:g}"
        out.curves[nm] = c
        out.crossings[nm] = write_sweep(w, nm, c, "none")
    w.csv(f"{run.name}_eta.csv", ("eta", "j_c"), zip(res.etas, res.j_c))
    w.json(f"{run.name}_eta.json", {
        "run": run.name, "method": run.scan.method, "etas": res.etas, "j_c": res.j_c,
        "slope": res.slope, "intercept": res.intercept, "slope_se": res.slope_se, "significance": res.significance,
    })
    out.extra["eta"] = res
    return out


def _cr(run: RunSpec, w: OutputWriter, workers) -> RunResult:
    model = bh_model(run)
    res = cr_comparison(model, run.grid.array(), run.realizations, disorder_for(run, model), sweep_options(run), workers)
    out = RunResult(run.name)
    for tag, c in (("rwa", res.rwa), ("cr", res.cr)):
        nm = f"{run.name}_{tag}"
        out.curves[nm] = c
        out.crossings[nm] = write_sweep(w, nm, c, run.histograms)
    w.json(f"{run.name}_cr.json", {"run": run.name, "max_abs_rbar_diff": res.max_abs_diff,
                                   "rbar_diff": res.cr.rbar - res.rwa.rbar})
    out.extra["cr"] = res
    return out


def _three_site(run: RunSpec, w: OutputWriter, workers) -> RunResult:
    ts = run.three_site
    rows = splitting_table(ts.u, ts.delta_omega, ts.j, ts.etas)
    w.csv(f"{run.name}_three_site.csv", ("eta", "de_analytic", "de_numeric"), rows)
    return RunResult(run.name, extra={"table": rows})


_EXPERIMENTS = {
    "single-sweep": _single,
    "disorder-scan": _disorder,
    "eta-scan": _eta,
    "cr-comparison": _cr,
    "three-site": _three_site,
}


def execute(spec: RunSpec, outdir=None, workers=None) -> dict:
    """Run a spec (composite or single) and write all artifacts.

    Returns ``{run name: RunResult}``.
    """
    t0 = time.perf_counter()
    chash = config_hash(spec)
    w = OutputWriter(outdir or spec.output, chash)
    runs = spec.runs if spec.experiment == "figure-preset" else [spec]
    results = {}
    for run in runs:
        log.info("running %s (%s)", run.name, run.experiment)
        results[run.name] = _EXPERIMENTS[run.experiment](run, w, workers)

    curves = {k: c for r in results.values() for k, c in r.curves.items()}
    if curves:
        w.svg(f"{spec.figure or spec.name}_rbar.svg", rbar_figure(curves, spec.figure or spec.name))
    for run in runs:
        if run.histograms == "all" and run.experiment == "single-sweep":
            c = results[run.name].curves[run.name]
            labels = [f"{run.grid.variable.upper()}={v:g}" for v in run.grid.array()]
            w.svg(f"{run.name}_histograms.svg", histogram_figure(c, labels, run.name))

    (w.dir / SPEC_FILE).write_text(
        json.dumps({"config_hash": chash, "spec": spec.hashable()}, indent=2, sort_keys=True) + "\n"
    )
    w.files.append(SPEC_FILE)
    write_manifest(w, spec, time.perf_counter() - t0)
    return results


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(w: OutputWriter, spec: RunSpec, wall: float):
    items = [
        ("config_hash", w.hash),
        ("name", spec.name),
        ("master_seed", str(spec.master_seed)),
        ("package_version", __version__),
        ("python_version", platform.python_version()),
        ("numpy_version", np.__version__),
        ("scipy_version", scipy.__version__),
        ("wall_time_s", f"{wall:.3f}"),
    ]
    items += [(f"sha256.{f}", _sha256(w.dir / f)) for f in sorted(w.files)]
    (w.dir / MANIFEST).write_text("".join(f"{k}={v}\n" for k, v in items))


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def verify_outputs(outdir) -> list[str]:
    """Return a list of problems (empty when every check passes)."""
    d = Path(outdir)
    problems = []
    if not (d / MANIFEST).exists():
        return [f"{d / MANIFEST} missing"]
    man = read_manifest(d / MANIFEST)
    h = man.get("config_hash", "")
    try:
        stored = json.loads((d / SPEC_FILE).read_text())
        spec = RunSpec.model_validate(stored["spec"])
        recomputed = config_hash(spec)
        if recomputed != h:
            problems.append(f"config hash mismatch: manifest {h}, recomputed {recomputed}")
        if stored.get("config_hash") != h:
            problems.append(f"{SPEC_FILE} records hash {stored.get('config_hash')}, manifest {h}")
    except Exception as exc:  # any failure to reload the spec is a verification failure
        problems.append(f"cannot reload {SPEC_FILE}: {exc}")
    for key, digest in man.items():
        if not key.startswith("sha256."):
            continue
        name = key[len("sha256."):]
        p = d / name
        if not p.exists():
            problems.append(f"{name}: missing")
            continue
        if _sha256(p) != digest:
            problems.append(f"{name}: checksum mismatch")
        if h not in p.read_text():
            problems.append(f"{name}: config hash not embedded")
    return problems
