"""
Config-driven experiment runner.

    python -m maskblur run <config.toml>
    python -m maskblur verify <manifest.json>
    python -m maskblur kernels list
    python -m maskblur patterns dump <config.toml>

Configs are TOML with ``schema = 1``; see ``configs/`` for one example of
each experiment kind and README.md for the full key list.  Relative
``outputs.dir`` paths are resolved against ``$MASKBLUR_OUTPUT_ROOT`` when it
is set, otherwise against the working directory.  Relative scene paths are
resolved against the config file's directory.

Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 checksum failure.
"""

import argparse
from dataclasses import dataclass, field
import hashlib
import json
import logging
import os
from pathlib import Path
import platform
import sys

import numpy as np
import scipy
from scipy import linalg

from . import __version__
from . import calib, io as mbio, kernels, metrics, model, mtf, recon, simkit, spectral, svg
from .errors import BudgetExceeded, ChecksumMismatch, ConfigInvalid, MaskBlurError

log = logging.getLogger("maskblur")

SCHEMA_VERSION = 1
KINDS = ("Spectrum", "Reconstruct", "SweepK", "OneD", "Calibrate", "MTF")
OUTPUT_ROOT_ENV = "MASKBLUR_OUTPUT_ROOT"
MANIFEST = "manifest.json"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECKSUM = 0, 2, 3, 4

NO_SUPERRES_FLAG = "no superresolution: gram rank <= N"


# -- config ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    geometry: model.Geometry
    scene: dict
    kernel_names: tuple
    scheme: str
    K_list: tuple
    noise: simkit.NoiseModel
    solver: dict
    outputs: Path
    svg: bool
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def K(self):
        return self.K_list[-1]


def _get(d, key, path, typ, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigInvalid(f"{path}.{key}".lstrip("."), "missing")
        return default
    v = d[key]
    if typ is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, typ) or (typ is int and isinstance(v, bool)):
        name = typ.__name__ if isinstance(typ, type) else "/".join(t.__name__ for t in typ)
        raise ConfigInvalid(f"{path}.{key}".lstrip("."), f"expected {name}, got {v!r}")
    return v


def _table(raw, key):
    v = raw.get(key, {})
    if not isinstance(v, dict):
        raise ConfigInvalid(key, "expected a table")
    return v


def output_dir(dir_value):
    p = Path(dir_value)
    if p.is_absolute():
        return p
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return (Path(root) if root else Path.cwd()) / p


def parse_config(raw, base_dir=Path(".")):
    """Validate a decoded TOML document into an :class:`ExperimentConfig`."""
    schema = _get(raw, "schema", "", int, required=True)
    if schema != SCHEMA_VERSION:
        raise ConfigInvalid("schema", f"unsupported schema {schema}, expected {SCHEMA_VERSION}")
    kind = _get(raw, "kind", "", str, required=True)
    if kind not in KINDS:
        raise ConfigInvalid("kind", f"must be one of {', '.join(KINDS)}")
    seed = _get(raw, "seed", "", int, 0)
    if not 0 <= seed < 2 ** 64:
        raise ConfigInvalid("seed", "must be in [0, 2**64)")

    gt = _table(raw, "geometry")
    try:
        geometry = model.make_geometry(
            _get(gt, "mask_side", "geometry", int, 32),
            _get(gt, "sensor_side", "geometry", int, 32),
            _get(gt, "superres_factor", "geometry", int, 4))
    except (MaskBlurError, ValueError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid("geometry", str(exc)) from exc

    st = _table(raw, "scene")
    scene = {}
    if "path" in st:
        p = Path(_get(st, "path", "scene", str))
        p = p if p.is_absolute() else base_dir / p
        if not p.exists():
            raise ConfigInvalid("scene.path", f"file not found: {p}")
        scene["path"] = p
    elif "standard" in st:
        name = _get(st, "standard", "scene", str)
        if name not in simkit.STANDARD_IMAGES:
            raise ConfigInvalid("scene.standard",
                                f"must be one of {', '.join(simkit.STANDARD_IMAGES)}")
        scene["standard"] = name
    elif "fan_spokes" in st:
        scene["fan_spokes"] = _get(st, "fan_spokes", "scene", int)
        if scene["fan_spokes"] < 2:
            raise ConfigInvalid("scene.fan_spokes", "must be >= 2")
    elif kind in ("Reconstruct", "SweepK", "Calibrate"):
        raise ConfigInvalid("scene", "one of path, standard or fan_spokes is required")

    kt = _table(raw, "kernels")
    names = tuple(_get(kt, "names", "kernels", list, ["disk_1.667"]))
    if not names:
        raise ConfigInvalid("kernels.names", "empty kernel list")
    for n in names:
        try:
            kernels.by_name(str(n), geometry)
        except (KeyError, ValueError) as exc:
            raise ConfigInvalid("kernels.names", f"bad kernel {n!r}: {exc}") from exc

    pt = _table(raw, "patterns")
    scheme = _get(pt, "scheme", "patterns", str, simkit.HALF_ON)
    if scheme not in simkit.SCHEMES:
        raise ConfigInvalid("patterns.scheme", f"must be one of {', '.join(simkit.SCHEMES)}")
    K = pt.get("K", 100)
    K_list = tuple(K) if isinstance(K, list) else (K,)
    if not K_list or not all(isinstance(k, int) and not isinstance(k, bool) and k >= 1
                             for k in K_list):
        raise ConfigInvalid("patterns.K", "must be a positive integer or a list of them")
    if any(b <= a for a, b in zip(K_list, K_list[1:])):
        raise ConfigInvalid("patterns.K", "K list must be strictly increasing")
    if kind != "SweepK" and len(K_list) != 1:
        raise ConfigInvalid("patterns.K", f"{kind} takes a single K")
    if scheme == simkit.SINGLE_ELEMENT and K_list[-1] > geometry.n_mask:
        raise ConfigInvalid("patterns.K", f"single_element allows at most {geometry.n_mask}")

    nt = _table(raw, "noise")
    try:
        noise = simkit.NoiseModel(_get(nt, "kind", "noise", str, "none"),
                                  _get(nt, "psnr_db", "noise", float, 40.0))
    except ValueError as exc:
        raise ConfigInvalid("noise", str(exc)) from exc

    sv = _table(raw, "solver")
    method = _get(sv, "method", "solver", str, recon.DIRECT)
    if method not in (recon.DIRECT, recon.CG):
        raise ConfigInvalid("solver.method", "must be 'direct' or 'cg'")
    delta = _get(sv, "delta", "solver", float)
    if delta is not None and not delta > 0:
        raise ConfigInvalid("solver.delta", "must be > 0")
    if method == recon.CG and delta is None:
        raise ConfigInvalid("solver.delta", "the cg solver needs a fixed delta")
    grid = _table(sv, "grid")
    solver = {
        "method": method,
        "delta": delta,
        "grid_n": _get(grid, "n", "solver.grid", int, 25),
        "grid_lo": _get(grid, "lo", "solver.grid", float, 1e-6),
        "grid_hi": _get(grid, "hi", "solver.grid", float, 1e2),
        "cg_tol": _get(sv, "cg_tol", "solver", float, 1e-10),
        "cg_max_iter": _get(sv, "cg_max_iter", "solver", int, 2000),
    }
    if solver["grid_n"] < 1 or not 0 < solver["grid_lo"] <= solver["grid_hi"]:
        raise ConfigInvalid("solver.grid", "need n >= 1 and 0 < lo <= hi")

    ot = _table(raw, "outputs")
    outputs = output_dir(_get(ot, "dir", "outputs", str, required=True))
    options = _kind_options(kind, raw, geometry)
    return ExperimentConfig(kind, seed, geometry, scene, names, scheme, K_list, noise,
                            solver, outputs, _get(ot, "svg", "outputs", bool, True),
                            options, raw)


def _kind_options(kind, raw, g):
    if kind == "OneD":
        t = _table(raw, "oned")
        opts = {
            "R": _get(t, "R", "oned", int, 256),
            "a": _get(t, "a", "oned", float, 1.0),
            "b": _get(t, "b", "oned", float, 2.0),
            "K": _get(t, "K", "oned", int, 50),
            "realizations": _get(t, "realizations", "oned", int, 10),
            "pattern_model": _get(t, "pattern_model", "oned", str, spectral.PLUS_MINUS_ONE),
        }
        if opts["R"] < 2 or opts["R"] % 2:
            raise ConfigInvalid("oned.R", "must be even and >= 2")
        if opts["K"] < 1 or opts["realizations"] < 1:
            raise ConfigInvalid("oned", "K and realizations must be >= 1")
        if opts["pattern_model"] not in (spectral.PLUS_MINUS_ONE, spectral.ZERO_ONE):
            raise ConfigInvalid("oned.pattern_model", "must be plus_minus_one or zero_one")
        return opts
    if kind == "Spectrum":
        t = _table(raw, "spectrum")
        tau = _get(t, "tau", "spectrum", float)
        if tau is not None and not 0 < tau < 1:
            raise ConfigInvalid("spectrum.tau", "must be in (0, 1)")
        return {"tau": tau}
    if kind == "MTF":
        t = _table(raw, "mtf")
        opts = {
            "spokes": _get(t, "spokes", "mtf", int, 16),
            "radius_lo": _get(t, "radius_lo", "mtf", float, 0.1),
            "radius_hi": _get(t, "radius_hi", "mtf", float, 0.45),
            "radius_n": _get(t, "radius_n", "mtf", int, 10),
        }
        if opts["spokes"] < 2:
            raise ConfigInvalid("mtf.spokes", "must be >= 2")
        if not 0 < opts["radius_lo"] <= opts["radius_hi"] < 0.5 or opts["radius_n"] < 1:
            raise ConfigInvalid("mtf", "need 0 < radius_lo <= radius_hi < 0.5 and radius_n >= 1")
        return opts
    if kind == "Calibrate":
        t = _table(raw, "calibrate")
        shift = _get(t, "shift", "calibrate", list, [0.0, 0.0])
        if len(shift) != 2:
            raise ConfigInvalid("calibrate.shift", "expected [rows, cols]")
        opts = {
            "threshold": _get(t, "threshold", "calibrate", float, calib.DEFAULT_THRESHOLD),
            "magnification": _get(t, "magnification", "calibrate", float, 1.0),
            "shift": (float(shift[0]), float(shift[1])),
            "barrel": _get(t, "barrel", "calibrate", float, 0.0),
        }
        if opts["threshold"] < 0 or not opts["magnification"] > 0:
            raise ConfigInvalid("calibrate", "threshold must be >= 0 and magnification > 0")
        return opts
    return {}


def load_config(path):
    import tomli

    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid("config", f"file not found: {path}")
    try:
        raw = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigInvalid("config", f"not valid TOML: {exc}") from exc
    return parse_config(raw, path.parent)


# -- shared pieces -----------------------------------------------------------------

class Outputs:
    """Tracks every file written for one run so the manifest can list them."""

    def __init__(self, root, svg=True):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.checked = []
        self.unchecked = []
        self.svg_enabled = svg

    def path(self, name, checked=True):
        (self.checked if checked else self.unchecked).append(name)
        return self.root / name

    def table(self, name, header, rows):
        mbio.write_table(self.path(name), header, rows)

    def plot(self, name, series, **kw):
        if self.svg_enabled:
            svg.line_plot(self.path(name, checked=False), series, **kw)


def _scene(cfg):
    g = cfg.geometry
    if "path" in cfg.scene:
        return simkit.load_scene(cfg.scene["path"], g)
    if "standard" in cfg.scene:
        return simkit.scene_from_array(simkit.standard_image(cfg.scene["standard"]), g,
                                       maxval=255.0)
    if "fan_spokes" in cfg.scene:
        return mtf.render_fan_target(g.scene_side, cfg.scene["fan_spokes"])
    raise ConfigInvalid("scene", "no scene configured")


def _kernel_list(cfg):
    return [kernels.by_name(n, cfg.geometry) for n in cfg.kernel_names]


def _label(kernel):
    return kernel.name.replace(".", "p")


def _patterns(cfg):
    return simkit.generate_patterns(cfg.geometry, cfg.K, cfg.scheme, cfg.seed)


def _grid(cfg, solver):
    s = cfg.solver
    lam = float(solver.eigenvalues[-1])
    return recon.default_delta_grid(solver.op, s["grid_n"], s["grid_lo"], s["grid_hi"],
                                    lambda_max=lam)


def _reconstruct(cfg, op, ys, truth, solver=None):
    """Returns ``(ReconResult, DirectSolver or None, sweep rows or None)``."""
    s = cfg.solver
    if s["method"] == recon.CG:
        tc = recon.TikhonovConfig(s["delta"], recon.CG, s["cg_tol"], s["cg_max_iter"])
        return recon.solve(op, ys, tc), solver, None
    if solver is None:
        solver = recon.DirectSolver(op, method="eigh" if s["delta"] is None else "cholesky")
    if s["delta"] is not None:
        return solver.solve(ys, s["delta"]), solver, None
    grid = _grid(cfg, solver)
    res, curve = recon.reconstruct_best(op, ys, truth, grid, solver)
    return res, solver, [[d, m] for d, m in zip(grid, curve)]


# -- experiment kinds --------------------------------------------------------------

def run_spectrum(cfg, out):
    g = cfg.geometry
    P = _patterns(cfg)
    tau = cfg.options.get("tau")
    if tau is None:
        tau = spectral.tau_from_psnr(cfg.noise.target_psnr_db)
    summary = []
    series = {}
    for k in _kernel_list(cfg):
        log.info("spectrum: %s, K=%d", k.name, cfg.K)
        rep = spectral.spectrum(model.gram(model.SystemOperator(g, P.bits, k)))
        idx = np.arange(1, len(rep) + 1)
        out.table(f"eigenvalues_{_label(k)}.csv", ["index", "eigenvalue", "normalized"],
                  [[int(i), float(e), float(n)]
                   for i, e, n in zip(idx, rep.eigenvalues, rep.normalized)])
        series[k.name] = (idx, np.clip(rep.normalized, 1e-18, None))
        summary.append([k.name, rep.lambda_max, rep.effective_rank(tau),
                        spectral.effective_superres_factor(rep, g, tau), rep.condition_number])
    out.table("spectrum_summary.csv",
              ["kernel", "lambda_max", "effective_rank", "effective_superres_factor",
               "condition_number"], summary)
    out.plot("spectrum.svg", series, title=f"normalized spectrum, K={cfg.K}",
             xlabel="index", ylabel="lambda / lambda_1", logy=True)


def run_reconstruct(cfg, out):
    g = cfg.geometry
    truth = _scene(cfg)
    P = _patterns(cfg)
    rows = []
    header = ["kernel", "delta"] + list(metrics.QualityReport.FIELDS) + ["gram_rank", "note"]
    for k in _kernel_list(cfg):
        log.info("reconstruct: %s, K=%d", k.name, cfg.K)
        op = model.SystemOperator(g, P.bits, k)
        ys = simkit.simulate(op, truth, cfg.noise, cfg.seed)
        res, solver, sweep = _reconstruct(cfg, op, ys, truth)
        if sweep is not None:
            out.table(f"sweep_{_label(k)}.csv", ["delta", "mse"], sweep)
        if solver is None:
            solver = recon.DirectSolver(op, method="eigh")
        w = solver.eigenvalues
        rank = int(np.count_nonzero(w > 1e-10 * w[-1]))
        note = NO_SUPERRES_FLAG if rank <= g.n_mask else ""
        if note:
            log.warning("%s: %s (rank %d, N = %d)", k.name, note, rank, g.n_mask)
        q = metrics.quality(res.estimate, truth)
        mbio.write_pgm(out.path(f"estimate_{_label(k)}.pgm"), res.estimate)
        mbio.write_image_csv(out.path(f"estimate_{_label(k)}.csv"), res.estimate)
        rows.append([k.name, res.delta_used] + q.as_row() + [rank, note])
    bic = metrics.quality(metrics.bicubic_baseline(truth, g), truth)
    rows.append(["bicubic", 0.0] + bic.as_row() + ["", ""])
    out.table("quality.csv", header, rows)
    mbio.write_pgm(out.path("truth.pgm"), truth)


def run_sweep_k(cfg, out):
    g = cfg.geometry
    truth = _scene(cfg)
    P = _patterns(cfg)
    series = {}
    for k in _kernel_list(cfg):
        rows = []
        for K in cfg.K_list:
            log.info("sweep K: %s, K=%d", k.name, K)
            op = model.SystemOperator(g, P.prefix(K).bits, k)
            ys = simkit.simulate(op, truth, cfg.noise, cfg.seed)
            res = _reconstruct(cfg, op, ys, truth)[0]
            q = metrics.quality(res.estimate, truth)
            rows.append([K, q.ssim, q.mse, q.relative_error, q.psnr_db])
        out.table(f"sweepk_{_label(k)}.csv", ["K", "ssim", "mse", "re", "psnr"], rows)
        series[k.name] = ([r[0] for r in rows], [r[1] for r in rows])
    out.plot("sweepk.svg", series, title="SSIM versus K", xlabel="K", ylabel="SSIM")


def run_oned(cfg, out):
    o = cfg.options
    filt = spectral.SymmetricFilter1D(o["a"], o["b"])
    model_name = o["pattern_model"]
    exp = spectral.expected_gram_1d(o["R"], filt, model_name,
                                    exact=model_name == spectral.ZERO_ONE)
    rep = spectral.spectrum(exp)
    idx = np.arange(1, o["R"] + 1)
    out.table("expected_spectrum.csv", ["index", "eigenvalue", "normalized"],
              [[int(i), float(e), float(n)] for i, e, n in zip(idx, rep.eigenvalues,
                                                               rep.normalized)])
    rows = []
    series = {"expected": (idx, rep.normalized)}
    for r in range(o["realizations"]):
        emp = spectral.spectrum(spectral.empirical_gram_1d(
            o["R"], filt, o["K"], seed=cfg.seed + r, pattern_model=model_name))
        rows += [[r, int(i), float(e), float(n)]
                 for i, e, n in zip(idx, emp.eigenvalues, emp.normalized)]
        series[f"K={o['K']} #{r}"] = (idx, emp.normalized)
    out.table("empirical_spectra.csv", ["realization", "index", "eigenvalue", "normalized"], rows)
    hi, lo = spectral.block_eigenvalues_1d(filt)
    opt = spectral.filter_optima(o["a"]) if o["a"] != 0 else None
    summary = [["block_eigenvalue_high", hi], ["block_eigenvalue_low", lo]]
    if o["a"] != 0:
        summary.append(["condition_ratio", spectral.filter_condition_ratio(filt)])
        summary += [["ratio_minimizer_b", opt.minimizer_b],
                    ["ratio_at_minimizer", opt.ratio_at_minimizer],
                    ["ratio_at_b0", opt.ratio_at_quoted_b]]
    out.table("filter_summary.csv", ["quantity", "value"], summary)
    out.plot("oned_spectra.svg", series, title="1D normalized spectra", xlabel="index",
             ylabel="lambda / lambda_1", logy=True)


def run_calibrate(cfg, out):
    g = cfg.geometry
    o = cfg.options
    truth = _scene(cfg)
    ks = _kernel_list(cfg)
    dist = None
    if (o["magnification"], o["shift"], o["barrel"]) != (1.0, (0.0, 0.0), 0.0):
        dist = calib.Distortion(o["magnification"], o["shift"], o["barrel"])
    log.info("calibrate: probing %d kernels with %d probes", len(ks), g.n_scene)
    w = calib.estimate_weights([calib.probe_responses(g, k, dist) for k in ks], g,
                               threshold=o["threshold"])
    stem = out.root / "weights"
    written = calib.save_weights(w, stem)
    for p in written:
        out.path(p.name)
    w2 = calib.load_weights(stem.with_suffix(".json"))
    P = _patterns(cfg)
    rows = []
    for j, k in enumerate(ks):
        idx = np.full(P.K, j)
        yc = calib.forward_calibrated(w, P, truth, idx)
        yr = calib.forward_calibrated(w2, P, truth, idx)
        ym = model.forward(model.SystemOperator(g, P.bits, k), truth)
        scale = max(float(np.abs(ym).max()), 1e-300)
        rows.append([k.name, w.matrices[j].nnz, w.nonzero_columns(j),
                     float(np.abs(yr - yc).max()), float(np.abs(yc - ym).max() / scale)])
    out.table("calibration_report.csv",
              ["kernel", "nnz", "nonzero_columns", "file_roundtrip_max_abs",
               "model_max_rel_diff"], rows)


def run_mtf(cfg, out):
    g = cfg.geometry
    o = cfg.options
    spokes = cfg.scene.get("fan_spokes", o["spokes"])
    truth = mtf.render_fan_target(g.scene_side, spokes)
    k = _kernel_list(cfg)[0]
    op = model.SystemOperator(g, _patterns(cfg).bits, k)
    ys = simkit.simulate(op, truth, cfg.noise, cfg.seed)
    log.info("mtf: reconstructing fan target with %s, K=%d", k.name, cfg.K)
    res = _reconstruct(cfg, op, ys, truth)[0]
    low = metrics.bicubic_baseline(truth, g)
    radii = np.linspace(o["radius_lo"], o["radius_hi"], o["radius_n"]) * g.scene_side
    series = {}
    for name, img in (("truth", truth), ("bicubic", low), ("reconstruction", res.estimate)):
        curve = mtf.mtf_fan(img, radii=radii, spokes=spokes)
        out.table(f"mtf_{name}.csv", list(mtf.MTFCurve.FIELDS), curve.rows())
        series[name] = (curve.frequencies, curve.contrasts)
    mbio.write_pgm(out.path("fan_target.pgm"), truth)
    mbio.write_pgm(out.path("fan_reconstruction.pgm"), res.estimate)
    out.plot("mtf.svg", series, title="fan-target contrast", xlabel="cycles / pixel",
             ylabel="contrast")


RUNNERS = {
    "Spectrum": run_spectrum,
    "Reconstruct": run_reconstruct,
    "SweepK": run_sweep_k,
    "OneD": run_oned,
    "Calibrate": run_calibrate,
    "MTF": run_mtf,
}


# -- manifest ----------------------------------------------------------------------

def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions():
    return {"maskblur": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(out, cfg, name=MANIFEST):
    manifest = {
        "schema": SCHEMA_VERSION,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config": cfg.raw,
        "versions": versions(),
        "files": {n: sha256(out.root / n) for n in sorted(out.checked)},
        "unchecked": sorted(out.unchecked),
    }
    path = out.root / name
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def verify(manifest_path):
    """Re-hash every checked file; raises ChecksumMismatch naming the bad ones."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ConfigInvalid("manifest", f"file not found: {manifest_path}")
    try:
        files = json.loads(manifest_path.read_text())["files"]
    except (ValueError, KeyError) as exc:
        raise ConfigInvalid("manifest", f"unreadable manifest: {exc}") from exc
    bad = []
    for name, digest in sorted(files.items()):
        p = manifest_path.parent / name
        if not p.is_file():
            bad.append(f"{name} (missing)")
        elif sha256(p) != digest:
            bad.append(name)
    if bad:
        raise ChecksumMismatch(bad)


def run(config_path):
    cfg = load_config(config_path)
    out = Outputs(cfg.outputs, cfg.svg)
    log.info("running %s into %s", cfg.kind, out.root)
    RUNNERS[cfg.kind](cfg, out)
    return write_manifest(out, cfg)


def dump_patterns(config_path):
    cfg = load_config(config_path)
    out = Outputs(cfg.outputs / "patterns", svg=False)
    P = _patterns(cfg)
    mbio.write_patterns(out.path("patterns.bin"), P.bits)
    mbio.write_patterns_csv(out.path("patterns.csv"), P.bits)
    return write_manifest(out, cfg)


def list_kernels(stream=None, geometry=None):
    g = geometry or model.make_geometry(32, 32, 4)
    stream = sys.stdout if stream is None else stream
    stream.write("name,kind,diameter_sensor_px,raster_side\n")
    for name, k in kernels.kernel_library(g).items():
        d = "" if k.diameter_sensor_px is None else mbio.fmt(k.diameter_sensor_px)
        stream.write(f"{name},{k.kind},{d},{k.raster.shape[0]}\n")


# -- entry point -------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="maskblur", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    v = sub.add_parser("verify", help="re-check the checksums in a manifest")
    v.add_argument("manifest")
    k = sub.add_parser("kernels", help="kernel library")
    k.add_argument("action", choices=["list"])
    pt = sub.add_parser("patterns", help="mask patterns")
    pt.add_argument("action", choices=["dump"])
    pt.add_argument("config")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "run":
            path = run(args.config)
            log.info("manifest: %s", path)
        elif args.command == "verify":
            verify(args.manifest)
            log.info("all checksums match")
        elif args.command == "kernels":
            list_kernels()
        elif args.command == "patterns":
            path = dump_patterns(args.config)
            log.info("manifest: %s", path)
    except ConfigInvalid as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except ChecksumMismatch as exc:
        log.error("%s", exc)
        return EXIT_CHECKSUM
    except (MaskBlurError, BudgetExceeded, linalg.LinAlgError, FloatingPointError,
            ValueError, MemoryError, RuntimeError) as exc:
        log.error("numeric failure: %s: %s", type(exc).__name__, exc)
        return EXIT_NUMERIC
    return EXIT_OK
