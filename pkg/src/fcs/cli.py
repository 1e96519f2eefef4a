"""Command line front-end.

::

    fcs run <config.json> [--out DIR] [--threads N]
    fcs validate <config.json>

A config is one JSON document::

    {
      "experiment": "chi",
      "model": {"random": {"seed": 1, "dim": 6, "kind": "mixed-commuting"}},
      "variant": "les-lev",
      "grid_size": 64,
      "k_max": 4,
      "output": {"dir": "out"}
    }

``model`` holds exactly one of ``inline`` (a serialized model),
``two_circle`` (``transmission`` or ``S``, ``T``, ``mu_L``, ``mu_R``,
``cutoff`` and optionally ``beta``) or ``random``.

Exit codes: 0 success, 2 invalid config or model, 3 numerical failure.
Failures print a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import counting, fock, limit, scattering
from .errors import FCSError, NumericalFailure
from .model import QuantumModel, random_model, validate

SCHEMA = 1
EXPERIMENTS = ("chi", "cumulants", "distribution", "two-circle", "noise-split", "sweep", "diagnostics", "oracle-check")
MODEL_KINDS = ("pure-commuting", "mixed-commuting", "mixed-general")
ORACLE_TOL = 1e-9
# variants that need [Q, rho] = 0
COMMUTING_ONLY = ("les-lev",)
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(FCSError, ValueError):
    """Invalid config; `field` is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class OracleMismatch(NumericalFailure):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    source: str
    model_params: dict
    variant: str = "les-lev"
    grid_size: int = 64
    k_max: int = 4
    out_dir: str = "."
    prefix: str = ""
    cutoffs: list = field(default_factory=list)
    probes: list = field(default_factory=lambda: list(limit.DEFAULT_PROBES))
    n_min: int | None = None


# --------------------------------------------------------------------------
# config parsing


def _number(value, name: str, integer: bool = False, positive: bool = False):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if integer:
        ok = ok and float(value).is_integer()
    if not ok or not np.isfinite(value):
        raise ConfigError(name, f"expected {'an integer' if integer else 'a finite number'}, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(name, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


def parse_config(data) -> ExperimentConfig:
    """Check the structure of a config document; raises :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = {"experiment", "model", "variant", "grid_size", "k_max", "output", "cutoffs", "lambda_probes", "n_min"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown field")
    exp = data.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"expected one of {list(EXPERIMENTS)}, got {exp!r}")

    model = data.get("model")
    if not isinstance(model, dict):
        raise ConfigError("model", "missing or not an object")
    sources = [k for k in ("inline", "two_circle", "random") if k in model]
    extra = [k for k in model if k not in ("inline", "two_circle", "random")]
    if extra:
        raise ConfigError(f"model.{extra[0]}", "unknown model source")
    if len(sources) != 1:
        raise ConfigError("model", f"exactly one model source is required, got {sources or 'none'}")
    source = sources[0]
    params = model[source]
    if not isinstance(params, dict):
        raise ConfigError(f"model.{source}", "must be an object")

    default_variant = "regularized" if source == "two_circle" else "les-lev"
    variant = data.get("variant", default_variant)
    if variant not in counting.VARIANTS:
        raise ConfigError("variant", f"expected one of {sorted(counting.VARIANTS)}, got {variant!r}")

    cfg = ExperimentConfig(exp, source, params, variant)
    if "grid_size" in data:
        cfg.grid_size = _number(data["grid_size"], "grid_size", integer=True, positive=True)
        if cfg.grid_size < 2:
            raise ConfigError("grid_size", "must be at least 2")
    if "k_max" in data:
        cfg.k_max = _number(data["k_max"], "k_max", integer=True, positive=True)
        if cfg.k_max > counting.MAX_K:
            raise ConfigError("k_max", f"must be at most {counting.MAX_K}")
    if "n_min" in data:
        cfg.n_min = _number(data["n_min"], "n_min", integer=True)
    out = data.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("output", "must be an object")
    cfg.out_dir = str(out.get("dir", "."))
    cfg.prefix = str(out.get("prefix", ""))
    if "lambda_probes" in data:
        probes = data["lambda_probes"]
        if not isinstance(probes, list) or not probes:
            raise ConfigError("lambda_probes", "must be a non-empty list")
        cfg.probes = [_number(p, f"lambda_probes[{i}]") for i, p in enumerate(probes)]
    if exp == "sweep":
        cuts = data.get("cutoffs")
        if not isinstance(cuts, list) or not cuts:
            raise ConfigError("cutoffs", "sweep needs a non-empty list of cutoffs")
        cfg.cutoffs = [_number(c, f"cutoffs[{i}]", positive=True) for i, c in enumerate(cuts)]
        if any(b <= a for a, b in zip(cfg.cutoffs, cfg.cutoffs[1:])):
            raise ConfigError("cutoffs", "must be strictly ascending")
    if exp in ("two-circle", "sweep") and source != "two_circle":
        raise ConfigError("model", f"experiment {exp!r} needs a two_circle model source")
    _check_model_params(cfg)
    return cfg


def _check_model_params(cfg: ExperimentConfig) -> None:
    p, where = cfg.model_params, f"model.{cfg.source}"
    if cfg.source == "random":
        for k in p:
            if k not in ("seed", "dim", "kind"):
                raise ConfigError(f"{where}.{k}", "unknown field")
        for k in ("seed", "dim"):
            if k not in p:
                raise ConfigError(f"{where}.{k}", "required")
            _number(p[k], f"{where}.{k}", integer=True)
        if p["dim"] < 2:
            raise ConfigError(f"{where}.dim", "must be at least 2")
        if p.get("kind", "mixed-commuting") not in MODEL_KINDS:
            raise ConfigError(f"{where}.kind", f"expected one of {list(MODEL_KINDS)}")
    elif cfg.source == "two_circle":
        for k in p:
            if k not in ("transmission", "S", "T", "mu_L", "mu_R", "cutoff", "beta"):
                raise ConfigError(f"{where}.{k}", "unknown field")
        if ("transmission" in p) == ("S" in p):
            raise ConfigError(where, "give exactly one of 'transmission' and 'S'")
        for k in ("T", "mu_L", "mu_R", "cutoff"):
            if k not in p:
                raise ConfigError(f"{where}.{k}", "required")
            _number(p[k], f"{where}.{k}", positive=k in ("T", "cutoff"))
        if "beta" in p:
            _number(p["beta"], f"{where}.beta", positive=True)
        if "transmission" in p:
            t = _number(p["transmission"], f"{where}.transmission")
            if not 0 <= t <= 1:
                raise ConfigError(f"{where}.transmission", "must lie in [0, 1]")
    elif cfg.source == "inline":
        if "dim" not in p:
            raise ConfigError(f"{where}.dim", "required")


def build_model(cfg: ExperimentConfig) -> QuantumModel:
    """Construct the model; constructor errors are reported against the model source."""
    p, where = cfg.model_params, f"model.{cfg.source}"
    try:
        if cfg.source == "random":
            return random_model(int(p["seed"]), int(p["dim"]), p.get("kind", "mixed-commuting"))
        if cfg.source == "inline":
            return QuantumModel.from_dict(p)
        spec = two_circle_spec(cfg)
        if "beta" in p:
            return scattering.thermal_two_circle(spec, float(p["beta"]))
        return scattering.build_two_circle(spec)
    except ConfigError:
        raise
    except (FCSError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from exc


def two_circle_spec(cfg: ExperimentConfig, cutoff: float | None = None) -> scattering.TwoCircleSpec:
    p, where = cfg.model_params, f"model.{cfg.source}"
    if "transmission" in p:
        S = scattering.ScatteringMatrix.from_transmission(float(p["transmission"]))
    else:
        try:
            arr = np.asarray(p["S"], dtype=float)
            if arr.shape != (2, 2, 2):
                raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.S", "expected a 2x2 matrix of [re, im] pairs") from None
        try:
            S = scattering.ScatteringMatrix.from_matrix(arr[..., 0] + 1j * arr[..., 1])
        except ValueError as exc:
            raise ConfigError(f"{where}.S", str(exc)) from None
    cut = float(p["cutoff"]) if cutoff is None else cutoff
    try:
        return scattering.TwoCircleSpec(S, float(p["T"]), float(p["mu_L"]), float(p["mu_R"]), cut)
    except (FCSError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from exc


def check_config(cfg: ExperimentConfig) -> tuple[QuantumModel, dict]:
    """Build the model and check it against the experiment; returns the model and its validation report."""
    model = build_model(cfg)
    report = validate(model)
    if not report.ok:
        raise ConfigError(f"model.{cfg.source}", f"model fails validation: {report.failures()}")
    if cfg.variant in COMMUTING_ONLY and not model.commuting and cfg.experiment not in ("diagnostics", "noise-split"):
        raise ConfigError("variant", f"{cfg.variant!r} needs [Q, rho] = 0; this model does not commute")
    if cfg.experiment == "oracle-check" and model.dim > fock.MAX_ORACLE_MODES:
        raise ConfigError(f"model.{cfg.source}", f"oracle-check supports dim <= {fock.MAX_ORACLE_MODES}")
    if cfg.experiment == "oracle-check" and cfg.variant == "regularized" and not model.commuting:
        raise ConfigError("variant", "the regularized determinant has no oracle for non-commuting states")
    return model, report.to_dict()


# --------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    return repr(float(x))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(payload: dict) -> str:
    return json.dumps({"fcs-schema": SCHEMA, **payload}, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def chi_csv(samples: counting.ChiSamples) -> str:
    rows = []
    for k, (lam, z) in enumerate(zip(samples.lambdas, samples.values)):
        lg = samples.log_values[k] if samples.log_values is not None else complex("nan")
        log_cols = [_fmt(lg.real), _fmt(lg.imag)] if samples.log_values is not None else ["", ""]
        rows.append([_fmt(lam), _fmt(z.real), _fmt(z.imag), *log_cols])
    return _csv_text(["lambda", "re_chi", "im_chi", "re_log_chi", "im_log_chi"], rows)


def distribution_csv(dist: counting.CountingDistribution) -> str:
    flag = int(dist.quasi)
    rows = [[int(n) if dist.denominator == 1 else _fmt(n), _fmt(p), flag] for n, p in zip(dist.n, dist.p)]
    return _csv_text(["n", "p_n", "quasi_flag"], rows)


def _cplx(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


# --------------------------------------------------------------------------
# experiments


class Runner:
    def __init__(self, cfg: ExperimentConfig, model: QuantumModel, report: dict, out: Path, threads: int = 1):
        self.cfg, self.model, self.report, self.out = cfg, model, report, out
        self.threads = max(1, threads)
        self.files: dict[str, str] = {}

    def emit(self, name: str, text: str) -> None:
        self.files[self.cfg.prefix + name] = text

    def sample(self, unwrap: bool = True) -> counting.ChiSamples:
        cfg = self.cfg
        f = counting.chi_function(self.model, cfg.variant)
        kw = dict(n_min=cfg.n_min, unwrap=unwrap, periods=counting.half_periods(self.model, cfg.variant))
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as ex:
                return counting.sample_function(f, cfg.grid_size, cfg.variant, map_fn=ex.map, **kw)
        return counting.sample_function(f, cfg.grid_size, cfg.variant, **kw)

    def base(self) -> dict:
        return {
            "experiment": self.cfg.experiment,
            "variant": self.cfg.variant,
            "model": {"source": self.cfg.source, "dim": self.model.dim, "label": self.model.label,
                      "commuting": bool(self.model.commuting), "pure": bool(self.model.pure)},
            "validation": self.report,
        }

    def run(self) -> dict:
        result = getattr(self, "exp_" + self.cfg.experiment.replace("-", "_"))()
        summary = {**self.base(), **result, "files": sorted(self.files) + [self.cfg.prefix + "result.json"]}
        self.emit("result.json", _json_text(summary))
        for name, text in self.files.items():
            _atomic_write(self.out / name, text)
        return summary

    def exp_chi(self) -> dict:
        samples = self.sample(unwrap=True)
        self.emit("chi.csv", chi_csv(samples))
        return {"grid_size": samples.size}

    def exp_cumulants(self) -> dict:
        samples = self.sample(unwrap=False)
        c = counting.cumulants_from_chi(samples, self.cfg.k_max)
        out = {"cumulants": [float(v) for v in c.values], "method": c.method, "max_imag": c.meta["max_imag"]}
        if self.model.commuting and self.cfg.variant in ("les-lev", "regularized", "collapse"):
            out["trace_formula"] = [float(v) for v in counting.trace_cumulants(self.model).values]
        return out

    def exp_distribution(self) -> dict:
        samples = self.sample(unwrap=False)
        dist = counting.distribution_from_chi(samples)
        self.emit("distribution.csv", distribution_csv(dist))
        n_min = float(dist.n[0]) if dist.denominator > 1 else int(dist.n[0])
        return {"n_min": n_min, "n_max": dist.n_max, "total": float(dist.total()), "quasi": dist.quasi,
                "imag_residue": dist.imag_residue, "min_p": float(np.min(dist.p))}

    def exp_two_circle(self) -> dict:
        spec = two_circle_spec(self.cfg)
        beta = self.cfg.model_params.get("beta")
        samples = self.sample(unwrap=True)
        self.emit("chi.csv", chi_csv(samples))
        n_in, n_out = scattering.window_counts(spec)
        tr = spec.S.transmission
        mean = counting.mean_charge(self.model)[1]
        thermal, shot = counting.noise_split(self.model)
        out = {
            "transmission": tr, "T": spec.T, "mu_L": spec.mu_L, "mu_R": spec.mu_R, "cutoff": spec.cutoff,
            "beta": beta, "n_in": n_in, "n_out": n_out, "window_count": n_in - n_out,
            "conductance": scattering.conductance(tr),
            "mean_charge": mean,
            "ohm_reference": scattering.reference_noise("ohm", transmission=tr, V=scattering.grid_bias(spec), T=spec.T),
            "noise": {"thermal": thermal, "shot": shot, "kappa2": thermal + shot},
        }
        if beta is None:
            closed = scattering.two_circle_chi(spec, samples.lambdas)
            out["max_deviation_closed_form"] = float(np.max(np.abs(samples.values - closed)))
            out["noise"]["lesovik_khlus"] = scattering.reference_noise(
                "lesovik-khlus", meanQ=abs(mean), transmission=tr)
        else:
            out["noise"]["johnson_nyquist_per_time"] = scattering.reference_noise(
                "johnson-nyquist", G=scattering.conductance(tr), beta=float(beta))
            out["noise"]["kappa2_per_time"] = (thermal + shot) / spec.T
        return out

    def exp_noise_split(self) -> dict:
        thermal, shot = counting.noise_split(self.model)
        naive, reg = counting.mean_charge(self.model)
        return {"thermal": thermal, "shot": shot, "kappa2_trace": counting.noise_trace(self.model),
                "mean_charge": naive, "mean_charge_regularized": reg}

    def exp_sweep(self) -> dict:
        spec = two_circle_spec(self.cfg, cutoff=self.cfg.cutoffs[0])
        beta = self.cfg.model_params.get("beta")
        try:
            rep = limit.cutoff_sweep(spec, self.cfg.cutoffs, self.cfg.probes, beta=beta, workers=self.threads)
        except (FCSError, ValueError) as exc:
            if isinstance(exc, NumericalFailure):
                raise
            raise ConfigError("cutoffs", str(exc)) from exc
        self.emit("sweep.json", _json_text({k: v for k, v in rep.to_dict().items() if k != "fcs-schema"}))
        self.emit("sweep.csv", rep.to_csv())
        return {"chi_reg_drift": rep.chi_reg_drift(), "max_identity_deviation": rep.max_identity_deviation(),
                "tr_rhoQ": [float(x) for x in rep.tr_rhoQ()]}

    def exp_diagnostics(self) -> dict:
        d = limit.trace_class_diagnostics(self.model)
        return {"diagnostics": d, "noise_bound": limit.noise_bound(self.model),
                "trace_shift": limit.trace_shift(self.model),
                "identity_deviation": limit.regularization_identity_check(self.model, self.cfg.probes)}

    def exp_oracle_check(self) -> dict:
        m, v = self.model, self.cfg.variant
        lambdas = 2 * np.pi * np.arange(self.cfg.grid_size) / self.cfg.grid_size
        f = counting.chi_function(m, v)
        if v in ("les-lev", "regularized", "collapse"):
            ref = fock.chi_oracle(m, lambdas)
        else:
            oracle = fock.chi_oracle_single_measurement if v == "single-measurement" else fock.chi_oracle_spin
            ref = np.array([oracle(m, l) for l in lambdas])
        dev = float(np.max(np.abs(np.array([f(l) for l in lambdas]) - ref)))
        if dev > ORACLE_TOL:
            raise OracleMismatch(f"max deviation {dev:.3e} exceeds {ORACLE_TOL}")
        return {"max_deviation": dev, "tolerance": ORACLE_TOL, "passed": True,
                "report": f"max deviation {dev:.3e} <= {ORACLE_TOL:g}"}


# --------------------------------------------------------------------------
# entry point


def _error(code: int, exc: BaseException, field: str | None = None) -> int:
    rec = {"fcs-schema": SCHEMA, "status": "error", "exit_code": code,
           "error": type(exc).__name__, "message": str(exc)}
    if field is not None:
        rec["field"] = field
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    return code


def load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return parse_config(data)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fcs", description="Full counting statistics experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides output.dir)")
    p_run.add_argument("--threads", type=int, default=1, help="worker threads for lambda samples and sweep points")
    p_val = sub.add_parser("validate", help="check a config and its model without running")
    p_val.add_argument("config")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = load_config(args.config)
        model, report = check_config(cfg)
        if args.command == "validate":
            print(json.dumps({"fcs-schema": SCHEMA, "status": "ok", "experiment": cfg.experiment,
                              "dim": model.dim, "validation": report}, sort_keys=True))
            return EXIT_OK
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        out = Path(args.out if args.out is not None else cfg.out_dir)
        summary = Runner(cfg, model, report, out, args.threads).run()
        print(json.dumps({"fcs-schema": SCHEMA, "status": "ok", "files": summary["files"]}, sort_keys=True))
        return EXIT_OK
    except ConfigError as exc:
        return _error(EXIT_INVALID, exc, exc.field)
    except NumericalFailure as exc:
        return _error(EXIT_NUMERICAL, exc)
    except FCSError as exc:
        return _error(EXIT_INVALID, exc)


if __name__ == "__main__":
    sys.exit(main())
