"""Pipeline execution: source -> noise -> purification -> analysis, and parameter sweeps."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analysis import EfficiencyModel, chsh, efficiency_block, key_rate
from .channels import fiber_transmittance
from .config import ConfigError, ExperimentConfig, parse_config
from .purify import purify_with_conversion
from .qmath import (
    SYNTHETIC_TOL,
    UnphysicalStateError,
    fidelity,
    fidelity_pure,
    matrix_to_dict,
    symmetrize,
    validate_state,
)
from .states import bell_state, hyper_state, ideal_hyper_state, polarization_marginal, spatial_marginal
from .tomography import tomograph

REPORT_FORMAT = "hyperpurify.report/1"


class NumericalFailure(RuntimeError):
    """Physicality or purification failure; maps to CLI exit code 2."""


_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_MATRIX = {
    "type": "object",
    "required": ["rows", "cols", "re", "im"],
    "properties": {
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "re": {"type": "array", "items": _NUM},
        "im": {"type": "array", "items": _NUM},
    },
}
_KEY = {
    "type": "object",
    "required": ["qber_z", "qber_f", "qber", "raw_rate", "effective_rate"],
    "properties": {k: _NUM for k in ("qber_z", "qber_f", "qber", "raw_rate", "effective_rate")},
}
_CHSH = {"type": "object", "required": ["s_fixed", "s_max", "settings"], "properties": {"s_fixed": _NUM, "s_max": _NUM}}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hyperpurify experiment report",
    "type": "object",
    "required": ["format", "config", "fidelities", "purification", "rates", "provenance"],
    "properties": {
        "format": {"const": REPORT_FORMAT},
        "config": {"type": "object"},
        "fidelities": {
            "type": "object",
            "required": ["before", "after", "predicted"],
            "properties": {
                "before": {
                    "type": "object",
                    "required": ["polarization", "spatial"],
                    "properties": {"polarization": _NUM, "spatial": _NUM},
                },
                "after": _NUM,
                "predicted": _NUM_OR_NULL,
            },
        },
        "purification": {
            "type": "object",
            "required": ["success_probability", "branch_probabilities", "predicted_fidelity",
                         "achieved_fidelity", "output_matrix"],
            "properties": {
                "success_probability": _NUM,
                "branch_probabilities": {
                    "type": "object",
                    "required": ["D1D2", "D3D4", "discard"],
                    "properties": {"D1D2": _NUM, "D3D4": _NUM, "discard": _NUM},
                },
                "predicted_fidelity": _NUM_OR_NULL,
                "achieved_fidelity": _NUM,
                "output_matrix": _MATRIX,
            },
        },
        "qkd": {"type": "object", "required": ["before", "after"], "properties": {"before": _KEY, "after": _KEY}},
        "chsh": {
            "type": "object",
            "required": ["before", "before_spatial", "after"],
            "properties": {"before": _CHSH, "before_spatial": _CHSH, "after": _CHSH},
        },
        "efficiency": {"type": "object", "additionalProperties": _NUM},
        "rates": {
            "type": "object",
            "required": ["source", "purified", "eta"],
            "properties": {"source": _NUM, "purified": _NUM, "eta": _NUM},
        },
        "tomography": {"type": "object"},
        "provenance": {
            "type": "object",
            "required": ["seed", "version", "timestamp"],
            "properties": {"seed": {"type": "integer"}, "version": {"type": "string"},
                           "timestamp": {"type": ["string", "null"]}},
        },
    },
}


def source_state(cfg: ExperimentConfig) -> np.ndarray:
    src = cfg.raw["source"]
    if src["kind"] == "ideal":
        return ideal_hyper_state()
    tol = src.get("tol", SYNTHETIC_TOL)
    pol, spa = cfg.load_fixtures()
    for label, m in (("polarization", pol), ("spatial", spa)):
        verdict = validate_state(m, tol)
        if not verdict:
            raise NumericalFailure(f"{label} fixture rejected: {'; '.join(verdict.violations)}")
    # printed matrices are Hermitian only to rounding; (rho + rho^H) / 2 after the check
    return hyper_state(symmetrize(pol), symmetrize(spa), tol=tol)


def _stamp() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def run(cfg: ExperimentConfig, *, timestamp: bool = False) -> dict:
    """Execute one configuration and return the report as a JSON-ready dict."""
    try:
        rho0 = source_state(cfg)
        noise = cfg.noise
        rho = noise.apply(rho0, check=False)
        outcome = purify_with_conversion(rho, noise.flavor, check=False)
    except UnphysicalStateError as exc:
        raise NumericalFailure(str(exc)) from None
    if outcome.always_discard:
        raise NumericalFailure("purification always discards for this configuration")

    phi = bell_state("PhiPlus")
    pol, spa, out = polarization_marginal(rho), spatial_marginal(rho), outcome.output
    f_pol, f_spa = fidelity_pure(pol, phi), fidelity_pure(spa, phi)
    eta = fiber_transmittance(noise.fiber)

    report = {
        "format": REPORT_FORMAT,
        "config": cfg.to_dict(),
        "fidelities": {
            "before": {"polarization": f_pol, "spatial": f_spa},
            "after": outcome.achieved_fidelity,
            "predicted": outcome.predicted_fidelity,
        },
        "purification": outcome.to_dict(),
        "states": {"polarization_before": matrix_to_dict(pol), "spatial_before": matrix_to_dict(spa)},
        "rates": {
            "source": cfg.source_rate,
            "purified": cfg.source_rate * outcome.success_probability,
            "eta": eta,
        },
    }

    analysed = {"pol": pol, "spa": spa, "out": out}
    counting = cfg.counting
    if counting is not None:
        rng = np.random.default_rng(cfg.seed)
        tomo = {}
        for key, label in (("pol", "polarization_before"), ("spa", "spatial_before"), ("out", "after")):
            rec = tomograph(analysed[key], counting, rng=rng)
            tomo[label] = {
                "record": rec.to_dict(),
                "fidelity_to_truth": fidelity(rec.physical, analysed[key]),
                "fidelity_phi_plus": fidelity_pure(rec.physical, phi),
            }
            analysed[key] = rec.physical
        report["tomography"] = {"analysis_states": "reconstructed", **tomo}

    flags = cfg.analyses
    if flags["qkd"]:
        report["qkd"] = {"before": key_rate(analysed["pol"]).to_dict(), "after": key_rate(analysed["out"]).to_dict()}
    if flags["chsh"]:
        report["chsh"] = {
            "before": chsh(analysed["pol"]).to_dict(),
            "before_spatial": chsh(analysed["spa"]).to_dict(),
            "after": chsh(analysed["out"]).to_dict(),
        }
    if flags["efficiency"]:
        e = cfg.efficiency
        em = EfficiencyModel(e["C"], e["epsilon"], e["rep_rate"], outcome.success_probability, eta)
        report["efficiency"] = efficiency_block(em)

    report["provenance"] = {"seed": cfg.seed, "version": __version__, "timestamp": _stamp() if timestamp else None}
    _check_finite(report)
    return report


def _check_finite(obj, path="report"):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise NumericalFailure(f"non-finite value at {path}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def point_config(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    """The configuration of one sweep grid point (sweep block removed)."""
    raw = copy.deepcopy(cfg.raw)
    sweep = raw.pop("sweep")
    noise = raw["noise"]
    if sweep["parameter"] == "noise_fraction":
        noise["f_pol"] = value
        noise["f_spa"] = value
    else:
        noise.setdefault("fiber", {})["length_km"] = value
    return parse_config(raw, cfg.base_dir)


def sweep(cfg: ExperimentConfig, *, timestamp: bool = False) -> list[dict]:
    """One report per grid value, in grid order."""
    if cfg.sweep is None:
        raise ConfigError("configuration has no sweep block")
    values = cfg.sweep["values"]
    if not all(math.isfinite(v) for v in values):
        raise ConfigError("sweep values must be finite")
    return [run(point_config(cfg, v), timestamp=timestamp) for v in values]


SUMMARY_COLUMNS = (
    "parameter", "value", "F_P_before", "F_S_before", "F_after", "F_predicted",
    "R_before", "R_after", "S_before", "S_after", "success_probability", "purified_rate", "eta",
)


def summary_row(report: dict, parameter: str | None = None, value: float | None = None) -> dict:
    qkd = report.get("qkd")
    ch = report.get("chsh")
    return {
        "parameter": parameter or "",
        "value": value if value is not None else "",
        "F_P_before": report["fidelities"]["before"]["polarization"],
        "F_S_before": report["fidelities"]["before"]["spatial"],
        "F_after": report["fidelities"]["after"],
        "F_predicted": report["fidelities"]["predicted"],
        "R_before": qkd["before"]["effective_rate"] if qkd else "",
        "R_after": qkd["after"]["effective_rate"] if qkd else "",
        "S_before": ch["before"]["s_max"] if ch else "",
        "S_after": ch["after"]["s_max"] if ch else "",
        "success_probability": report["purification"]["success_probability"],
        "purified_rate": report["rates"]["purified"],
        "eta": report["rates"]["eta"],
    }


def sweep_rows(cfg: ExperimentConfig, reports: list[dict]) -> list[dict]:
    p = cfg.sweep["parameter"]
    return [summary_row(r, p, v) for r, v in zip(reports, cfg.sweep["values"])]


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
