"""Config-driven batch experiment driver with deterministic CSV output.

Configs are flat ``key = value`` text files (``#`` comments); positional
``key=value`` arguments override file entries.  Every run writes one CSV
in the schema owned by the experiment plus a ``.meta`` sidecar listing the
resolved parameters and artifact version.  All randomness flows from a
single counter-based generator seeded from the config, so outputs are
byte-identical for identical (config, seed).

Exit codes: 0 ok, 2 config error, 3 numeric/capacity error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .detector import (
    CoefficientPair,
    apply_phase_correction,
    cascade_closed_form,
    cascade_simulate,
    detect,
    detector_probe_state,
    twin_beam_state,
)
from .fock import CapacityError, format_float
from .kerr import homodyne_condition, homodyne_pdf, make_rng, midpoint_threshold
from .pdc import six_photon_mixture, squeezed_weights
from .schemes import (
    build_psi_theta,
    decode_table,
    ghz_circuit,
    ghz_state,
    interval_probabilities,
    psi_theta_reference,
    sample_ghz_circuit,
    w_pair_state,
)


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # "float" | "int" | "str"
    required: bool = False
    default: object = None
    doc: str = ""


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    columns: str
    params: tuple[Param, ...]
    runner: Callable[[dict], list[tuple]]
    checker: Callable[[dict], list[str]] | None = None


def _parse_value(param: Param, raw: str):
    try:
        if param.kind == "float":
            return float(raw)
        if param.kind == "int":
            return int(raw)
        return raw
    except ValueError:
        raise ConfigError(f"parameter {param.name!r} expects a {param.kind}, got {raw!r}") from None


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat key = value lines; raises with line numbers on bad syntax."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def resolve_config(source: str, overrides: list[str]) -> dict[str, str]:
    """Load a config file (or start from a bare experiment name) plus overrides."""
    path = Path(source)
    if path.is_file():
        values = parse_config_text(path.read_text())
    elif source in EXPERIMENTS:
        values = {"experiment": source}
    else:
        raise ConfigError(f"config file {source!r} not found")
    for item in overrides:
        key, eq, value = item.partition("=")
        if not eq or not key or not value:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        values[key.strip()] = value.strip()
    return values


def typed_params(experiment: Experiment, values: dict[str, str]) -> dict:
    known = {p.name: p for p in experiment.params}
    typed: dict = {}
    for key, raw in values.items():
        if key == "experiment":
            continue
        if key not in known:
            raise ConfigError(
                f"unknown parameter {key!r} for experiment {experiment.name!r}"
            )
        typed[key] = _parse_value(known[key], raw)
    for param in experiment.params:
        if param.name in typed:
            continue
        if param.required:
            raise ConfigError(f"missing required parameter {param.name!r}")
        if param.default is not None:
            typed[param.name] = param.default
    return typed


def _check_seed(typed: dict) -> list[str]:
    seed = typed.get("seed")
    if seed is not None and not 0 <= seed < 2**64:
        return ["parameter 'seed' must be an unsigned 64-bit integer"]
    return []


def _check_pair(typed: dict) -> list[str]:
    if typed.get("m0") == 0.0 and typed.get("n0") == 0.0:
        return ["parameters 'm0' and 'n0' must not both be zero"]
    return []


# -- experiment runners ---------------------------------------------------


def _normalized_pair(typed: dict) -> CoefficientPair:
    return CoefficientPair(typed["m0"], typed["n0"]).normalized()


def _cascade_rows(typed: dict, steps: int) -> list[tuple]:
    pair0 = _normalized_pair(typed)
    run = cascade_simulate(pair0, steps, typed["alpha"], typed["theta"])
    rows = []
    cumulative = 1.0
    for k in range(1, steps + 1):
        closed = cascade_closed_form(pair0, k)
        cumulative *= run.step_probabilities[k - 1]
        rows.append(
            (
                k,
                closed.m_k,
                closed.n_k,
                closed.ratio,
                closed.c_k,
                run.step_probabilities[k - 1],
                cumulative,
                closed.fidelity_with_target,
            )
        )
    return rows


def run_cascade(typed: dict) -> list[tuple]:
    return _cascade_rows(typed, typed["k"])


def run_symmetry_detect(typed: dict) -> list[tuple]:
    # one detector pass is the depth-1 cascade
    return _cascade_rows(typed, 1)


def run_psi_theta(typed: dict) -> list[tuple]:
    grid = typed["grid"]
    if grid < 2:
        raise ConfigError("parameter 'grid' must be at least 2")
    ghz_ref = ghz_state()
    w_ref = w_pair_state(False)
    w_ref_flipped = w_pair_state(True)
    rows = []
    for theta in np.linspace(0.0, math.pi / 2.0, grid):
        result = build_psi_theta(float(theta))
        reference = psi_theta_reference(float(theta))
        rows.append(
            (
                float(theta),
                result.postselect_probability,
                result.state.fidelity(ghz_ref),
                result.state.fidelity(w_ref) + result.state.fidelity(w_ref_flipped),
                result.state.fidelity(reference),
            )
        )
    return rows


def _check_ghz(typed: dict) -> list[str]:
    errors = _check_seed(typed)
    try:
        decode_table(typed["alpha"], typed["theta"])
    except ValueError as exc:
        errors.append(f"parameter 'theta' rejected: {exc}")
    if typed.get("samples", 0) > 0 and typed.get("seed") is None:
        errors.append("parameter 'seed' is required when samples > 0")
    return errors


def run_ghz_circuit(typed: dict) -> list[tuple]:
    alpha, theta = typed["alpha"], typed["theta"]
    table = decode_table(alpha, theta)
    prepared = build_psi_theta(math.pi / 2.0).state
    target = ghz_state()
    samples = typed.get("samples", 0)
    rows = []
    if samples > 0:
        rng = make_rng(typed["seed"])
        counts = [0] * len(table.intervals)
        fidelity_sums = [0.0] * len(table.intervals)
        for corrected, interval, _ in sample_ghz_circuit(prepared, alpha, theta, rng, samples):
            counts[interval] += 1
            fidelity_sums[interval] += corrected.fidelity(target)
        for interval in table.intervals:
            i = interval.index
            frequency = counts[i] / samples
            fidelity = fidelity_sums[i] / counts[i] if counts[i] else math.nan
            rows.append(
                (i, interval.branch, interval.x_lo, interval.x_hi, frequency, fidelity)
            )
        return rows
    probabilities = interval_probabilities(prepared, alpha, theta)
    for interval in table.intervals:
        corrected, _ = ghz_circuit(prepared, alpha, theta, x=table.peak_center(interval))
        fidelity = corrected.fidelity(target) if corrected is not None else 0.0
        rows.append(
            (
                interval.index,
                interval.branch,
                interval.x_lo,
                interval.x_hi,
                probabilities[interval.index],
                fidelity,
            )
        )
    return rows


def _check_pdc(typed: dict) -> list[str]:
    has_tau = "tau" in typed
    has_k = "k" in typed
    if has_tau == has_k:
        return ["exactly one of 'tau' (squeezed expansion) or 'k' (mixture) is required"]
    if has_tau and typed["tau"] < 0:
        return ["parameter 'tau' must be non-negative"]
    if has_k and typed["k"] < 1:
        return ["parameter 'k' must be at least 1"]
    return []


def run_pdc_weights(typed: dict) -> list[tuple]:
    if "k" in typed:
        mixture = six_photon_mixture(typed["k"])
        # amplitudes print as real parts; for 1 < k < 2 the three-pair
        # closed form turns imaginary and prints as zero (see README)
        a3, a21, a111 = (a.real for a in mixture.amps)
        return [(typed["k"], a3, a21, a111)]
    expansion = squeezed_weights(typed["tau"], typed["n_max"])
    # rows with exactly zero amplitude carry no information (tau = 0)
    return [(n, w, w * w) for n, w in enumerate(expansion.weights) if w != 0.0]


def run_homodyne_sweep(typed: dict) -> list[tuple]:
    alpha, theta = typed["alpha"], typed["theta"]
    grid = typed["grid"]
    if grid < 2:
        raise ConfigError("parameter 'grid' must be at least 2")
    pair = _normalized_pair(typed)
    state = twin_beam_state(pair)
    tagged = detector_probe_state(state, alpha, theta)
    threshold = midpoint_threshold(alpha, theta)
    symmetric_target = tagged.branch(0)
    asymmetric_target = detect(state, alpha, theta, force="asymmetric").state \
        if abs(pair.m - pair.n) > 1e-12 else None
    x_lo = 2.0 * alpha * math.cos(theta) - 8.0
    x_hi = 2.0 * alpha + 8.0
    rows = []
    for x in np.linspace(x_lo, x_hi, grid):
        x = float(x)
        pdf = homodyne_pdf(tagged, x)
        conditioned = homodyne_condition(tagged, x)
        if x > threshold:
            interval = 0
            target = symmetric_target
        else:
            interval = 1
            target = asymmetric_target
            if conditioned is not None:
                phi = (alpha * math.sin(theta) * (x - 2.0 * alpha * math.cos(theta))) % (
                    2.0 * math.pi
                )
                conditioned = apply_phase_correction(conditioned, phi, "b")
        fidelity = conditioned.fidelity(target) if conditioned is not None and target is not None else 0.0
        rows.append((x, pdf, interval, fidelity))
    return rows


_PAIR_PARAMS = (
    Param("m0", "float", required=True, doc="first twin-beam coefficient (rescaled to m^2+n^2=1/2)"),
    Param("n0", "float", required=True, doc="second twin-beam coefficient"),
)
_PROBE_PARAMS = (
    Param("alpha", "float", default=1000.0, doc="coherent probe amplitude"),
    Param("theta", "float", default=0.1, doc="base Kerr phase in radians"),
)
_OUTPUT_PARAM = Param("output", "str", doc="output CSV path (default <experiment>.csv)")

EXPERIMENTS: dict[str, Experiment] = {
    exp.name: exp
    for exp in (
        Experiment(
            name="cascade",
            description="iterated symmetry detection, closed form vs simulation",
            columns="k,m_k,n_k,ratio,C_k,step_success_prob,cumulative_prob,fidelity_psi3",
            params=_PAIR_PARAMS
            + (Param("k", "int", required=True, doc="number of detector passes (max 30)"),)
            + _PROBE_PARAMS
            + (_OUTPUT_PARAM,),
            runner=run_cascade,
            checker=_check_pair,
        ),
        Experiment(
            name="symmetry-detect",
            description="single symmetry-detector pass (depth-1 cascade row)",
            columns="k,m_k,n_k,ratio,C_k,step_success_prob,cumulative_prob,fidelity_psi3",
            params=_PAIR_PARAMS + _PROBE_PARAMS + (_OUTPUT_PARAM,),
            runner=run_symmetry_detect,
            checker=_check_pair,
        ),
        Experiment(
            name="psi-theta",
            description="six-mode preparation pipeline over a rotation-angle grid",
            columns="theta,postselect_prob,ghz_weight,w_pair_weight,fidelity_vs_reference",
            params=(
                Param("grid", "int", default=20, doc="number of theta points on [0, pi/2]"),
                _OUTPUT_PARAM,
            ),
            runner=run_psi_theta,
        ),
        Experiment(
            name="ghz-circuit",
            description="homodyne interval decoding of the uniform-polarization pair",
            columns="interval,k,x_lo,x_hi,probability,fidelity_after_correction",
            params=_PROBE_PARAMS
            + (
                Param("samples", "int", default=0, doc="sampled draws (0 = exact analysis)"),
                Param("seed", "int", doc="generator seed, required when samples > 0"),
                _OUTPUT_PARAM,
            ),
            runner=run_ghz_circuit,
            checker=_check_ghz,
        ),
        Experiment(
            name="pdc-weights",
            description="pair-order expansion (tau) or six-photon mixture (k)",
            columns="n,amplitude,probability | k,a3,a21,a111",
            params=(
                Param("tau", "float", doc="squeezing interaction parameter"),
                Param("n_max", "int", default=80, doc="truncation order of the expansion"),
                Param("k", "float", doc="pulse-duration ratio for the mixture"),
                _OUTPUT_PARAM,
            ),
            runner=run_pdc_weights,
            checker=_check_pdc,
        ),
        Experiment(
            name="homodyne-sweep",
            description="detector quadrature sweep: density, interval, repaired fidelity",
            columns="x,pdf,interval_index,fidelity_after_correction",
            params=_PAIR_PARAMS
            + _PROBE_PARAMS
            + (
                Param("grid", "int", default=200, doc="number of quadrature points"),
                _OUTPUT_PARAM,
            ),
            runner=run_homodyne_sweep,
            checker=_check_pair,
        ),
    )
}


def _experiment_for(values: dict[str, str]) -> Experiment:
    name = values.get("experiment")
    if name is None:
        raise ConfigError("missing required field 'experiment'")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; choose one of {', '.join(sorted(EXPERIMENTS))}"
        )
    return EXPERIMENTS[name]


def _pdc_columns(typed: dict) -> str:
    return "k,a3,a21,a111" if "k" in typed else "n,amplitude,probability"


def _format_cell(value) -> str:
    if isinstance(value, bool):
        raise TypeError("boolean cells are not part of any schema")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(float(value))


def _output_path(experiment: Experiment, typed: dict) -> Path:
    configured = typed.get("output") or f"{experiment.name}.csv"
    path = Path(configured)
    out_dir = os.environ.get("FOCKSIM_OUT_DIR")
    if out_dir and not path.is_absolute():
        path = Path(out_dir) / path
    return path


def _write_outputs(experiment: Experiment, typed: dict, rows: list[tuple]) -> Path:
    columns = experiment.columns
    if experiment.name == "pdc-weights":
        columns = _pdc_columns(typed)
    path = _output_path(experiment, typed)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [columns]
    lines += [",".join(_format_cell(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    meta_lines = [
        f"artifact_version = {__version__}",
        f"experiment = {experiment.name}",
    ]
    recorded = dict(typed)
    recorded.setdefault("output", f"{experiment.name}.csv")
    for key in sorted(recorded):
        value = recorded[key]
        rendered = format_float(value) if isinstance(value, float) else str(value)
        meta_lines.append(f"{key} = {rendered}")
    Path(str(path) + ".meta").write_text("\n".join(meta_lines) + "\n")
    return path


def _collect_errors(values: dict[str, str]) -> list[str]:
    try:
        experiment = _experiment_for(values)
    except ConfigError as exc:
        return [str(exc)]
    try:
        typed = typed_params(experiment, values)
    except ConfigError as exc:
        return [str(exc)]
    if experiment.checker is not None:
        return experiment.checker(typed)
    return []


def cmd_run(args: argparse.Namespace) -> int:
    values = resolve_config(args.config, args.overrides)
    experiment = _experiment_for(values)
    typed = typed_params(experiment, values)
    if experiment.checker is not None:
        errors = experiment.checker(typed)
        if errors:
            raise ConfigError("; ".join(errors))
    rows = experiment.runner(typed)
    path = _write_outputs(experiment, typed, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    path = Path(args.config)
    if not path.is_file():
        print(f"error: config file {args.config!r} not found")
        return 2
    try:
        values = parse_config_text(path.read_text())
    except ConfigError as exc:
        print(f"error: {exc}")
        return 2
    errors = _collect_errors(values)
    if errors:
        for message in errors:
            print(f"error: {message}")
        return 2
    print("ok")
    return 0


def cmd_list(_: argparse.Namespace) -> int:
    for name in sorted(EXPERIMENTS):
        experiment = EXPERIMENTS[name]
        print(f"{name}: {experiment.description}")
        print(f"  columns: {experiment.columns}")
        for param in experiment.params:
            tag = "required" if param.required else (
                f"default {param.default}" if param.default is not None else "optional"
            )
            print(f"  {param.name} ({param.kind}, {tag}): {param.doc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="focksim",
        description="deterministic few-photon circuit experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="run an experiment config")
    run_parser.add_argument("config", help="config file path or bare experiment name")
    run_parser.add_argument("overrides", nargs="*", help="key=value overrides")
    run_parser.set_defaults(func=cmd_run)
    validate_parser = sub.add_parser("validate", help="check a config without running it")
    validate_parser.add_argument("config", help="config file path")
    validate_parser.set_defaults(func=cmd_validate)
    list_parser = sub.add_parser("list", help="print experiments and their parameters")
    list_parser.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # parameter combinations the library itself refuses
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
